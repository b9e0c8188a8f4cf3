#include <catch_amalgamated.hpp>

#include <cmath>

#include <mpc/instance.hpp>
#include <mpc/solvers.hpp>

using namespace mpc;

namespace {

// Rebuilds the normalized state and walks the recorded events, re-checking
// eligibility of every incremented column against a freshly maintained state.
void replay(const MixedInstance& inst, const SolveConfig& cfg,
            const SolveOutcome& out) {
  const double eps = cfg.epsilon;
  NormalizedInstance ni = normalize(inst, out.stats.N);
  PotentialState st(ni);
  const int n = ni.num_retained_vars();

  if (cfg.algorithm == Algorithm::parallel) {
    std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      double mp = 0.0, mc = 0.0;
      for (const SparseTerm& t : ni.packing.col(j)) mp = std::max(mp, t.value);
      for (const SparseTerm& t : ni.covering.col(j)) mc = std::max(mc, t.value);
      if (mc <= 0.0) continue;
      x0[static_cast<std::size_t>(j)] = mp > 0.0 ? 1.0 / (n * mp) : 1.0 / (n * mc);
    }
    st.set_x(x0);
  }

  const double rho = (1.0 + eps) * (1.0 + eps) / (1.0 - eps / 2.0);
  double log_g = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> crossed;
  std::vector<double> dx(static_cast<std::size_t>(n));

  for (const TraceEvent& ev : out.trace.events) {
    if (ev.kind == TraceEventKind::phase_start) {
      st.refresh_shifts();  // solvers re-anchor the sums at every phase start
      // the frozen phase constant must match global(x) at phase start
      if (std::isfinite(ev.log_g))
        CHECK(ev.log_g == Catch::Approx(st.log_global()).margin(1e-7));
      else
        CHECK(st.log_global() == ev.log_g);
      log_g = ev.log_g;
      continue;
    }
    if (ev.kind == TraceEventKind::deletion) {
      st.deactivate_row(ev.row);
      continue;
    }

    // eligibility of every incremented column, checked before applying
    for (const auto& [j, alpha] : ev.cols) {
      if (cfg.algorithm == Algorithm::generic) {
        double pc = st.partial_cover(j);
        REQUIRE(pc > 0.0);
        CHECK(st.partial_pack(j) / pc <= 1.0 + eps + 1e-7);
      } else {
        REQUIRE_FALSE(std::isnan(log_g));
        // holds with log_g = -inf too: only columns with empty packing
        // support (log_local = -inf) are eligible then
        CHECK(st.log_local(j) <= std::log1p(eps) + log_g + 1e-7);
      }
      CHECK(alpha > 0.0);
    }

    if (ev.cols.size() == 1) {
      st.increment(ev.cols[0].first, ev.cols[0].second, &crossed);
    } else {
      std::fill(dx.begin(), dx.end(), 0.0);
      for (const auto& [j, alpha] : ev.cols) dx[static_cast<std::size_t>(j)] = alpha;
      st.increment_bulk(dx, &crossed);
    }
    crossed.clear();

    double phi = st.lmax_px() - rho * st.lmin_cx();
    double psi = st.sum_px() + st.sum_cx_active() -
                 st.active_count() * (out.stats.N + eps);
    if (std::isfinite(ev.phi))
      CHECK(phi == Catch::Approx(ev.phi).margin(1e-6).epsilon(1e-9));
    CHECK(psi == Catch::Approx(ev.psi).margin(1e-6).epsilon(1e-9));
    if (std::isfinite(ev.lmax_px))
      CHECK(st.lmax_px() == Catch::Approx(ev.lmax_px).margin(1e-7));
    else
      CHECK(st.lmax_px() == ev.lmax_px);
    if (st.active_count() > 0)
      CHECK(st.lmin_cx() == Catch::Approx(ev.lmin_cx).margin(1e-7));
  }

  // the replayed x lifts to the returned solution exactly
  std::vector<double> lifted(static_cast<std::size_t>(inst.num_vars), 0.0);
  for (int j = 0; j < n; ++j)
    lifted[static_cast<std::size_t>(ni.col_map[j])] = st.x()[j];
  CHECK(lifted == out.x);
}

void run_and_replay(const MixedInstance& inst, Algorithm alg, double eps) {
  SolveConfig cfg;
  cfg.algorithm = alg;
  cfg.epsilon = eps;
  cfg.record_trace = true;
  SolveOutcome out = solve(inst, cfg);
  REQUIRE(out.status == SolveStatus::feasible);

  INFO(to_string(alg) << " eps " << eps);
  // scalar invariants maintained online
  CHECK(out.trace.max_phi_rise <= 1e-9);
  CHECK(out.trace.min_psi_gain >= eps - 1e-9);
  CHECK(out.trace.increments == out.stats.increments);
  CHECK(out.trace.deletions == out.stats.deleted_cover_rows);
  for (std::size_t i = 1; i < out.trace.phase_log_g.size(); ++i)
    CHECK(out.trace.phase_log_g[i] - out.trace.phase_log_g[i - 1] >=
          std::log1p(eps) - 1e-7);

  replay(inst, cfg, out);
}

}  // namespace

TEST_CASE("trace invariants hold and replays confirm eligibility") {
  for (std::uint64_t seed : {3ull, 17ull}) {
    GeneratedInstance g = generate_random_feasible(9, 5, 5, 0.5, seed);
    for (Algorithm alg :
         {Algorithm::generic, Algorithm::phased, Algorithm::parallel})
      for (double eps : {0.1, 0.3}) run_and_replay(g.instance, alg, eps);
  }
}

TEST_CASE("trace replay on a pure covering instance") {
  MixedInstance cov;
  cov.num_vars = 3;
  cov.packing = SparseNonnegMatrix(0, 3, {});
  cov.covering = SparseNonnegMatrix(
      2, 3, {{0, 0, 1.0}, {0, 1, 0.5}, {1, 1, 1.0}, {1, 2, 2.0}});
  cov.covering_rhs = {2.0, 3.0};
  for (Algorithm alg :
       {Algorithm::generic, Algorithm::phased, Algorithm::parallel})
    run_and_replay(cov, alg, 0.2);
}

TEST_CASE("trace CSV has one row per increment") {
  GeneratedInstance g = generate_random_feasible(6, 3, 3, 0.6, 4);
  SolveConfig cfg;
  cfg.algorithm = Algorithm::phased;
  cfg.epsilon = 0.15;
  cfg.record_trace = true;
  SolveOutcome out = solve(g.instance, cfg);
  REQUIRE(out.status == SolveStatus::feasible);

  std::ostringstream os;
  out.trace.write_csv(os);
  std::string csv = os.str();
  std::int64_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == out.stats.increments + 1);  // header + one row per increment
  CHECK(csv.substr(0, 2) == "k,");
}

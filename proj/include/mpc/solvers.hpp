#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/instance.hpp"
#include "mpc/potentials.hpp"
#include "mpc/trace.hpp"

namespace mpc {

enum class Algorithm { generic, phased, parallel };
enum class Selector { min_ratio, min_difference, first_eligible };
enum class SolveStatus { feasible, infeasible, budget_exhausted };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::generic: return "generic";
    case Algorithm::phased: return "phased";
    default: return "parallel";
  }
}
inline const char* to_string(Selector s) {
  switch (s) {
    case Selector::min_ratio: return "min-ratio";
    case Selector::min_difference: return "min-difference";
    default: return "first";
  }
}
inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    default: return "budget_exhausted";
  }
}

struct SolveConfig {
  double epsilon = 0.1;
  Algorithm algorithm = Algorithm::phased;
  Selector selector = Selector::min_ratio;  // generic solver only
  std::int64_t max_increments = 0;          // 0: theory bound m(N+eps)/eps + 1
  bool record_trace = false;
  int threads = 1;  // parallel solver worker lanes; result is lane-independent
  // Diagnostic hooks, used by the equation-system front end and tests.
  double rhs_override = 0.0;  // > 0: use this N instead of choose_N
  bool disable_cover_deletion = false;
};

struct SolveStats {
  std::int64_t increments = 0;
  std::int64_t phases = 0;
  std::int64_t deleted_cover_rows = 0;
  double wall_time = 0.0;
  double N = 0.0;
  double max_packing_ratio = 0.0;   // max_i (Px)_i / p_i against original rhs
  double min_covering_ratio = 0.0;  // min_i (Cx)_i / c_i against original rhs
  std::int64_t row_updates = 0;     // matrix entries touched by increments
  int forced_zero_vars = 0;
  int unconstrained_vars = 0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> x;  // original coordinates; empty when infeasible
  SolveStats stats;
  DiagnosticTrace trace;
  std::string note;  // infeasibility detail when known
};

// Right-hand side for the normalized system. The initial point of the
// generic/phased solvers is 0 and the parallel initialization guarantees
// max Px0 <= 1, so N is (max Px0 + 2 ln m)/eps with that initial value.
// The 1/eps floor keeps N positive when m = 1.
inline double choose_N(int m, double epsilon, Algorithm alg) {
  if (m <= 0) throw std::invalid_argument("choose_N: no constraints");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("choose_N: epsilon must be in (0,1)");
  double two_ln_m = 2.0 * std::log(static_cast<double>(m));
  if (alg == Algorithm::parallel) return (1.0 + two_ln_m) / epsilon;
  return std::max(two_ln_m, 1.0) / epsilon;
}

// alpha such that the largest row increase over P and active C rows is
// exactly eps.
inline double step_size_single(const PotentialState& st, int j, double eps) {
  double lim = st.step_limit(j);
  if (lim <= 0.0)
    throw std::logic_error("step_size_single: column has no active entries");
  return eps / lim;
}

struct RatioReport {
  double max_packing_ratio = 0.0;
  int worst_packing_row = -1;
  double min_covering_ratio = kInf;
  int worst_covering_row = -1;
};

// Recomputes Px and Cx from scratch against the ORIGINAL right-hand sides
// with compensated summation. Rows with p_i = 0 count as ratio +inf if
// violated; rows with c_i = 0 are unconstraining and skipped.
inline RatioReport compute_ratios(const MixedInstance& inst,
                                  std::span<const double> x) {
  RatioReport r;
  for (int i = 0; i < inst.packing_rows(); ++i) {
    KahanSum s;
    for (const SparseTerm& t : inst.packing.row(i)) s.add(t.value * x[t.index]);
    double p = inst.packing_rhs[static_cast<std::size_t>(i)];
    double ratio = p > 0.0 ? s.value() / p : (s.value() > 0.0 ? kInf : 0.0);
    if (ratio > r.max_packing_ratio) {
      r.max_packing_ratio = ratio;
      r.worst_packing_row = i;
    }
  }
  for (int i = 0; i < inst.covering_rows(); ++i) {
    double c = inst.covering_rhs[static_cast<std::size_t>(i)];
    if (c <= 0.0) continue;
    KahanSum s;
    for (const SparseTerm& t : inst.covering.row(i)) s.add(t.value * x[t.index]);
    double ratio = s.value() / c;
    if (ratio < r.min_covering_ratio) {
      r.min_covering_ratio = ratio;
      r.worst_covering_row = i;
    }
  }
  return r;
}

struct VerifyReport {
  bool ok = false;
  RatioReport ratios;
  std::string message;
};

inline VerifyReport verify_solution(const MixedInstance& inst,
                                    std::span<const double> x, double eps) {
  VerifyReport rep;
  if (static_cast<int>(x.size()) != inst.num_vars) {
    rep.message = "solution length disagrees with num_vars";
    return rep;
  }
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!(x[j] >= 0.0) || !std::isfinite(x[j])) {
      rep.message = "coordinate " + std::to_string(j) + " is not finite nonnegative";
      return rep;
    }
  rep.ratios = compute_ratios(inst, x);
  if (rep.ratios.max_packing_ratio > 1.0 + 4.5 * eps) {
    rep.message = "packing row " + std::to_string(rep.ratios.worst_packing_row) +
                  " exceeds (1+4.5eps): ratio " +
                  std::to_string(rep.ratios.max_packing_ratio);
    return rep;
  }
  if (rep.ratios.min_covering_ratio < 1.0 - 1e-9) {
    rep.message = "covering row " + std::to_string(rep.ratios.worst_covering_row) +
                  " undershoots: ratio " +
                  std::to_string(rep.ratios.min_covering_ratio);
    return rep;
  }
  rep.ok = true;
  rep.message = "ok";
  return rep;
}

inline VerifyReport verify_outcome(const MixedInstance& inst,
                                   const SolveOutcome& outcome, double eps) {
  if (outcome.status != SolveStatus::feasible)
    throw std::invalid_argument("verify_outcome: nothing to verify");
  return verify_solution(inst, outcome.x, eps);
}

namespace detail {

struct SolverRun {
  const MixedInstance* inst;
  SolveConfig cfg;
  NormalizedInstance ni;
  PotentialState st;
  DiagnosticTrace trace;
  double N, eps, rho;
  std::int64_t budget;
  double log_g = kInf;  // frozen phase constant, log domain (phased/parallel)
  bool g_set = false;
  double elig_factor = 0.0;  // K: np <= nc*K  <=>  local/g <= 1+eps
  int elig_epoch = -1;
  std::chrono::steady_clock::time_point t0;

  SolverRun(const MixedInstance& in, const SolveConfig& c, NormalizedInstance n,
            double N_, std::int64_t budget_)
      : inst(&in),
        cfg(c),
        ni(std::move(n)),
        st(ni, c.threads),
        N(N_),
        eps(c.epsilon),
        rho((1.0 + c.epsilon) * (1.0 + c.epsilon) / (1.0 - c.epsilon / 2.0)),
        budget(budget_),
        t0(std::chrono::steady_clock::now()) {
    trace.record_events = c.record_trace;
    trace.prime(phi(), psi());
  }

  double phi() const { return st.lmax_px() - rho * st.lmin_cx(); }
  double psi() const {
    return st.sum_px() + st.sum_cx_active() -
           static_cast<double>(st.active_count()) * (N + eps);
  }

  void note_increment(std::vector<std::pair<int, double>> cols) {
    trace.on_increment(std::move(cols), phi(), psi(), st.lmax_px(), st.lmin_cx(),
                       g_set ? log_g : std::nan(""));
  }

  // Deactivates rows that reached the rhs. With deletion disabled (equation
  // systems), rows stay active and termination is detected via min Cx >= N.
  bool handle_crossed(std::vector<int>& crossed, bool* all_covered) {
    if (cfg.disable_cover_deletion) {
      if (!crossed.empty()) {
        double mn = kInf;
        for (double v : st.cx()) mn = std::min(mn, v);
        if (mn >= N) *all_covered = true;
      }
      crossed.clear();
      return *all_covered;
    }
    for (int row : crossed) {
      if (!st.row_active(row)) continue;
      st.deactivate_row(row);
      trace.on_deletion(row, phi(), psi(), st.lmax_px(), st.lmin_cx(),
                        g_set ? log_g : std::nan(""));
    }
    crossed.clear();
    return st.active_count() == 0;
  }

  // local_j/g <= threshold_over_g, tested in the linear domain:
  //   ln np + shift_p - ln nc - shift_c <= ln(threshold) + log_g
  // The factor exp(...) stays within e^(+-61) because the shifts appear in
  // log_g with opposite sign (both sums are magnitude-bounded by refreshes).
  double threshold_factor(double log_threshold) const {
    return std::exp(log_threshold + log_g - st.shift_p() + st.shift_c());
  }
  void refresh_elig_factor() {
    if (elig_epoch != st.shift_epoch()) {
      elig_factor = threshold_factor(std::log1p(eps));
      elig_epoch = st.shift_epoch();
    }
  }
  bool eligible(int j) {
    refresh_elig_factor();
    double nc = st.num_cover_active(j);
    if (nc <= 0.0) return false;  // dead column, never incremented
    return st.num_pack(j) <= nc * elig_factor;
  }

  // Fresh min_j ratio_j in the linear domain; +inf when every column is dead.
  // Used for the phase-start infeasibility test.
  double min_partial_ratio() const {
    double minq = kInf;
    for (int j = 0; j < ni.packing.cols(); ++j) {
      double pc = st.partial_cover(j);
      if (pc <= 0.0) continue;
      minq = std::min(minq, st.partial_pack(j) / pc);
    }
    return minq;
  }

  // Starts a new phase: re-anchor shifts, freeze g = global(x), run the
  // infeasibility test. Returns false when infeasible.
  bool start_phase() {
    st.refresh_shifts();
    double minq = min_partial_ratio();
    log_g = st.log_global();
    g_set = true;
    elig_epoch = -1;
    trace.on_phase_start(log_g);
    return !(minq > 1.0 + kInfeasibilityGuard);
  }

  SolveOutcome finish(SolveStatus status, std::string note = "") {
    SolveOutcome o;
    o.status = status;
    o.note = std::move(note);
    if (status != SolveStatus::infeasible)
      o.x = ni.lift(st.x(), inst->num_vars);
    o.stats.increments = trace.increments;
    o.stats.phases = trace.phases;
    o.stats.deleted_cover_rows = trace.deletions;
    o.stats.N = N;
    o.stats.row_updates = st.row_updates();
    o.stats.forced_zero_vars = static_cast<int>(ni.forced_zero_vars.size());
    o.stats.unconstrained_vars = static_cast<int>(ni.unconstrained_vars.size());
    if (!o.x.empty()) {
      RatioReport r = compute_ratios(*inst, o.x);
      o.stats.max_packing_ratio = r.max_packing_ratio;
      o.stats.min_covering_ratio = r.min_covering_ratio;
    }
    o.stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    o.trace = std::move(trace);
    return o;
  }
};

inline int count_retained_rows(const MixedInstance& inst) {
  int m = 0;
  for (double v : inst.packing_rhs)
    if (v > 0.0) ++m;
  for (double v : inst.covering_rhs)
    if (v > 0.0) ++m;
  return m;
}

inline SolveOutcome solve_generic_impl(SolverRun& run) {
  const int n = run.ni.packing.cols();
  std::vector<int> crossed;
  bool all_covered = false;
  for (;;) {
    // Full ratio scan: the reference implementation recomputes every
    // partial derivative each iteration (O(nnz)).
    double min_ratio = kInf;
    int best = -1;         // argmin ratio, lowest index on ties
    double best_diff = kInf;
    int best_diff_j = -1;  // argmin (partial_P - partial_C) among eligible
    int first_elig = -1;
    for (int j = 0; j < n; ++j) {
      double pc = run.st.partial_cover(j);
      if (pc <= 0.0) continue;
      double pp = run.st.partial_pack(j);
      double ratio = pp / pc;
      if (ratio < min_ratio) {
        min_ratio = ratio;
        best = j;
      }
      if (ratio <= 1.0 + run.eps) {
        if (first_elig < 0) first_elig = j;
        double diff = pp - pc;
        if (diff < best_diff) {
          best_diff = diff;
          best_diff_j = j;
        }
      }
    }
    if (min_ratio > 1.0 + kInfeasibilityGuard)
      return run.finish(SolveStatus::infeasible,
                        "min ratio " + std::to_string(min_ratio));
    int j = best;
    if (run.cfg.selector == Selector::min_difference) j = best_diff_j;
    if (run.cfg.selector == Selector::first_eligible) j = first_elig;
    double alpha = step_size_single(run.st, j, run.eps);
    run.st.increment(j, alpha, &crossed);
    run.note_increment({{j, alpha}});
    if (run.handle_crossed(crossed, &all_covered))
      return run.finish(SolveStatus::feasible);
    if (run.trace.increments >= run.budget)
      return run.finish(SolveStatus::budget_exhausted, "increment budget");
  }
}

inline SolveOutcome solve_phased_impl(SolverRun& run) {
  const int n = run.ni.packing.cols();
  std::vector<int> crossed;
  bool all_covered = false;
  for (;;) {
    if (!run.start_phase())
      return run.finish(SolveStatus::infeasible, "min ratio above 1 at phase start");
    // One round-robin pass per phase: local_j and the frozen g only grow, so
    // once j is rejected it stays rejected until the next phase.
    for (int j = 0; j < n; ++j) {
      while (run.eligible(j)) {
        double alpha = step_size_single(run.st, j, run.eps);
        run.st.increment(j, alpha, &crossed);
        run.note_increment({{j, alpha}});
        if (run.handle_crossed(crossed, &all_covered))
          return run.finish(SolveStatus::feasible);
        if (run.trace.increments >= run.budget)
          return run.finish(SolveStatus::budget_exhausted, "increment budget");
      }
    }
  }
}

inline SolveOutcome solve_parallel_impl(SolverRun& run) {
  const auto& P = run.ni.packing;
  const auto& C = run.ni.covering;
  const int n = P.cols();
  const int threads = std::max(1, run.cfg.threads);

  // Fig-style initialization: x_j = min_i 1/(n P_ij) = 1/(n max_i P_ij),
  // which makes max Px0 <= 1. Columns without packing entries get the
  // analogous covering-based seed: under multiplicative updates a zero
  // start could never grow, so those variables would be stuck at 0.
  {
    std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      double mp = 0.0, mc = 0.0;
      for (const SparseTerm& t : P.col(j)) mp = std::max(mp, t.value);
      for (const SparseTerm& t : C.col(j)) mc = std::max(mc, t.value);
      if (mc <= 0.0) continue;  // no covering entries: growing j never helps
      x0[static_cast<std::size_t>(j)] =
          mp > 0.0 ? 1.0 / (n * mp) : 1.0 / (n * mc);
    }
    run.st.set_x(x0);
    run.trace.prime(run.phi(), run.psi());
  }

  std::vector<int> crossed;
  bool all_covered = false;
  // x0 could already satisfy some covering rows.
  for (int i = 0; i < C.rows(); ++i)
    if (run.st.cx()[static_cast<std::size_t>(i)] >= run.N) crossed.push_back(i);
  if (run.handle_crossed(crossed, &all_covered))
    return run.finish(SolveStatus::feasible);

  const int chunk = 512;
  const int col_chunks = (n + chunk - 1) / chunk;
  std::vector<char> elig(static_cast<std::size_t>(n), 0);
  std::vector<double> dx(static_cast<std::size_t>(n), 0.0);
  const int mp_rows = P.rows(), mc_rows = C.rows();
  const int prow_chunks = (mp_rows + chunk - 1) / chunk;
  const int crow_chunks = (mc_rows + chunk - 1) / chunk;
  std::vector<double> chunk_max(
      static_cast<std::size_t>(std::max(prow_chunks + crow_chunks, 1)), 0.0);

  auto scan_eligible = [&]() {
    run.refresh_elig_factor();
    const double K = run.elig_factor;
    int found = 0;
    run_chunked(col_chunks, threads, [&](int ck) {
      for (int j = ck * chunk; j < std::min(n, (ck + 1) * chunk); ++j) {
        double nc = run.st.num_cover_active(j);
        elig[static_cast<std::size_t>(j)] =
            (nc > 0.0 && run.st.num_pack(j) <= nc * K) ? 1 : 0;
      }
    });
    for (char e : elig) found += e;
    return found;
  };

  for (;;) {
    if (!run.g_set || scan_eligible() == 0) {
      if (!run.start_phase())
        return run.finish(SolveStatus::infeasible,
                          "min ratio above 1 at phase start");
      if (scan_eligible() == 0)
        return run.finish(SolveStatus::infeasible, "no eligible column");
    }
    // Candidate step d_j = x_j on the eligible set; delta = max row increase;
    // the applied step is scaled so the largest row increase is exactly eps.
    for (int j = 0; j < n; ++j)
      dx[static_cast<std::size_t>(j)] =
          elig[static_cast<std::size_t>(j)] ? run.st.x()[static_cast<std::size_t>(j)]
                                            : 0.0;
    run_chunked(prow_chunks, threads, [&](int ck) {
      double mx = 0.0;
      for (int i = ck * chunk; i < std::min(mp_rows, (ck + 1) * chunk); ++i) {
        double acc = 0.0;
        for (const SparseTerm& t : P.row(i)) acc += t.value * dx[t.index];
        mx = std::max(mx, acc);
      }
      chunk_max[static_cast<std::size_t>(ck)] = mx;
    });
    run_chunked(crow_chunks, threads, [&](int ck) {
      double mx = 0.0;
      for (int i = ck * chunk; i < std::min(mc_rows, (ck + 1) * chunk); ++i) {
        if (!run.st.row_active(i)) continue;
        double acc = 0.0;
        for (const SparseTerm& t : C.row(i)) acc += t.value * dx[t.index];
        mx = std::max(mx, acc);
      }
      chunk_max[static_cast<std::size_t>(prow_chunks + ck)] = mx;
    });
    double delta = 0.0;
    for (int k = 0; k < prow_chunks + crow_chunks; ++k)
      delta = std::max(delta, chunk_max[static_cast<std::size_t>(k)]);
    double scale = run.eps / delta;
    for (double& v : dx) v *= scale;
    run.st.increment_bulk(dx, &crossed);
    std::vector<std::pair<int, double>> cols;
    if (run.cfg.record_trace)
      for (int j = 0; j < n; ++j)
        if (elig[static_cast<std::size_t>(j)])
          cols.emplace_back(j, dx[static_cast<std::size_t>(j)]);
    run.note_increment(std::move(cols));
    if (run.handle_crossed(crossed, &all_covered))
      return run.finish(SolveStatus::feasible);
    if (run.trace.increments >= run.budget)
      return run.finish(SolveStatus::budget_exhausted, "increment budget");
  }
}

}  // namespace detail

inline SolveOutcome solve(const MixedInstance& inst, const SolveConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw std::invalid_argument("epsilon must be in (0,1)");
  if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (cfg.max_increments < 0)
    throw std::invalid_argument("max_increments must be nonnegative");

  auto infeasible_outcome = [](std::string note, double N) {
    SolveOutcome o;
    o.status = SolveStatus::infeasible;
    o.note = std::move(note);
    o.stats.N = N;
    return o;
  };
  try {
    validate_instance(inst);
  } catch (const TriviallyInfeasible& e) {
    return infeasible_outcome(e.what(), 0.0);
  }

  int m_c_ret = 0;
  for (double v : inst.covering_rhs)
    if (v > 0.0) ++m_c_ret;
  if (m_c_ret == 0) {
    // Nothing to cover: x = 0 satisfies every packing row, and p_i = 0 rows
    // force their variables to 0, which x = 0 already is.
    SolveOutcome o;
    o.status = SolveStatus::feasible;
    o.x.assign(static_cast<std::size_t>(inst.num_vars), 0.0);
    RatioReport r = compute_ratios(inst, o.x);
    o.stats.max_packing_ratio = r.max_packing_ratio;
    o.stats.min_covering_ratio = r.min_covering_ratio;
    return o;
  }
  int m_ret = detail::count_retained_rows(inst);
  double N = cfg.rhs_override > 0.0 ? cfg.rhs_override
                                    : choose_N(m_ret, cfg.epsilon, cfg.algorithm);
  NormalizedInstance ni;
  try {
    ni = normalize(inst, N);
  } catch (const TriviallyInfeasible& e) {
    return infeasible_outcome(e.what(), N);
  }
  std::int64_t budget =
      cfg.max_increments > 0
          ? cfg.max_increments
          : static_cast<std::int64_t>(
                std::ceil(m_ret * (N + cfg.epsilon) / cfg.epsilon)) +
                1;
  detail::SolverRun run(inst, cfg, std::move(ni), N, budget);
  switch (cfg.algorithm) {
    case Algorithm::generic: return detail::solve_generic_impl(run);
    case Algorithm::phased: return detail::solve_phased_impl(run);
    default: return detail::solve_parallel_impl(run);
  }
}

inline SolveOutcome solve_generic(const MixedInstance& inst, SolveConfig cfg = {}) {
  cfg.algorithm = Algorithm::generic;
  return solve(inst, cfg);
}
inline SolveOutcome solve_phased(const MixedInstance& inst, SolveConfig cfg = {}) {
  cfg.algorithm = Algorithm::phased;
  return solve(inst, cfg);
}
inline SolveOutcome solve_parallel(const MixedInstance& inst, SolveConfig cfg = {}) {
  cfg.algorithm = Algorithm::parallel;
  return solve(inst, cfg);
}

}  // namespace mpc

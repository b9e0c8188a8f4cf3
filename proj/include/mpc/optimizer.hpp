#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpc/solvers.hpp"

namespace mpc {

// min { lambda : Px <= lambda p, Cx >= c, x >= 0 }, reduced to feasibility
// probes on instances with the packing side scaled by a trial lambda.

struct SubproblemRecord {
  double lambda = 0.0;       // trial value
  double eps_quality = 0.0;  // certificate quality: feasible => lam* <= (1+eps')lambda
  SolveStatus status = SolveStatus::infeasible;
  std::int64_t increments = 0;
  double wall_time = 0.0;
};

struct OptimizeOutcome {
  double lambda = 0.0;
  std::vector<double> x;  // from the last feasible subproblem (or initial bound)
  std::vector<SubproblemRecord> subproblem_log;
  double bracket_lo = 0.0;  // certified interval around lambda*
  double bracket_hi = 0.0;
  double lambda_initial = 0.0;
  std::int64_t bracket_probes = 0;
  std::string note;
};

namespace detail {

inline MixedInstance scale_packing(const MixedInstance& inst, double lambda) {
  MixedInstance s = inst;
  for (double& v : s.packing_rhs) v *= lambda;
  return s;
}

struct LambdaProbe {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> x;
};

// Feasibility probe at a trial lambda. A feasible answer comes with a witness
// whose packing overshoot is at most (1+eps_quality), so lambda* <= (1+eps')l.
// An infeasible answer is an exact proof, so lambda* > l. The solver epsilon
// is eps'/4.5 because the feasible-side guarantee is a (1+4.5 eps) factor.
inline LambdaProbe lambda_probe(const MixedInstance& inst, double lambda,
                                double eps_quality, const SolveConfig& base,
                                std::vector<SubproblemRecord>* log) {
  SolveConfig cfg = base;
  cfg.epsilon = eps_quality / 4.5;
  cfg.record_trace = false;
  SolveOutcome out = solve(scale_packing(inst, lambda), cfg);
  if (out.status == SolveStatus::budget_exhausted)
    throw std::runtime_error(
        "optimizer: feasibility subproblem ran out of increment budget");
  if (log)
    log->push_back({lambda, eps_quality, out.status, out.stats.increments,
                    out.stats.wall_time});
  return {out.status, std::move(out.x)};
}

}  // namespace detail

// Certified m^2-approximate starting point. For each covering row i pick the
// column j minimizing colsum_j c_i / C_ij, where colsum_j = sum_i' P_i'j/p_i',
// and add z(i) with z_j = c_i/C_ij. Each z(i) covers row i exactly and adds
// colsum_j c_i / C_ij to sum_i' (Px)_i'/p_i', so
//   max_i' (Px)_i'/p_i' <= sum_i' (Px)_i'/p_i' <= lambda,
// giving lambda* <= lambda; counting the min against the best single column
// of an optimal solution gives lambda <= m^2 lambda*.
inline std::pair<double, std::vector<double>> initial_bound(
    const MixedInstance& inst) {
  validate_instance(inst);
  const int n = inst.num_vars;
  std::vector<char> forced(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < inst.packing_rows(); ++i) {
    if (inst.packing_rhs[static_cast<std::size_t>(i)] > 0.0) continue;
    for (const SparseTerm& t : inst.packing.row(i))
      if (t.value > 0.0) forced[t.index] = 1;
  }
  std::vector<double> colsum(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < inst.packing_rows(); ++i) {
    double p = inst.packing_rhs[static_cast<std::size_t>(i)];
    if (p <= 0.0) continue;
    for (const SparseTerm& t : inst.packing.row(i))
      colsum[t.index] += t.value / p;
  }
  double lambda = 0.0;
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < inst.covering_rows(); ++i) {
    double c = inst.covering_rhs[static_cast<std::size_t>(i)];
    if (c <= 0.0) continue;
    double best = kInf;
    int best_j = -1;
    double best_coef = 0.0;
    for (const SparseTerm& t : inst.covering.row(i)) {
      if (!(t.value > 0.0) || forced[t.index]) continue;
      double term = colsum[t.index] * c / t.value;
      if (term < best) {
        best = term;
        best_j = static_cast<int>(t.index);
        best_coef = t.value;
      }
    }
    if (best_j < 0)
      throw TriviallyInfeasible("covering row " + std::to_string(i) +
                                    " is supported only by forced-zero variables",
                                i);
    lambda += best;
    x[static_cast<std::size_t>(best_j)] += c / best_coef;
  }
  return {lambda, std::move(x)};
}

struct BracketResult {
  double lower = 0.0;  // certified: lambda* >= lower
  double upper = 0.0;  // certified: lambda* <= upper, with witness
  std::vector<double> witness;
  double lambda_initial = 0.0;
  std::vector<SubproblemRecord> probes;
};

// Binary search over the exponent grid lambda0 * 2^e, e in [0, ceil(2 log2 m)],
// probing at quality eps' = 1/2. A feasible probe certifies
// lambda* <= 1.5 lambda' (and moves the window down), an infeasible probe
// certifies lambda* > lambda' (and moves it up). The search ends when the
// certified interval satisfies upper <= 2 lower or the window is exhausted;
// adjacent grid points are a factor 2 apart and a feasible cert is 1.5x its
// probe, so the exhausted case still ends with upper <= 3 lower. Probe count
// is at most ceil(log2(window size)).
inline BracketResult bracket_lambda(const MixedInstance& inst, double lambda0,
                                    double lambda_init,
                                    std::vector<double> init_witness,
                                    SolveConfig cfg = {}) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw std::invalid_argument("bracket_lambda: lambda0 must be positive");
  BracketResult br;
  br.lambda_initial = lambda_init;
  br.lower = lambda0;
  br.upper = lambda_init;
  br.witness = std::move(init_witness);
  int hi_exp = static_cast<int>(
      std::ceil(std::log2(std::max(2.0, lambda_init / lambda0))));
  int lo = 0, hi = hi_exp;
  while (br.upper > 2.0 * br.lower && lo <= hi) {
    int mid = lo + (hi - lo) / 2;
    double trial = lambda0 * std::ldexp(1.0, mid);
    detail::LambdaProbe pr =
        detail::lambda_probe(inst, trial, 0.5, cfg, &br.probes);
    if (pr.status == SolveStatus::feasible) {
      double cert = 1.5 * trial;
      if (cert < br.upper) {
        br.upper = cert;
        br.witness = std::move(pr.x);
      }
      hi = mid - 1;
    } else {
      if (trial > br.lower) br.lower = trial;
      lo = mid + 1;
    }
  }
  return br;
}

// Precision refinement: repeatedly probe lambda_i(1 + delta_i/4) at quality
// delta_i/4 and shrink delta by 3/4. Feasible keeps lambda_i and the witness;
// infeasible advances lambda_i to the probe. Invariant (valid for delta1 <= 4):
//   lambda* in [lambda_i, (1+delta_i)lambda_i]
// so the returned (1+delta)lambda is within (1+epsilon) of lambda*.
inline OptimizeOutcome refine_lambda(const MixedInstance& inst, double lambda1,
                                     double epsilon, double delta1 = 1.0,
                                     SolveConfig cfg = {},
                                     std::vector<double> upper_witness = {}) {
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1))
    throw std::invalid_argument("refine_lambda: lambda1 must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("refine_lambda: epsilon must be in (0,1]");
  if (!(delta1 > 0.0 && delta1 <= 4.0))
    throw std::invalid_argument("refine_lambda: delta1 must be in (0,4]");
  OptimizeOutcome out;
  out.x = std::move(upper_witness);
  double lam = lambda1, delta = delta1;
  bool saw_feasible = !out.x.empty();
  while (delta > epsilon) {
    double trial = lam * (1.0 + delta / 4.0);
    detail::LambdaProbe pr =
        detail::lambda_probe(inst, trial, delta / 4.0, cfg, &out.subproblem_log);
    if (pr.status == SolveStatus::feasible) {
      out.x = std::move(pr.x);
      saw_feasible = true;
    } else {
      lam = trial;
    }
    delta *= 0.75;
  }
  if (!saw_feasible && !out.subproblem_log.empty())
    throw std::logic_error(
        "refine_lambda: no feasible subproblem in a valid bracket");
  out.bracket_lo = lam;
  out.bracket_hi = lam * (1.0 + delta);
  out.lambda = out.bracket_hi;
  return out;
}

inline OptimizeOutcome optimize(const MixedInstance& inst, double epsilon,
                                SolveConfig cfg = {}) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("optimize: epsilon must be in (0,1]");
  OptimizeOutcome out;
  std::pair<double, std::vector<double>> init;
  try {
    init = initial_bound(inst);
  } catch (const TriviallyInfeasible& e) {
    out.lambda = kInf;
    out.note = e.what();
    return out;
  }
  out.lambda_initial = init.first;
  if (init.first == 0.0) {
    // No packing pressure on any covering row; the initial witness is optimal.
    out.x = std::move(init.second);
    return out;
  }
  double m = static_cast<double>(inst.total_rows());
  BracketResult br = bracket_lambda(inst, init.first / (m * m), init.first,
                                    std::move(init.second), cfg);
  out.bracket_probes = static_cast<std::int64_t>(br.probes.size());
  out.subproblem_log = std::move(br.probes);
  double delta1 = br.upper / br.lower - 1.0;
  if (delta1 <= epsilon) {
    out.lambda = br.upper;
    out.x = std::move(br.witness);
    out.bracket_lo = br.lower;
    out.bracket_hi = br.upper;
    return out;
  }
  OptimizeOutcome ref = refine_lambda(inst, br.lower, epsilon, delta1, cfg,
                                      std::move(br.witness));
  out.lambda = ref.lambda;
  out.x = std::move(ref.x);
  out.bracket_lo = ref.bracket_lo;
  out.bracket_hi = ref.bracket_hi;
  for (auto& rec : ref.subproblem_log) out.subproblem_log.push_back(rec);
  return out;
}

}  // namespace mpc

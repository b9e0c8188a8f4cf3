#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/sparse_matrix.hpp"

namespace mpc {

// Feasibility instance: find x >= 0 with Px <= p and Cx >= c.
// rhs vectors are nonnegative; either side may have zero rows.
struct MixedInstance {
  int num_vars = 0;
  SparseNonnegMatrix packing;    // m_p x num_vars
  std::vector<double> packing_rhs;
  SparseNonnegMatrix covering;   // m_c x num_vars
  std::vector<double> covering_rhs;

  int packing_rows() const { return packing.rows(); }
  int covering_rows() const { return covering.rows(); }
  int total_rows() const { return packing.rows() + covering.rows(); }

  friend bool operator==(const MixedInstance& a, const MixedInstance& b) {
    return a.num_vars == b.num_vars && a.packing == b.packing &&
           a.packing_rhs == b.packing_rhs && a.covering == b.covering &&
           a.covering_rhs == b.covering_rhs;
  }
};

// Checks structural soundness. Throws ParseError for malformed data and
// TriviallyInfeasible for a covering row with positive rhs and no entries.
inline void validate_instance(const MixedInstance& inst) {
  if (inst.num_vars <= 0) throw ParseError("num_vars must be positive");
  if (inst.total_rows() == 0) throw ParseError("instance has no constraints");
  if (inst.packing.cols() != inst.num_vars ||
      inst.covering.cols() != inst.num_vars)
    throw ParseError("matrix width disagrees with num_vars");
  if (static_cast<int>(inst.packing_rhs.size()) != inst.packing.rows() ||
      static_cast<int>(inst.covering_rhs.size()) != inst.covering.rows())
    throw ParseError("rhs length disagrees with row count");
  for (double v : inst.packing_rhs)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParseError("negative coefficient in packing rhs");
  for (double v : inst.covering_rhs)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParseError("negative coefficient in covering rhs");
  for (int i = 0; i < inst.covering.rows(); ++i) {
    bool has_positive = false;
    for (const SparseTerm& t : inst.covering.row(i))
      if (t.value > 0.0) has_positive = true;
    if (inst.covering_rhs[static_cast<std::size_t>(i)] > 0.0 && !has_positive)
      throw TriviallyInfeasible(
          "covering row " + std::to_string(i) + " has empty support", i);
  }
}

// Row-scaled instance with uniform right-hand side N. Retained rows have
// P'_{ij} = P_{ij} N / p_i and C'_{ij} = C_{ij} N / c_i, so feasibility reads
// max P'x <= N <= min C'x. Forced-zero and fully unconstrained variables are
// removed; col_map embeds retained coordinates back into the original space.
struct NormalizedInstance {
  SparseNonnegMatrix packing;
  SparseNonnegMatrix covering;
  double rhs = 0.0;  // N
  std::vector<int> col_map;            // retained col -> original col
  std::vector<int> packing_row_map;    // retained row -> original row
  std::vector<int> covering_row_map;
  std::vector<int> forced_zero_vars;   // original cols pinned to 0 by p_i = 0
  std::vector<int> unconstrained_vars; // original cols with no entries left
  int column_degree = 0;               // max rows any retained variable touches

  int num_retained_vars() const { return static_cast<int>(col_map.size()); }

  // Embeds a retained-coordinate vector into original coordinates.
  std::vector<double> lift(std::span<const double> x, int num_vars) const {
    std::vector<double> full(static_cast<std::size_t>(num_vars), 0.0);
    for (std::size_t j = 0; j < col_map.size(); ++j)
      full[static_cast<std::size_t>(col_map[j])] = x[j];
    return full;
  }
};

inline NormalizedInstance normalize(const MixedInstance& inst, double N) {
  if (!(N > 0.0)) throw std::invalid_argument("normalize: N must be positive");
  validate_instance(inst);

  const int n = inst.num_vars;
  std::vector<char> forced(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < inst.packing.rows(); ++i) {
    if (inst.packing_rhs[static_cast<std::size_t>(i)] > 0.0) continue;
    for (const SparseTerm& t : inst.packing.row(i))
      if (t.value > 0.0) forced[static_cast<std::size_t>(t.index)] = 1;
  }

  NormalizedInstance out;
  out.rhs = N;

  std::vector<MatrixEntry> pe, ce;
  for (int i = 0; i < inst.packing.rows(); ++i) {
    double p = inst.packing_rhs[static_cast<std::size_t>(i)];
    if (p <= 0.0) continue;  // rows with p_i = 0 only pin variables
    int r = static_cast<int>(out.packing_row_map.size());
    out.packing_row_map.push_back(i);
    for (const SparseTerm& t : inst.packing.row(i))
      if (t.value > 0.0 && !forced[static_cast<std::size_t>(t.index)])
        pe.push_back({r, t.index, t.value * N / p});
  }
  for (int i = 0; i < inst.covering.rows(); ++i) {
    double c = inst.covering_rhs[static_cast<std::size_t>(i)];
    if (c <= 0.0) continue;  // satisfied by x = 0
    int r = static_cast<int>(out.covering_row_map.size());
    bool has_support = false;
    for (const SparseTerm& t : inst.covering.row(i))
      if (t.value > 0.0 && !forced[static_cast<std::size_t>(t.index)]) {
        ce.push_back({r, t.index, t.value * N / c});
        has_support = true;
      }
    if (!has_support)
      throw TriviallyInfeasible("covering row " + std::to_string(i) +
                                    " is supported only by forced-zero variables",
                                i);
    out.covering_row_map.push_back(i);
  }

  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (const MatrixEntry& e : pe) used[static_cast<std::size_t>(e.col)] = 1;
  for (const MatrixEntry& e : ce) used[static_cast<std::size_t>(e.col)] = 1;
  std::vector<int> new_col(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    if (forced[static_cast<std::size_t>(j)]) {
      out.forced_zero_vars.push_back(j);
    } else if (!used[static_cast<std::size_t>(j)]) {
      out.unconstrained_vars.push_back(j);
    } else {
      new_col[static_cast<std::size_t>(j)] = out.num_retained_vars();
      out.col_map.push_back(j);
    }
  }
  for (MatrixEntry& e : pe) e.col = new_col[static_cast<std::size_t>(e.col)];
  for (MatrixEntry& e : ce) e.col = new_col[static_cast<std::size_t>(e.col)];

  int cols = out.num_retained_vars();
  out.packing = SparseNonnegMatrix(
      static_cast<int>(out.packing_row_map.size()), cols, std::move(pe));
  out.covering = SparseNonnegMatrix(
      static_cast<int>(out.covering_row_map.size()), cols, std::move(ce));
  for (int j = 0; j < cols; ++j) {
    int deg = static_cast<int>(out.packing.col(j).size()) +
              static_cast<int>(out.covering.col(j).size());
    out.column_degree = std::max(out.column_degree, deg);
  }
  return out;
}

struct GeneratedInstance {
  MixedInstance instance;
  std::vector<double> x_star;  // planted feasible point
};

// Random instance with a planted strictly feasible x*: rhs are set to
// (P x*)(1 + slack) and (C x*)(1 - slack). Deterministic for a given seed and
// byte-identical across platforms with the same floating-point environment.
inline GeneratedInstance generate_random_feasible(int n, int m_p, int m_c,
                                                  double density,
                                                  std::uint64_t seed,
                                                  double slack = 0.05) {
  if (n <= 0 || m_p < 0 || m_c < 0 || m_p + m_c == 0)
    throw std::invalid_argument("generate_random_feasible: bad shape");
  if (!(density > 0.0) || density > 1.0)
    throw std::invalid_argument("generate_random_feasible: density in (0, 1]");

  std::mt19937_64 rng(seed);
  auto next01 = [&rng] { return uniform01(rng()); };

  GeneratedInstance out;
  out.x_star.resize(static_cast<std::size_t>(n));
  for (double& v : out.x_star) v = 0.5 + next01();

  auto sample_matrix = [&](int rows) {
    std::vector<MatrixEntry> es;
    for (int i = 0; i < rows; ++i) {
      int before = static_cast<int>(es.size());
      for (int j = 0; j < n; ++j)
        if (next01() < density) es.push_back({i, j, 0.1 + 0.9 * next01()});
      if (static_cast<int>(es.size()) == before) {
        // keep every row supported so rhs stays positive
        int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        es.push_back({i, j, 0.1 + 0.9 * next01()});
      }
    }
    return es;
  };

  out.instance.num_vars = n;
  out.instance.packing = SparseNonnegMatrix(m_p, n, sample_matrix(m_p));
  out.instance.covering = SparseNonnegMatrix(m_c, n, sample_matrix(m_c));
  std::vector<double> px = out.instance.packing.multiply(out.x_star);
  std::vector<double> cx = out.instance.covering.multiply(out.x_star);
  out.instance.packing_rhs.resize(static_cast<std::size_t>(m_p));
  out.instance.covering_rhs.resize(static_cast<std::size_t>(m_c));
  for (int i = 0; i < m_p; ++i)
    out.instance.packing_rhs[i] = px[i] * (1.0 + slack);
  for (int i = 0; i < m_c; ++i)
    out.instance.covering_rhs[i] = cx[i] * (1.0 - slack);
  return out;
}

}  // namespace mpc

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/instance.hpp"

namespace mpc::oracle {

// Exact reference checks for tiny instances. Everything here runs in exact
// rational arithmetic (doubles convert losslessly), so the answers are ground
// truth rather than another approximation.
inline constexpr int kMaxVars = 3;
inline constexpr int kMaxRows = 6;

using Rational = boost::multiprecision::cpp_rational;

namespace detail {

struct Plane {
  std::vector<Rational> normal;  // normal . x == offset
  Rational offset;
};

// Solves the n x n rational system rows[i].normal . x = rows[i].offset.
// Returns false when the normals are linearly dependent.
inline bool solve_square(std::vector<Plane> rows, std::vector<Rational>& x) {
  const std::size_t n = rows.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && rows[pivot].normal[col] == 0) ++pivot;
    if (pivot == n) return false;
    std::swap(rows[col], rows[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || rows[r].normal[col] == 0) continue;
      Rational f = rows[r].normal[col] / rows[col].normal[col];
      for (std::size_t c = col; c < n; ++c)
        rows[r].normal[c] -= f * rows[col].normal[c];
      rows[r].offset -= f * rows[col].offset;
    }
  }
  x.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) x[i] = rows[i].offset / rows[i].normal[i];
  return true;
}

struct RationalInstance {
  std::size_t n = 0;
  std::vector<std::vector<Rational>> pack, cover;  // dense rows
  std::vector<Rational> p, c;
  std::vector<Rational> box;  // per-variable upper bound, see below

  bool satisfies(const std::vector<Rational>& x) const {
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < 0 || x[j] > box[j]) return false;
    for (std::size_t i = 0; i < pack.size(); ++i) {
      Rational acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += pack[i][j] * x[j];
      if (acc > p[i]) return false;
    }
    for (std::size_t i = 0; i < cover.size(); ++i) {
      Rational acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += cover[i][j] * x[j];
      if (acc < c[i]) return false;
    }
    return true;
  }
};

inline RationalInstance lift_exact(const MixedInstance& inst,
                                   const Rational& pack_scale,
                                   bool include_packing) {
  if (inst.num_vars > kMaxVars ||
      inst.packing_rows() + inst.covering_rows() > kMaxRows)
    throw std::invalid_argument("oracle: instance too large for exact check");
  RationalInstance ri;
  ri.n = static_cast<std::size_t>(inst.num_vars);
  if (include_packing) {
    ri.pack.assign(static_cast<std::size_t>(inst.packing_rows()),
                   std::vector<Rational>(ri.n, 0));
    for (const MatrixEntry& e : inst.packing.entries())
      ri.pack[static_cast<std::size_t>(e.row)][static_cast<std::size_t>(e.col)] =
          Rational(e.value);
    for (double v : inst.packing_rhs) ri.p.push_back(Rational(v) * pack_scale);
  }
  ri.cover.assign(static_cast<std::size_t>(inst.covering_rows()),
                  std::vector<Rational>(ri.n, 0));
  for (const MatrixEntry& e : inst.covering.entries())
    ri.cover[static_cast<std::size_t>(e.row)][static_cast<std::size_t>(e.col)] =
        Rational(e.value);
  for (double v : inst.covering_rhs) ri.c.push_back(Rational(v));

  // Per-variable cap B_j = max_i c_i / C_ij over covering rows containing j.
  // Clamping any feasible point into the box keeps it feasible: a clamped
  // coordinate alone satisfies every covering row it appears in, and shrinking
  // x never hurts packing. So the boxed polytope is empty iff the original is.
  ri.box.assign(ri.n, 0);
  for (std::size_t i = 0; i < ri.cover.size(); ++i)
    for (std::size_t j = 0; j < ri.n; ++j)
      if (ri.cover[i][j] > 0 && ri.c[i] > 0) {
        Rational cand = ri.c[i] / ri.cover[i][j];
        if (cand > ri.box[j]) ri.box[j] = cand;
      }
  return ri;
}

inline bool feasible_exact(const RationalInstance& ri) {
  std::vector<Plane> planes;
  for (std::size_t j = 0; j < ri.n; ++j) {
    Plane lo{std::vector<Rational>(ri.n, 0), 0};
    lo.normal[j] = 1;
    planes.push_back(lo);
    Plane hi{std::vector<Rational>(ri.n, 0), ri.box[j]};
    hi.normal[j] = 1;
    planes.push_back(hi);
  }
  for (std::size_t i = 0; i < ri.pack.size(); ++i)
    planes.push_back(Plane{ri.pack[i], ri.p[i]});
  for (std::size_t i = 0; i < ri.cover.size(); ++i)
    planes.push_back(Plane{ri.cover[i], ri.c[i]});

  // A nonempty bounded polytope has a vertex, and every vertex lies on n
  // linearly independent planes from this list, so scanning all n-subsets is a
  // complete feasibility test.
  const std::size_t np = planes.size();
  std::vector<std::size_t> idx(ri.n, 0);
  std::vector<Rational> x;
  auto try_subset = [&](const std::vector<std::size_t>& sel) {
    std::vector<Plane> sub;
    for (std::size_t k : sel) sub.push_back(planes[k]);
    return solve_square(std::move(sub), x) && ri.satisfies(x);
  };
  if (ri.n == 1) {
    for (std::size_t a = 0; a < np; ++a)
      if (try_subset({a})) return true;
  } else if (ri.n == 2) {
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = a + 1; b < np; ++b)
        if (try_subset({a, b})) return true;
  } else {
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = a + 1; b < np; ++b)
        for (std::size_t c = b + 1; c < np; ++c)
          if (try_subset({a, b, c})) return true;
  }
  return false;
}

}  // namespace detail

// Exact feasibility of { x >= 0 : Px <= p, Cx >= c } for tiny instances.
inline bool exact_feasible_tiny(const MixedInstance& inst) {
  return detail::feasible_exact(detail::lift_exact(inst, 1, true));
}

// Exact feasibility of { x >= 0 : Px <= lambda p, Cx >= c }.
inline bool exact_feasible_scaled(const MixedInstance& inst, double lambda) {
  return detail::feasible_exact(detail::lift_exact(inst, Rational(lambda), true));
}

// min { lambda : Px <= lambda p, Cx >= c, x >= 0 } by bisection over the exact
// feasibility test, to relative width 1e-9. Returns +inf when even the
// covering system alone is infeasible, 0 when lambda can be made arbitrarily
// small.
inline double brute_lambda_star(const MixedInstance& inst) {
  if (!detail::feasible_exact(detail::lift_exact(inst, 1, false))) return kInf;
  double hi = 1.0;
  int guard = 0;
  while (!exact_feasible_scaled(inst, hi)) {
    hi *= 2.0;
    if (++guard > 300) throw std::runtime_error("brute_lambda_star: no bracket");
  }
  double lo = 0.0;
  while (hi - lo > 1e-9 * std::max(1.0, hi)) {
    double mid = 0.5 * (lo + hi);
    if (exact_feasible_scaled(inst, mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace mpc::oracle

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/instance.hpp"
#include "mpc/sparse_matrix.hpp"

namespace mpc {

// Parallel-beam projection model on an n_g x n_g grid of unit cells.
// Each projection angle contributes one detector row per bin; bins are one
// cell width apart and each ray is traced through the grid with exact
// segment-cell intersection lengths. Row i is normalized by the phantom mass
// mu_i it sees, so A (phantom) = 1 holds row-wise by construction.

struct TomoInstance {
  SparseNonnegMatrix A;       // retained rows x retained cells
  std::vector<double> mu;     // per retained row
  int grid_side = 0;
  std::vector<double> angles_deg;
  std::vector<int> col_map;            // column -> cell (row-major grid index)
  std::vector<int> removed_cells;      // forced out by mu = 0 rows
  std::vector<std::pair<int, int>> row_meta;  // (angle index, bin index)
  int dropped_rows = 0;
};

namespace detail {

struct RaySegment {
  int cell = 0;
  double length = 0.0;
};

// Clip ray point(s) = origin + s * dir to slab lo <= coord <= hi.
inline bool clip_axis(double origin, double dir, double lo, double hi,
                      double& s0, double& s1) {
  if (std::abs(dir) < 1e-14) return origin >= lo && origin <= hi;
  double a = (lo - origin) / dir, b = (hi - origin) / dir;
  if (a > b) std::swap(a, b);
  s0 = std::max(s0, a);
  s1 = std::min(s1, b);
  return s0 < s1;
}

// Exact traversal: collect parameter values of every grid-line crossing
// inside the clipped range, then attribute each sub-segment to the cell
// containing its midpoint. Unit direction, so length equals the parameter
// difference.
inline std::vector<RaySegment> trace_ray(int n, double ox, double oy, double dx,
                                         double dy) {
  std::vector<RaySegment> segs;
  double s0 = -kInf, s1 = kInf;
  if (!clip_axis(ox, dx, 0.0, n, s0, s1)) return segs;
  if (!clip_axis(oy, dy, 0.0, n, s0, s1)) return segs;
  if (!(s1 - s0 > 1e-12)) return segs;
  std::vector<double> cuts;
  cuts.push_back(s0);
  cuts.push_back(s1);
  if (std::abs(dx) >= 1e-14)
    for (int k = 0; k <= n; ++k) {
      double s = (k - ox) / dx;
      if (s > s0 + 1e-12 && s < s1 - 1e-12) cuts.push_back(s);
    }
  if (std::abs(dy) >= 1e-14)
    for (int k = 0; k <= n; ++k) {
      double s = (k - oy) / dy;
      if (s > s0 + 1e-12 && s < s1 - 1e-12) cuts.push_back(s);
    }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double len = cuts[k + 1] - cuts[k];
    if (len <= 1e-12) continue;
    double sm = 0.5 * (cuts[k] + cuts[k + 1]);
    int cx = static_cast<int>(std::floor(ox + sm * dx));
    int cy = static_cast<int>(std::floor(oy + sm * dy));
    cx = std::clamp(cx, 0, n - 1);
    cy = std::clamp(cy, 0, n - 1);
    segs.push_back({cy * n + cx, len});
  }
  return segs;
}

}  // namespace detail

// phantom: row-major n_g^2 nonnegative densities; angles in degrees.
inline TomoInstance build_tomo_instance(const std::vector<double>& phantom,
                                        int grid_side,
                                        const std::vector<double>& angles_deg) {
  const int n = grid_side;
  if (n <= 0) throw ParseError("grid side must be positive");
  if (static_cast<int>(phantom.size()) != n * n)
    throw ParseError("phantom size disagrees with grid side");
  if (angles_deg.empty()) throw ParseError("no projection angles");
  bool any_mass = false;
  for (double v : phantom) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParseError("phantom densities must be nonnegative");
    if (v > 0.0) any_mass = true;
  }
  if (!any_mass) throw ParseError("phantom is identically zero");

  struct RawRow {
    int angle, bin;
    std::vector<detail::RaySegment> segs;
    double mu;
  };
  std::vector<RawRow> raw;
  const double half = n / 2.0;
  const double radius = half * std::numbers::sqrt2;
  const int pad = static_cast<int>(std::ceil(radius - half)) + 1;
  for (std::size_t a = 0; a < angles_deg.size(); ++a) {
    double th = angles_deg[a] * std::numbers::pi / 180.0;
    // Axis-aligned angles get exact directions so their rays pass through
    // cell centers and lengths come out exactly 1.
    double c = std::cos(th), s = std::sin(th);
    double r = std::fmod(std::abs(angles_deg[a]), 360.0);
    if (r == 0.0) c = 1.0, s = 0.0;
    if (r == 90.0) c = 0.0, s = 1.0;
    if (r == 180.0) c = -1.0, s = 0.0;
    if (r == 270.0) c = 0.0, s = -1.0;
    // Ray k: offset t = k + 0.5 - n/2 along the detector axis (-s, c).
    for (int k = -pad; k < n + pad; ++k) {
      double t = k + 0.5 - half;
      double ox = half - t * s, oy = half + t * c;
      auto segs = detail::trace_ray(n, ox, oy, c, s);
      if (segs.empty()) continue;
      double mu = 0.0;
      for (const auto& sg : segs)
        mu += sg.length * phantom[static_cast<std::size_t>(sg.cell)];
      raw.push_back({static_cast<int>(a), k, std::move(segs), mu});
    }
  }

  TomoInstance ti;
  ti.grid_side = n;
  ti.angles_deg = angles_deg;
  std::vector<char> removed(static_cast<std::size_t>(n * n), 0);
  for (const RawRow& rr : raw) {
    if (rr.mu > 0.0) continue;
    ++ti.dropped_rows;
    for (const auto& sg : rr.segs)
      if (sg.length > 0.0) removed[static_cast<std::size_t>(sg.cell)] = 1;
  }
  for (int cell = 0; cell < n * n; ++cell)
    if (removed[static_cast<std::size_t>(cell)]) ti.removed_cells.push_back(cell);

  std::vector<int> col_of_cell(static_cast<std::size_t>(n * n), -1);
  std::vector<MatrixEntry> entries;
  int rows = 0;
  for (const RawRow& rr : raw) {
    if (!(rr.mu > 0.0)) continue;
    int r = rows++;
    ti.mu.push_back(rr.mu);
    ti.row_meta.emplace_back(rr.angle, rr.bin);
    for (const auto& sg : rr.segs) {
      if (removed[static_cast<std::size_t>(sg.cell)]) continue;
      int& col = col_of_cell[static_cast<std::size_t>(sg.cell)];
      if (col < 0) {
        col = static_cast<int>(ti.col_map.size());
        ti.col_map.push_back(sg.cell);
      }
      entries.push_back({r, col, sg.length / rr.mu});
    }
  }
  ti.A = SparseNonnegMatrix(rows, static_cast<int>(ti.col_map.size()), entries);
  return ti;
}

struct NonnegSolveResult {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> x;
  std::int64_t iterations = 0;
  std::int64_t phases = 0;
  double N = 0.0;
  std::string note;
};

// Find x >= 0 with 1 <= Ax <= 1+4.5 eps, the parallel algorithm specialized
// to a square system: the same matrix plays packing and covering, rows are
// never deleted (the packing side already caps the overshoot at O(N)), and
// the answer is the final iterate divided by N.
inline NonnegSolveResult solve_nonneg_system(const SparseNonnegMatrix& A,
                                             double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must be in (0,1)");
  const int m = A.rows(), n = A.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("empty system");
  for (int j = 0; j < n; ++j)
    if (A.col(j).empty())
      throw std::invalid_argument("column " + std::to_string(j) + " has no entries");

  NonnegSolveResult res;
  const double N = (1.0 + 2.0 * std::log(static_cast<double>(m))) / epsilon;
  res.N = N;
  const std::int64_t budget =
      static_cast<std::int64_t>(std::ceil(m * (N + epsilon) / epsilon)) + 1;

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    double mx = 0.0;
    for (const SparseTerm& t : A.col(j)) mx = std::max(mx, t.value);
    x[static_cast<std::size_t>(j)] = 1.0 / (n * mx);
  }
  std::vector<double> ax(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (const SparseTerm& t : A.row(i)) acc += t.value * x[t.index];
    ax[static_cast<std::size_t>(i)] = acc;
  }

  std::vector<double> tp(static_cast<std::size_t>(m)), tc(static_cast<std::size_t>(m));
  double sp_shift = 0.0, sc_shift = 0.0, Sp = 0.0, Sc = 0.0;
  auto anchor = [&]() {
    double mx = -kInf, mn = kInf;
    for (double v : ax) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    sp_shift = mx;
    sc_shift = -mn;
    Sp = Sc = 0.0;
    for (int i = 0; i < m; ++i) {
      tp[static_cast<std::size_t>(i)] = std::exp(ax[static_cast<std::size_t>(i)] - sp_shift);
      tc[static_cast<std::size_t>(i)] = std::exp(-ax[static_cast<std::size_t>(i)] - sc_shift);
      Sp += tp[static_cast<std::size_t>(i)];
      Sc += tc[static_cast<std::size_t>(i)];
    }
  };
  auto numerators = [&](int j, double& np, double& nc) {
    np = nc = 0.0;
    for (const SparseTerm& t : A.col(j)) {
      np += t.value * tp[t.index];
      nc += t.value * tc[t.index];
    }
  };

  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<char> elig(static_cast<std::size_t>(n));
  double log_g = 0.0;
  bool g_set = false;
  for (;;) {
    double mn = kInf;
    for (double v : ax) mn = std::min(mn, v);
    if (mn >= N) {
      res.status = SolveStatus::feasible;
      res.x = std::move(x);
      for (double& v : res.x) v /= N;
      return res;
    }
    double K = 0.0;
    int count = 0;
    auto rescan = [&]() {
      K = std::exp(std::log1p(epsilon) + log_g - sp_shift + sc_shift);
      count = 0;
      for (int j = 0; j < n; ++j) {
        double np, nc;
        numerators(j, np, nc);
        elig[static_cast<std::size_t>(j)] = np <= nc * K ? 1 : 0;
        count += elig[static_cast<std::size_t>(j)];
      }
    };
    if (g_set) rescan();
    if (!g_set || count == 0) {
      anchor();
      double min_ratio = kInf;
      for (int j = 0; j < n; ++j) {
        double np, nc;
        numerators(j, np, nc);
        if (nc > 0.0) min_ratio = std::min(min_ratio, (np / Sp) / (nc / Sc));
      }
      if (min_ratio > 1.0 + kInfeasibilityGuard) {
        res.note = "min ratio above 1 at phase start";
        return res;
      }
      log_g = (sp_shift + std::log(Sp)) - (sc_shift + std::log(Sc));
      g_set = true;
      ++res.phases;
      rescan();
      if (count == 0) {
        res.note = "no eligible column";
        return res;
      }
    }
    for (int j = 0; j < n; ++j)
      d[static_cast<std::size_t>(j)] =
          elig[static_cast<std::size_t>(j)] ? x[static_cast<std::size_t>(j)] : 0.0;
    double delta = 0.0;
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (const SparseTerm& t : A.row(i)) acc += t.value * d[t.index];
      delta = std::max(delta, acc);
    }
    double scale = epsilon / delta;
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (const SparseTerm& t : A.row(i)) acc += t.value * d[t.index];
      if (acc == 0.0) continue;
      auto k = static_cast<std::size_t>(i);
      ax[k] += scale * acc;
      Sp -= tp[k];
      Sc -= tc[k];
      tp[k] = std::exp(ax[k] - sp_shift);
      tc[k] = std::exp(-ax[k] - sc_shift);
      Sp += tp[k];
      Sc += tc[k];
    }
    for (int j = 0; j < n; ++j)
      if (elig[static_cast<std::size_t>(j)])
        x[static_cast<std::size_t>(j)] += scale * d[static_cast<std::size_t>(j)];
    ++res.iterations;
    double mx_exp = -kInf;
    for (double v : ax) mx_exp = std::max(mx_exp, v);
    if (mx_exp - sp_shift > 30.0) anchor();
    if (res.iterations >= budget) {
      res.status = SolveStatus::budget_exhausted;
      res.x = std::move(x);
      for (double& v : res.x) v /= N;
      res.note = "iteration budget";
      return res;
    }
  }
}

// Mixed instance carrying the same square system plus x_j <= 1 box rows,
// solved through the ordinary solver path rather than the specialized loop.
inline MixedInstance box_constrained_instance(const SparseNonnegMatrix& A) {
  MixedInstance inst;
  inst.num_vars = A.cols();
  std::vector<MatrixEntry> pack;
  for (const MatrixEntry& e : A.entries()) pack.push_back(e);
  for (int j = 0; j < A.cols(); ++j)
    pack.push_back({A.rows() + j, j, 1.0});
  inst.packing = SparseNonnegMatrix(A.rows() + A.cols(), A.cols(), pack);
  inst.packing_rhs.assign(static_cast<std::size_t>(A.rows() + A.cols()), 1.0);
  inst.covering = A;
  inst.covering_rhs.assign(static_cast<std::size_t>(A.rows()), 1.0);
  return inst;
}

// Tiny grayscale dump for eyeballing reconstructions.
inline void write_pgm(std::ostream& os, const std::vector<double>& grid,
                      int side) {
  double mx = 0.0;
  for (double v : grid) mx = std::max(mx, v);
  if (mx <= 0.0) mx = 1.0;
  os << "P2\n" << side << " " << side << "\n255\n";
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      int v = static_cast<int>(
          std::lround(255.0 * grid[static_cast<std::size_t>(r * side + c)] / mx));
      os << std::clamp(v, 0, 255) << (c + 1 == side ? "" : " ");
    }
    os << "\n";
  }
}

}  // namespace mpc

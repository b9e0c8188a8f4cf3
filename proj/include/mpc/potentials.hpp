#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/instance.hpp"

namespace mpc {

// lmax y = ln sum_i e^{y_i}. Computed against the running maximum so the
// exponentials never overflow: max y <= lmax y <= max y + ln(len).
inline double lmax(std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("lmax: empty vector");
  double shift = *std::max_element(y.begin(), y.end());
  double s = 0.0;
  for (double v : y) s += std::exp(v - shift);
  return shift + std::log(s);
}

// lmin y = -ln sum_i e^{-y_i} = -lmax(-y); min y - ln(len) <= lmin y <= min y.
inline double lmin(std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("lmin: empty vector");
  double shift = *std::min_element(y.begin(), y.end());
  double s = 0.0;
  for (double v : y) s += std::exp(shift - v);
  return shift - std::log(s);
}

// Gradient of lmax: w_i = e^{y_i} / sum_k e^{y_k}. Nonnegative, sums to 1.
inline std::vector<double> gradient_weights(std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("gradient_weights: empty vector");
  double shift = *std::max_element(y.begin(), y.end());
  std::vector<double> w(y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    w[i] = std::exp(y[i] - shift);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

enum class DerivativeSign { plus, minus };

// partial_j(M, x)  = d lmax(Mx)/dx_j = sum_i M_ij e^{(Mx)_i} / sum_i e^{(Mx)_i}
// partial_j(M, -x) = d lmin(Mx)/dx_j = sum_i M_ij e^{-(Mx)_i} / sum_i e^{-(Mx)_i}
// From-scratch form used by tests and oracles; solvers use PotentialState.
inline double column_derivative(const SparseNonnegMatrix& M,
                                std::span<const double> x, int j,
                                DerivativeSign sign) {
  if (M.rows() == 0) return 0.0;
  std::vector<double> y = M.multiply(x);
  if (sign == DerivativeSign::minus)
    for (double& v : y) v = -v;
  std::vector<double> w = gradient_weights(y);
  double acc = 0.0;
  for (const SparseTerm& t : M.col(j)) acc += t.value * w[t.index];
  return acc;
}

// Incrementally maintained solver state over a normalized instance:
// x, Px, Cx, the covering-row active mask, and the shifted exponential sums
//   S_p = sum_i e^{(Px)_i - shift_p}        over packing rows,
//   S_c = sum_{active i} e^{-(Cx)_i - shift_c}.
// Shifts keep ln S_p in (-inf, 30] and ln S_c in [-30, ~ln m_c]; a full
// recompute every 2^16 increments bounds accumulated drift. All bulk sums run
// over fixed-size chunks combined in chunk order, so results do not depend on
// the worker-thread count.
class PotentialState {
 public:
  static constexpr double kShiftWindow = 30.0;
  static constexpr std::int64_t kRecomputeInterval = 1 << 16;
  static constexpr int kChunk = 2048;

  explicit PotentialState(const NormalizedInstance& ni, int threads = 1)
      : ni_(&ni), threads_(std::max(1, threads)) {
    const std::size_t n = static_cast<std::size_t>(ni.packing.cols());
    x_.assign(n, 0.0);
    px_.assign(static_cast<std::size_t>(ni.packing.rows()), 0.0);
    cx_.assign(static_cast<std::size_t>(ni.covering.rows()), 0.0);
    active_.assign(cx_.size(), 1);
    active_count_ = static_cast<int>(cx_.size());
    rebuild_terms();
  }

  const NormalizedInstance& normalized() const { return *ni_; }
  std::span<const double> x() const { return x_; }
  std::span<const double> px() const { return px_; }
  std::span<const double> cx() const { return cx_; }
  bool row_active(int i) const { return active_[static_cast<std::size_t>(i)] != 0; }
  int active_count() const { return active_count_; }
  std::int64_t row_updates() const { return row_updates_; }
  int shift_epoch() const { return shift_epoch_; }
  double shift_p() const { return shift_p_; }
  double shift_c() const { return shift_c_; }

  void set_x(std::span<const double> x0) {
    std::copy(x0.begin(), x0.end(), x_.begin());
    recompute_products();
    rebuild_terms();
  }

  double lmax_px() const {
    return S_p_ > 0.0 ? shift_p_ + std::log(S_p_) : -kInf;
  }
  double lmin_cx() const {
    return S_c_ > 0.0 ? -(shift_c_ + std::log(S_c_)) : kInf;
  }
  // ln sum e^{(Px)_i} - ln sum_{active} e^{-(Cx)_i} = lmax Px + lmin Cx
  double log_global() const { return lmax_px() + lmin_cx(); }

  double sum_px() const { return sum_px_; }
  double sum_cx_active() const { return sum_cx_active_; }

  // Linear-domain column sums against the shifted terms. num_pack(j) e^{shift_p}
  // is sum_i P_ij e^{(Px)_i}; zero means the column has no packing entries or
  // every term underflowed (then the true local ratio is negligible anyway).
  double num_pack(int j) const {
    double acc = 0.0;
    for (const SparseTerm& t : ni_->packing.col(j)) acc += t.value * t_p_[t.index];
    return acc;
  }
  double num_cover_active(int j) const {
    double acc = 0.0;
    for (const SparseTerm& t : ni_->covering.col(j))
      if (active_[static_cast<std::size_t>(t.index)]) acc += t.value * t_c_[t.index];
    return acc;
  }

  // local_j = sum_i P_ij e^{(Px)_i} / sum_{active i} C_ij e^{-(Cx)_i}, in logs.
  // Requires num_cover_active(j) > 0; callers skip columns where it is 0.
  double log_local(int j) const {
    double np = num_pack(j);
    double nc = num_cover_active(j);
    if (nc <= 0.0) return kInf;
    if (np <= 0.0) return -kInf;
    return std::log(np) + shift_p_ - (std::log(nc) + shift_c_);
  }
  // ratio_j = local_j / global = partial_j(P, x) / partial_j(C, -x), in logs.
  double log_ratio(int j) const { return log_local(j) - log_global(); }

  double partial_pack(int j) const { return S_p_ > 0.0 ? num_pack(j) / S_p_ : 0.0; }
  double partial_cover(int j) const {
    return S_c_ > 0.0 ? num_cover_active(j) / S_c_ : 0.0;
  }

  // Largest entry of column j over packing rows and active covering rows.
  // The step size eps / step_limit(j) raises the tightest row by exactly eps.
  double step_limit(int j) const {
    double m = 0.0;
    for (const SparseTerm& t : ni_->packing.col(j)) m = std::max(m, t.value);
    for (const SparseTerm& t : ni_->covering.col(j))
      if (active_[static_cast<std::size_t>(t.index)]) m = std::max(m, t.value);
    return m;
  }

  // x_j += alpha. Covering rows that reach rhs are appended to crossed (the
  // caller decides whether to deactivate them). O(column degree).
  void increment(int j, double alpha, std::vector<int>* crossed) {
    x_[static_cast<std::size_t>(j)] += alpha;
    for (const SparseTerm& t : ni_->packing.col(j)) {
      const std::size_t i = static_cast<std::size_t>(t.index);
      double nw = px_[i] + alpha * t.value;
      sum_px_ += nw - px_[i];
      px_[i] = nw;
      double tn = std::exp(nw - shift_p_);
      S_p_ += tn - t_p_[i];
      t_p_[i] = tn;
    }
    for (const SparseTerm& t : ni_->covering.col(j)) {
      const std::size_t i = static_cast<std::size_t>(t.index);
      if (!active_[i]) continue;
      double nw = cx_[i] + alpha * t.value;
      sum_cx_active_ += nw - cx_[i];
      cx_[i] = nw;
      double tn = std::exp(-nw - shift_c_);
      S_c_ += tn - t_c_[i];
      t_c_[i] = tn;
      if (nw >= ni_->rhs && crossed) crossed->push_back(t.index);
    }
    row_updates_ += static_cast<std::int64_t>(ni_->packing.col(j).size()) +
                    static_cast<std::int64_t>(ni_->covering.col(j).size());
    after_increment();
  }

  // x += dx for a dense delta vector (parallel solver). Row deltas are
  // accumulated row-major so the update is deterministic for any thread
  // count; covering rows crossing rhs are appended to crossed in row order.
  void increment_bulk(std::span<const double> dx, std::vector<int>* crossed) {
    for (std::size_t j = 0; j < x_.size(); ++j) x_[j] += dx[j];
    const int mp = ni_->packing.rows();
    const int mc = ni_->covering.rows();
    std::vector<double> spd(num_chunks(mp), 0.0), scd(num_chunks(mc), 0.0),
        pxd(num_chunks(mp), 0.0), cxd(num_chunks(mc), 0.0);
    run_chunked(num_chunks(mp), threads_, [&](int chunk) {
      double sdelta = 0.0, xdelta = 0.0;
      for (int i = chunk * kChunk; i < std::min(mp, (chunk + 1) * kChunk); ++i) {
        double d = 0.0;
        for (const SparseTerm& t : ni_->packing.row(i)) d += t.value * dx[t.index];
        const std::size_t ii = static_cast<std::size_t>(i);
        double nw = px_[ii] + d;
        xdelta += nw - px_[ii];
        px_[ii] = nw;
        double tn = std::exp(nw - shift_p_);
        sdelta += tn - t_p_[ii];
        t_p_[ii] = tn;
      }
      spd[static_cast<std::size_t>(chunk)] = sdelta;
      pxd[static_cast<std::size_t>(chunk)] = xdelta;
    });
    run_chunked(num_chunks(mc), threads_, [&](int chunk) {
      double sdelta = 0.0, xdelta = 0.0;
      for (int i = chunk * kChunk; i < std::min(mc, (chunk + 1) * kChunk); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        if (!active_[ii]) continue;
        double d = 0.0;
        for (const SparseTerm& t : ni_->covering.row(i)) d += t.value * dx[t.index];
        if (d == 0.0) continue;
        double nw = cx_[ii] + d;
        xdelta += nw - cx_[ii];
        cx_[ii] = nw;
        double tn = std::exp(-nw - shift_c_);
        sdelta += tn - t_c_[ii];
        t_c_[ii] = tn;
      }
      scd[static_cast<std::size_t>(chunk)] = sdelta;
      cxd[static_cast<std::size_t>(chunk)] = xdelta;
    });
    for (double v : spd) S_p_ += v;
    for (double v : pxd) sum_px_ += v;
    for (double v : scd) S_c_ += v;
    for (double v : cxd) sum_cx_active_ += v;
    if (crossed)
      for (int i = 0; i < mc; ++i)
        if (active_[static_cast<std::size_t>(i)] &&
            cx_[static_cast<std::size_t>(i)] >= ni_->rhs)
          crossed->push_back(i);
    row_updates_ += static_cast<std::int64_t>(ni_->packing.nnz()) +
                    static_cast<std::int64_t>(ni_->covering.nnz());
    after_increment();
  }

  void deactivate_row(int i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    if (!active_[ii]) return;
    active_[ii] = 0;
    --active_count_;
    S_c_ -= t_c_[ii];
    sum_cx_active_ -= cx_[ii];
    t_c_[ii] = 0.0;
    if (cover_sum_stale()) refresh_cover();
  }

  // Re-anchors both shifts at the current running maxima. Called at phase
  // starts; the term arrays are only re-exponentiated when the shift moved
  // more than 1, which keeps the stored terms within e of their anchor
  // without an O(m) exp sweep at every phase.
  void refresh_shifts() {
    if (std::abs(pack_max_exponent() - shift_p_) > 1.0) refresh_pack();
    if (std::abs(cover_max_exponent() - shift_c_) > 1.0) refresh_cover();
  }

  void force_refresh() {
    refresh_pack();
    refresh_cover();
  }

 private:
  static int num_chunks(int rows) { return (rows + kChunk - 1) / kChunk; }
  static constexpr double kBig = 1.0684e13;       // e^30
  static constexpr double kSmall = 9.3576e-14;    // e^-30
  static constexpr double kCoverDecay = 3.3546e-4; // e^-8

  double pack_max_exponent() const {
    double m = -kInf;
    for (double v : px_) m = std::max(m, v);
    return px_.empty() ? 0.0 : m;
  }
  double cover_max_exponent() const {
    double m = -kInf;
    for (std::size_t i = 0; i < cx_.size(); ++i)
      if (active_[i]) m = std::max(m, -cx_[i]);
    return m == -kInf ? 0.0 : m;
  }

  // The covering sum only decays, so rounding error baked in while it was
  // large eventually dominates the true value; re-anchor once it has fallen
  // e^8 below the last fresh recompute, long before that happens.
  bool cover_sum_stale() const {
    return active_count_ > 0 && !(S_c_ > std::max(kSmall, S_c_anchor_ * kCoverDecay));
  }

  void after_increment() {
    if (S_p_ > kBig) refresh_pack();
    if (cover_sum_stale()) refresh_cover();
    if (++increments_since_recompute_ >= kRecomputeInterval) {
      recompute_products();
      rebuild_terms();
    }
  }

  void recompute_products() {
    const int mp = ni_->packing.rows();
    const int mc = ni_->covering.rows();
    run_chunked(num_chunks(mp), threads_, [&](int chunk) {
      for (int i = chunk * kChunk; i < std::min(mp, (chunk + 1) * kChunk); ++i) {
        double acc = 0.0;
        for (const SparseTerm& t : ni_->packing.row(i)) acc += t.value * x_[t.index];
        px_[static_cast<std::size_t>(i)] = acc;
      }
    });
    run_chunked(num_chunks(mc), threads_, [&](int chunk) {
      for (int i = chunk * kChunk; i < std::min(mc, (chunk + 1) * kChunk); ++i) {
        double acc = 0.0;
        for (const SparseTerm& t : ni_->covering.row(i)) acc += t.value * x_[t.index];
        cx_[static_cast<std::size_t>(i)] = acc;
      }
    });
  }

  void rebuild_terms() {
    shift_p_ = pack_max_exponent();
    shift_c_ = cover_max_exponent();
    t_p_.assign(px_.size(), 0.0);
    t_c_.assign(cx_.size(), 0.0);
    sum_px_ = 0.0;
    sum_cx_active_ = 0.0;
    for (std::size_t i = 0; i < px_.size(); ++i) {
      t_p_[i] = std::exp(px_[i] - shift_p_);
      sum_px_ += px_[i];
    }
    for (std::size_t i = 0; i < cx_.size(); ++i) {
      if (!active_[i]) continue;
      t_c_[i] = std::exp(-cx_[i] - shift_c_);
      sum_cx_active_ += cx_[i];
    }
    S_p_ = chunked_sum(t_p_);
    S_c_ = chunked_sum(t_c_);
    S_c_anchor_ = S_c_;
    increments_since_recompute_ = 0;
    ++shift_epoch_;
  }

  void refresh_pack() {
    shift_p_ = pack_max_exponent();
    for (std::size_t i = 0; i < px_.size(); ++i)
      t_p_[i] = std::exp(px_[i] - shift_p_);
    S_p_ = chunked_sum(t_p_);
    ++shift_epoch_;
  }

  void refresh_cover() {
    shift_c_ = cover_max_exponent();
    for (std::size_t i = 0; i < cx_.size(); ++i)
      t_c_[i] = active_[i] ? std::exp(-cx_[i] - shift_c_) : 0.0;
    S_c_ = chunked_sum(t_c_);
    S_c_anchor_ = S_c_;
    ++shift_epoch_;
  }

  double chunked_sum(const std::vector<double>& v) const {
    const int n = static_cast<int>(v.size());
    double total = 0.0;
    for (int chunk = 0; chunk < num_chunks(n); ++chunk) {
      double part = 0.0;
      for (int i = chunk * kChunk; i < std::min(n, (chunk + 1) * kChunk); ++i)
        part += v[static_cast<std::size_t>(i)];
      total += part;
    }
    return total;
  }

  const NormalizedInstance* ni_;
  int threads_;
  std::vector<double> x_, px_, cx_, t_p_, t_c_;
  std::vector<char> active_;
  int active_count_ = 0;
  double shift_p_ = 0.0, shift_c_ = 0.0;
  double S_p_ = 0.0, S_c_ = 0.0, S_c_anchor_ = 0.0;
  double sum_px_ = 0.0, sum_cx_active_ = 0.0;
  std::int64_t increments_since_recompute_ = 0;
  std::int64_t row_updates_ = 0;
  int shift_epoch_ = 0;
};

}  // namespace mpc

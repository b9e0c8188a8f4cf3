#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mpc {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an instance is infeasible by inspection, e.g. a covering row
// whose entire support is forced to zero. Carries the offending row.
class TriviallyInfeasible : public std::runtime_error {
 public:
  TriviallyInfeasible(const std::string& what, int row)
      : std::runtime_error(what), row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack used when comparing a computed ratio against 1 for infeasibility
// certificates. Declaring infeasible only above 1 + kInfeasibilityGuard keeps
// the certificate sound under floating-point drift.
inline constexpr double kInfeasibilityGuard = 1e-9;

// Compensated (Kahan) accumulator for from-scratch verification sums.
class KahanSum {
 public:
  void add(double v) {
    double y = v - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Uniform double in [0, 1) from a raw 64-bit word. Used instead of
// std::uniform_real_distribution so generated instances are byte-identical
// across standard libraries.
inline double uniform01(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Runs fn(chunk_index) for chunk_index in [0, num_chunks). Chunks are assigned
// to at most `threads` workers; callers that need determinism must make chunk
// results independent and combine them in chunk order afterwards.
template <typename Fn>
void run_chunked(int num_chunks, int threads, Fn&& fn) {
  if (threads <= 1 || num_chunks <= 1) {
    for (int c = 0; c < num_chunks; ++c) fn(c);
    return;
  }
  int workers = std::min(threads, num_chunks);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int c = w; c < num_chunks; c += workers) fn(c);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mpc

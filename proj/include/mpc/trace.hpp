#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mpc/common.hpp"

namespace mpc {

enum class TraceEventKind { increment, deletion, phase_start };

struct TraceEvent {
  TraceEventKind kind = TraceEventKind::increment;
  std::int64_t k = 0;  // increments completed after this event
  int phase = 0;
  std::vector<std::pair<int, double>> cols;  // increment: (column, step) pairs
  int row = -1;                              // deletion: covering row index
  // Snapshot after the event. log_g is NaN for the generic solver.
  double phi = 0.0, psi = 0.0, lmax_px = 0.0, lmin_cx = 0.0, log_g = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Prints e^{log_v} in scientific notation even when it exceeds the double
// range, so deep traces keep a meaningful g column.
inline std::string format_exp(double log_v) {
  if (std::isnan(log_v)) return "";
  if (std::isinf(log_v)) return log_v > 0 ? "inf" : "0";
  double log10v = log_v / std::log(10.0);
  if (std::abs(log10v) < 300.0) return format_double(std::exp(log_v));
  double e = std::floor(log10v);
  double mant = std::pow(10.0, log10v - e);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12ge%+.0f", mant, e);
  return buf;
}

}  // namespace detail

// Online run diagnostics. The scalar summaries are cheap and always
// maintained; full event recording is opt-in since it grows with the run.
struct DiagnosticTrace {
  bool record_events = false;
  std::vector<TraceEvent> events;

  std::int64_t increments = 0;
  std::int64_t deletions = 0;
  int phases = 0;
  // Largest single-step rise of phi across increments and deletions (phi
  // should never rise), and smallest single-increment gain of psi (each
  // increment should gain at least eps). Steps where phi is not finite on
  // both sides are skipped.
  double max_phi_rise = -kInf;
  double min_psi_gain = kInf;
  std::vector<double> phase_log_g;
  std::vector<std::int64_t> phase_increments;

  void prime(double phi, double psi) {
    last_phi_ = phi;
    last_psi_ = psi;
  }

  void on_phase_start(double log_g) {
    ++phases;
    phase_log_g.push_back(log_g);
    phase_increments.push_back(0);
    if (record_events) {
      TraceEvent ev;
      ev.kind = TraceEventKind::phase_start;
      ev.k = increments;
      ev.phase = phases - 1;
      ev.log_g = log_g;
      events.push_back(std::move(ev));
    }
  }

  void on_increment(std::vector<std::pair<int, double>> cols, double phi,
                    double psi, double lmax_px, double lmin_cx, double log_g) {
    ++increments;
    if (!phase_increments.empty()) ++phase_increments.back();
    note_phi(phi);
    if (std::isfinite(psi) && std::isfinite(last_psi_))
      min_psi_gain = std::min(min_psi_gain, psi - last_psi_);
    last_psi_ = psi;
    if (record_events) {
      TraceEvent ev;
      ev.k = increments;
      ev.phase = phases > 0 ? phases - 1 : 0;
      ev.cols = std::move(cols);
      ev.phi = phi;
      ev.psi = psi;
      ev.lmax_px = lmax_px;
      ev.lmin_cx = lmin_cx;
      ev.log_g = log_g;
      events.push_back(std::move(ev));
    }
  }

  void on_deletion(int row, double phi, double psi, double lmax_px,
                   double lmin_cx, double log_g) {
    ++deletions;
    note_phi(phi);
    last_psi_ = psi;
    if (record_events) {
      TraceEvent ev;
      ev.kind = TraceEventKind::deletion;
      ev.k = increments;
      ev.phase = phases > 0 ? phases - 1 : 0;
      ev.row = row;
      ev.phi = phi;
      ev.psi = psi;
      ev.lmax_px = lmax_px;
      ev.lmin_cx = lmin_cx;
      ev.log_g = log_g;
      events.push_back(std::move(ev));
    }
  }

  // One CSV row per increment: k, column (or "multi"), phi, psi, lmax Px,
  // lmin Cx, g, phase.
  void write_csv(std::ostream& os) const {
    os << "k,j,phi,psi,lmax_px,lmin_cx,g,phase\n";
    for (const TraceEvent& ev : events) {
      if (ev.kind != TraceEventKind::increment) continue;
      os << ev.k << ',';
      if (ev.cols.size() == 1)
        os << ev.cols.front().first;
      else
        os << "multi";
      os << ',' << detail::format_double(ev.phi) << ','
         << detail::format_double(ev.psi) << ','
         << detail::format_double(ev.lmax_px) << ','
         << detail::format_double(ev.lmin_cx) << ','
         << detail::format_exp(ev.log_g) << ',' << ev.phase << '\n';
    }
  }

 private:
  void note_phi(double phi) {
    if (std::isfinite(phi) && std::isfinite(last_phi_))
      max_phi_rise = std::max(max_phi_rise, phi - last_phi_);
    last_phi_ = phi;
  }

  double last_phi_ = kInf;
  double last_psi_ = kInf;
};

}  // namespace mpc

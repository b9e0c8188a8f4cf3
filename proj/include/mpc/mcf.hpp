#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpc/common.hpp"
#include "mpc/solvers.hpp"

namespace mpc {

// Min-cost concurrent multicommodity flow: ship demand d_i for every
// commodity subject to edge capacities mu_e and a total cost budget W,
// all satisfied within a (1+4.5 eps) factor. Phased algorithm with
// shortest-path eligibility; m = 1 + #edges + #commodities.

struct FlowEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;    // w_e >= 0
  double capacity = 0.0;  // mu_e > 0
};

struct Commodity {
  int source = 0;
  int sink = 0;
  double demand = 0.0;  // d_i > 0
};

struct FlowNetwork {
  int nodes = 0;
  std::vector<FlowEdge> edges;
  std::vector<Commodity> commodities;
  double budget = 0.0;  // W > 0
};

inline void validate_network(const FlowNetwork& net) {
  if (net.nodes < 0) throw ParseError("nodes must be nonnegative");
  if (!(net.budget > 0.0) || !std::isfinite(net.budget))
    throw ParseError("budget must be positive and finite");
  for (std::size_t k = 0; k < net.edges.size(); ++k) {
    const FlowEdge& e = net.edges[k];
    if (e.from < 0 || e.from >= net.nodes || e.to < 0 || e.to >= net.nodes)
      throw ParseError("edge " + std::to_string(k) + ": endpoint out of range");
    if (e.from == e.to)
      throw ParseError("edge " + std::to_string(k) + ": self-loop");
    if (!(e.capacity > 0.0) || !std::isfinite(e.capacity))
      throw ParseError("edge " + std::to_string(k) + ": capacity must be positive");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      throw ParseError("edge " + std::to_string(k) + ": weight must be nonnegative");
  }
  for (std::size_t k = 0; k < net.commodities.size(); ++k) {
    const Commodity& c = net.commodities[k];
    if (c.source < 0 || c.source >= net.nodes || c.sink < 0 || c.sink >= net.nodes)
      throw ParseError("commodity " + std::to_string(k) + ": endpoint out of range");
    if (c.source == c.sink)
      throw ParseError("commodity " + std::to_string(k) + ": source equals sink");
    if (!(c.demand > 0.0) || !std::isfinite(c.demand))
      throw ParseError("commodity " + std::to_string(k) + ": demand must be positive");
  }
}

// l(e) = (w_e/W) e^{w.f/W} + e^{f(e)/mu_e}/mu_e, evaluated with a common
// shift subtracted from both exponents so path sums stay inside double range.
inline double edge_length(double weight, double budget, double cost_exponent,
                          double edge_exponent, double capacity, double shift) {
  return (weight / budget) * std::exp(cost_exponent - shift) +
         std::exp(edge_exponent - shift) / capacity;
}

// Acceptance test of the phased loop: path local / frozen global <= 1+eps,
// i.e. ln sum_{e in p} l(e) <= ln(1+eps) + log_g - shipped/d - ln d.
// Boundary equality accepts.
inline bool accept_path(double log_path_length, double shipped, double demand,
                        double log_g, double epsilon) {
  return log_path_length + shipped / demand + std::log(demand) <=
         std::log1p(epsilon) + log_g;
}

struct FlowStats {
  std::int64_t sp_calls = 0;
  std::int64_t augmentations = 0;
  std::int64_t phases = 0;
  double wall_time = 0.0;
  double N = 0.0;
  double max_capacity_ratio = 0.0;  // max_e f(e)/mu_e on the returned flow
  double budget_ratio = 0.0;        // w.f / W
  double min_shipped_ratio = 0.0;   // min_i shipped(i)/d_i
};

struct AugmentRecord {
  int commodity = 0;
  std::vector<int> edges;
  double delta = 0.0;
};

struct FlowOutcome {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<std::vector<double>> commodity_flow;  // [commodity][edge]
  std::vector<double> edge_flow;
  std::vector<double> shipped;
  double cost = 0.0;
  FlowStats stats;
  std::string note;
  std::vector<AugmentRecord> augments;  // recorded only on request
};

namespace detail {

struct McfState {
  const FlowNetwork* net;
  double W;
  std::vector<std::vector<int>> out_edges;  // node -> edge indices
  std::vector<double> f;                    // per-edge total flow
  std::vector<double> shipped;
  double cost = 0.0;
  double max_edge_exp = 0.0;  // max_e f(e)/mu_e, grows monotonically
  double shift = 0.0;         // common exponent shift, re-anchored per phase

  // Dijkstra scratch
  std::vector<double> dist;
  std::vector<int> parent_edge;
  std::vector<char> done;

  explicit McfState(const FlowNetwork& n)
      : net(&n),
        W(n.budget),
        out_edges(static_cast<std::size_t>(n.nodes)),
        f(n.edges.size(), 0.0),
        shipped(n.commodities.size(), 0.0),
        dist(static_cast<std::size_t>(n.nodes), kInf),
        parent_edge(static_cast<std::size_t>(n.nodes), -1),
        done(static_cast<std::size_t>(n.nodes), 0) {
    for (std::size_t k = 0; k < n.edges.size(); ++k)
      out_edges[static_cast<std::size_t>(n.edges[k].from)].push_back(
          static_cast<int>(k));
  }

  double cost_exp() const { return cost / W; }

  void anchor_shift() { shift = std::max(cost_exp(), max_edge_exp); }

  // Nonnegative-weight label-setting shortest path under current lengths.
  // Returns ln of the true path length (shift added back), or +inf when the
  // sink is unreachable. The path comes out in parent_edge.
  double dijkstra(int source, int sink) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent_edge.begin(), parent_edge.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[static_cast<std::size_t>(source)] = 0.0;
    pq.emplace(0.0, source);
    double ce = cost_exp();
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (done[static_cast<std::size_t>(v)]) continue;
      done[static_cast<std::size_t>(v)] = 1;
      if (v == sink) break;
      for (int ei : out_edges[static_cast<std::size_t>(v)]) {
        const FlowEdge& e = net->edges[static_cast<std::size_t>(ei)];
        double len = edge_length(e.weight, W, ce,
                                 f[static_cast<std::size_t>(ei)] / e.capacity,
                                 e.capacity, shift);
        double nd = d + len;
        if (nd < dist[static_cast<std::size_t>(e.to)]) {
          dist[static_cast<std::size_t>(e.to)] = nd;
          parent_edge[static_cast<std::size_t>(e.to)] = ei;
          pq.emplace(nd, e.to);
        }
      }
    }
    double d = dist[static_cast<std::size_t>(sink)];
    if (!(d < kInf)) return kInf;
    return std::log(d) + shift;
  }

  std::vector<int> extract_path(int source, int sink) const {
    std::vector<int> path;
    int v = sink;
    while (v != source) {
      int ei = parent_edge[static_cast<std::size_t>(v)];
      path.push_back(ei);
      v = net->edges[static_cast<std::size_t>(ei)].from;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // ln sum over packing rows (cost row + capacity rows) of e^{row value}.
  double log_sum_pack() const {
    double mx = std::max(cost_exp(), max_edge_exp);
    double acc = std::exp(cost_exp() - mx);
    for (std::size_t k = 0; k < f.size(); ++k)
      acc += std::exp(f[k] / net->edges[k].capacity - mx);
    return mx + std::log(acc);
  }

  // ln sum over active covering rows of e^{-shipped_i/d_i}.
  double log_sum_cover(const std::vector<char>& active) const {
    double mn = kInf;
    for (std::size_t i = 0; i < shipped.size(); ++i)
      if (active[i]) mn = std::min(mn, shipped[i] / net->commodities[i].demand);
    double acc = 0.0;
    for (std::size_t i = 0; i < shipped.size(); ++i)
      if (active[i])
        acc += std::exp(-(shipped[i] / net->commodities[i].demand - mn));
    return -mn + std::log(acc);
  }
};

}  // namespace detail

inline FlowOutcome solve_mcf(const FlowNetwork& net, double epsilon,
                             bool record_augments = false,
                             std::int64_t max_augmentations = 0) {
  validate_network(net);
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must be in (0,1)");
  auto t0 = std::chrono::steady_clock::now();
  const int E = static_cast<int>(net.edges.size());
  const int K = static_cast<int>(net.commodities.size());
  FlowOutcome out;
  out.commodity_flow.assign(static_cast<std::size_t>(K),
                            std::vector<double>(static_cast<std::size_t>(E), 0.0));
  out.edge_flow.assign(static_cast<std::size_t>(E), 0.0);
  out.shipped.assign(static_cast<std::size_t>(K), 0.0);
  if (K == 0) {
    out.status = SolveStatus::feasible;
    out.stats.min_shipped_ratio = kInf;
    return out;
  }

  const double m = 1.0 + E + K;
  const double N = 2.0 * std::log(m) / epsilon;
  const std::int64_t budget =
      max_augmentations > 0
          ? max_augmentations
          : static_cast<std::int64_t>(std::ceil(m * (N + epsilon) / epsilon)) + 1;

  detail::McfState st(net);
  std::vector<std::vector<double>> fi(
      static_cast<std::size_t>(K),
      std::vector<double>(static_cast<std::size_t>(E), 0.0));
  std::vector<char> active(static_cast<std::size_t>(K), 1);
  int remaining = K;

  auto finish = [&](SolveStatus status, std::string note) {
    out.status = status;
    out.note = std::move(note);
    if (status != SolveStatus::infeasible) {
      for (int i = 0; i < K; ++i) {
        for (int e = 0; e < E; ++e)
          out.commodity_flow[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(e)] =
              fi[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] / N;
        out.shipped[static_cast<std::size_t>(i)] =
            st.shipped[static_cast<std::size_t>(i)] / N;
      }
      for (int e = 0; e < E; ++e)
        out.edge_flow[static_cast<std::size_t>(e)] =
            st.f[static_cast<std::size_t>(e)] / N;
      out.cost = st.cost / N;
      double mx = 0.0;
      for (int e = 0; e < E; ++e)
        mx = std::max(mx, out.edge_flow[static_cast<std::size_t>(e)] /
                              net.edges[static_cast<std::size_t>(e)].capacity);
      out.stats.max_capacity_ratio = mx;
      out.stats.budget_ratio = out.cost / net.budget;
      double mn = kInf;
      for (int i = 0; i < K; ++i)
        mn = std::min(mn, out.shipped[static_cast<std::size_t>(i)] /
                              net.commodities[static_cast<std::size_t>(i)].demand);
      out.stats.min_shipped_ratio = mn;
    }
    out.stats.N = N;
    out.stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  };

  for (;;) {
    if (remaining == 0) return finish(SolveStatus::feasible, "");
    ++out.stats.phases;
    st.anchor_shift();
    double log_g = st.log_sum_pack() - st.log_sum_cover(active);
    // Phase-start scan: one shortest path per active commodity. The shortest
    // path minimizes the local numerator and the covering part is
    // path-independent, so the minimum over commodities is the minimum over
    // all columns of the implicit path instance.
    double min_num = kInf;
    for (int i = 0; i < K; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      const Commodity& com = net.commodities[static_cast<std::size_t>(i)];
      double log_len = st.dijkstra(com.source, com.sink);
      ++out.stats.sp_calls;
      if (log_len == kInf)
        return finish(SolveStatus::infeasible,
                      "commodity " + std::to_string(i) + " has no path");
      min_num = std::min(min_num, log_len +
                                      st.shipped[static_cast<std::size_t>(i)] /
                                          com.demand +
                                      std::log(com.demand));
    }
    if (min_num > std::log1p(kInfeasibilityGuard) + log_g)
      return finish(SolveStatus::infeasible, "min ratio above 1 at phase start");

    for (int i = 0; i < K; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      const Commodity& com = net.commodities[static_cast<std::size_t>(i)];
      for (;;) {
        // Exponents only grow; re-anchor if they drifted far past the phase
        // shift so the shifted lengths stay representable.
        if (std::max(st.cost_exp(), st.max_edge_exp) - st.shift > 30.0)
          st.anchor_shift();
        double log_len = st.dijkstra(com.source, com.sink);
        ++out.stats.sp_calls;
        if (!accept_path(log_len, st.shipped[static_cast<std::size_t>(i)],
                         com.demand, log_g, epsilon))
          break;
        std::vector<int> path = st.extract_path(com.source, com.sink);
        double wp = 0.0, min_cap = kInf;
        for (int ei : path) {
          wp += net.edges[static_cast<std::size_t>(ei)].weight;
          min_cap =
              std::min(min_cap, net.edges[static_cast<std::size_t>(ei)].capacity);
        }
        double delta = epsilon * std::min({com.demand, min_cap,
                                           wp > 0.0 ? net.budget / wp : kInf});
        for (int ei : path) {
          auto k = static_cast<std::size_t>(ei);
          st.f[k] += delta;
          fi[static_cast<std::size_t>(i)][k] += delta;
          st.max_edge_exp =
              std::max(st.max_edge_exp, st.f[k] / net.edges[k].capacity);
        }
        st.cost += wp * delta;
        st.shipped[static_cast<std::size_t>(i)] += delta;
        ++out.stats.augmentations;
        if (record_augments)
          out.augments.push_back({i, std::move(path), delta});
        if (st.shipped[static_cast<std::size_t>(i)] >= N * com.demand) {
          active[static_cast<std::size_t>(i)] = 0;
          --remaining;
          break;
        }
        if (out.stats.augmentations >= budget)
          return finish(SolveStatus::budget_exhausted, "augmentation budget");
      }
    }
  }
}

struct FlowVerifyReport {
  bool ok = false;
  std::string message;
  double max_conservation_error = 0.0;
};

// Recomputes conservation, demands, capacities and the cost budget from the
// per-commodity flows against the (1+4.5 eps) tolerance.
inline FlowVerifyReport verify_flow(const FlowNetwork& net,
                                    const FlowOutcome& sol, double eps) {
  FlowVerifyReport rep;
  const int E = static_cast<int>(net.edges.size());
  const int K = static_cast<int>(net.commodities.size());
  double bound = 1.0 + 4.5 * eps;
  std::vector<double> total(static_cast<std::size_t>(E), 0.0);
  for (int i = 0; i < K; ++i) {
    const auto& fi = sol.commodity_flow[static_cast<std::size_t>(i)];
    const Commodity& com = net.commodities[static_cast<std::size_t>(i)];
    std::vector<double> balance(static_cast<std::size_t>(net.nodes), 0.0);
    double scale = std::max(1.0, com.demand);
    for (int e = 0; e < E; ++e) {
      double v = fi[static_cast<std::size_t>(e)];
      if (!(v >= 0.0)) {
        rep.message = "negative flow";
        return rep;
      }
      balance[static_cast<std::size_t>(net.edges[static_cast<std::size_t>(e)].from)] += v;
      balance[static_cast<std::size_t>(net.edges[static_cast<std::size_t>(e)].to)] -= v;
      total[static_cast<std::size_t>(e)] += v;
      scale = std::max(scale, v);
    }
    for (int v = 0; v < net.nodes; ++v) {
      if (v == com.source || v == com.sink) continue;
      double err = std::abs(balance[static_cast<std::size_t>(v)]) / scale;
      rep.max_conservation_error = std::max(rep.max_conservation_error, err);
      if (err > 1e-9) {
        rep.message = "conservation violated for commodity " + std::to_string(i) +
                      " at node " + std::to_string(v);
        return rep;
      }
    }
    double out_flow = balance[static_cast<std::size_t>(com.source)];
    if (out_flow < com.demand * (1.0 - 1e-9)) {
      rep.message = "commodity " + std::to_string(i) + " ships " +
                    std::to_string(out_flow) + " < demand";
      return rep;
    }
  }
  KahanSum cost;
  for (int e = 0; e < E; ++e) {
    const FlowEdge& fe = net.edges[static_cast<std::size_t>(e)];
    if (total[static_cast<std::size_t>(e)] > bound * fe.capacity * (1.0 + 1e-9)) {
      rep.message = "edge " + std::to_string(e) + " exceeds capacity bound";
      return rep;
    }
    cost.add(total[static_cast<std::size_t>(e)] * fe.weight);
  }
  if (cost.value() > bound * net.budget * (1.0 + 1e-9)) {
    rep.message = "cost exceeds budget bound";
    return rep;
  }
  rep.ok = true;
  rep.message = "ok";
  return rep;
}

}  // namespace mpc

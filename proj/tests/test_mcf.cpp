#include <catch_amalgamated.hpp>

#include <cmath>

#include <mpc/mcf.hpp>

using namespace mpc;

namespace {

FlowNetwork single_edge(double weight, double capacity, double demand,
                        double budget) {
  FlowNetwork net;
  net.nodes = 2;
  net.edges = {{0, 1, weight, capacity}};
  net.commodities = {{0, 1, demand}};
  net.budget = budget;
  return net;
}

}  // namespace

TEST_CASE("network validation") {
  FlowNetwork net = single_edge(1.0, 1.0, 1.0, 1.0);
  CHECK_NOTHROW(validate_network(net));

  FlowNetwork bad = net;
  bad.edges[0].to = 2;
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.edges[0].to = 0;  // self loop
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.edges[0].capacity = 0.0;
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.edges[0].weight = -1.0;
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.commodities[0].sink = 0;
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.commodities[0].demand = 0.0;
  CHECK_THROWS_AS(validate_network(bad), ParseError);

  bad = net;
  bad.budget = 0.0;
  CHECK_THROWS_AS(validate_network(bad), ParseError);
}

TEST_CASE("edge length at zero flow") {
  // w = W and unit capacity: (w/W)e^0 + e^0/mu = 2
  CHECK(edge_length(1.0, 1.0, 0.0, 0.0, 1.0, 0.0) == Catch::Approx(2.0));
  // shift cancels out of both exponentials
  CHECK(edge_length(2.0, 4.0, 3.0, 3.0, 0.5, 3.0) ==
        Catch::Approx(0.5 * 1.0 + 1.0 / 0.5));
}

TEST_CASE("acceptance test is a boundary-inclusive comparison") {
  // log len + shipped/d + log d == log(1+eps) + log_g exactly -> accept
  double eps = 0.25;
  double log_g = 1.0;
  double demand = 2.0, shipped = 0.5;
  double log_len = std::log1p(eps) + log_g - shipped / demand - std::log(demand);
  CHECK(accept_path(log_len, shipped, demand, log_g, eps));
  CHECK_FALSE(accept_path(log_len + 1e-9, shipped, demand, log_g, eps));
}

TEST_CASE("single edge network ships its demand") {
  FlowOutcome out = solve_mcf(single_edge(1.0, 1.0, 1.0, 1.0), 0.1);
  REQUIRE(out.status == SolveStatus::feasible);
  REQUIRE(out.edge_flow.size() == 1);
  CHECK(out.edge_flow[0] >= 1.0 - 1e-9);
  CHECK(out.edge_flow[0] <= 1.45);
  CHECK(out.cost <= 1.45);
  CHECK(out.shipped[0] == Catch::Approx(out.edge_flow[0]));
  CHECK(out.stats.max_capacity_ratio <= 1.45);
  CHECK(out.stats.min_shipped_ratio >= 1.0 - 1e-9);
  CHECK(verify_flow(single_edge(1.0, 1.0, 1.0, 1.0), out, 0.1).ok);
}

TEST_CASE("capacity below demand is infeasible") {
  FlowOutcome out = solve_mcf(single_edge(1.0, 0.4, 1.0, 10.0), 0.1);
  CHECK(out.status == SolveStatus::infeasible);
}

TEST_CASE("tight budget is infeasible, generous budget is not") {
  // shipping one unit over the edge costs 5; W = 1 cannot pay for it
  FlowOutcome tight = solve_mcf(single_edge(5.0, 2.0, 1.0, 1.0), 0.1);
  CHECK(tight.status == SolveStatus::infeasible);
  FlowOutcome loose = solve_mcf(single_edge(5.0, 2.0, 1.0, 8.0), 0.1);
  CHECK(loose.status == SolveStatus::feasible);
}

TEST_CASE("two parallel edges split the demand") {
  FlowNetwork net;
  net.nodes = 2;
  net.edges = {{0, 1, 1.0, 0.6}, {0, 1, 1.0, 0.6}};
  net.commodities = {{0, 1, 1.0}};
  net.budget = 4.0;
  FlowOutcome out = solve_mcf(net, 0.1);
  REQUIRE(out.status == SolveStatus::feasible);
  double total = out.edge_flow[0] + out.edge_flow[1];
  CHECK(total >= 1.0 - 1e-9);
  // neither edge can carry the demand alone within (1+4.5 eps)
  CHECK(out.edge_flow[0] > 0.05);
  CHECK(out.edge_flow[1] > 0.05);
  CHECK(out.stats.max_capacity_ratio <= 1.45);
  CHECK(verify_flow(net, out, 0.1).ok);
}

TEST_CASE("disconnected commodity is infeasible immediately") {
  FlowNetwork net;
  net.nodes = 4;
  net.edges = {{0, 1, 1.0, 1.0}, {2, 3, 1.0, 1.0}};
  net.commodities = {{0, 3, 1.0}};
  net.budget = 10.0;
  FlowOutcome out = solve_mcf(net, 0.1);
  CHECK(out.status == SolveStatus::infeasible);
  CHECK(out.note.find("no path") != std::string::npos);
  CHECK(out.stats.augmentations == 0);
}

TEST_CASE("no commodities is trivially feasible") {
  FlowNetwork net;
  net.nodes = 2;
  net.edges = {{0, 1, 1.0, 1.0}};
  net.budget = 1.0;
  FlowOutcome out = solve_mcf(net, 0.1);
  REQUIRE(out.status == SolveStatus::feasible);
  CHECK(out.edge_flow == std::vector<double>{0.0});
}

TEST_CASE("two commodities share a middle edge") {
  // 0 -> 2 -> 3 and 1 -> 2 -> 3 -> 4ish; make them contend on (2,3)
  FlowNetwork net;
  net.nodes = 5;
  net.edges = {
      {0, 2, 1.0, 2.0},  // 0: commodity A inlet
      {1, 2, 1.0, 2.0},  // 1: commodity B inlet
      {2, 3, 0.5, 2.5},  // 2: shared
      {3, 4, 1.0, 2.0},  // 3: commodity B outlet
  };
  net.commodities = {{0, 3, 1.0}, {1, 4, 1.0}};
  net.budget = 20.0;
  FlowOutcome out = solve_mcf(net, 0.1, true);
  REQUIRE(out.status == SolveStatus::feasible);
  REQUIRE(verify_flow(net, out, 0.1).ok);
  // shared edge carries both demands
  CHECK(out.edge_flow[2] >= 2.0 * (1.0 - 1e-9));
  CHECK(out.edge_flow[2] <= 2.5 * 1.45 + 1e-9);

  // per-commodity conservation at the intermediate node 2
  for (int i = 0; i < 2; ++i) {
    const auto& fi = out.commodity_flow[static_cast<std::size_t>(i)];
    double in2 = fi[0] + fi[1];
    double out2 = fi[2];
    CHECK(in2 == Catch::Approx(out2).margin(1e-9));
  }
}

TEST_CASE("every augmentation raises its tightest row by exactly epsilon") {
  FlowNetwork net;
  net.nodes = 3;
  net.edges = {{0, 1, 1.0, 1.5}, {1, 2, 2.0, 1.2}, {0, 2, 3.0, 0.8}};
  net.commodities = {{0, 2, 1.0}};
  net.budget = 12.0;
  const double eps = 0.2;
  FlowOutcome out = solve_mcf(net, eps, true);
  REQUIRE(out.status == SolveStatus::feasible);
  REQUIRE_FALSE(out.augments.empty());
  CHECK(static_cast<std::int64_t>(out.augments.size()) ==
        out.stats.augmentations);

  double N = out.stats.N;
  for (const AugmentRecord& a : out.augments) {
    double wp = 0.0;
    for (int e : a.edges) wp += net.edges[static_cast<std::size_t>(e)].weight;
    double max_rise = a.delta * wp / net.budget;
    for (int e : a.edges)
      max_rise = std::max(
          max_rise, a.delta / net.edges[static_cast<std::size_t>(e)].capacity);
    double d = net.commodities[static_cast<std::size_t>(a.commodity)].demand;
    max_rise = std::max(max_rise, a.delta / d);
    CHECK(max_rise <= eps * (1.0 + 1e-12));
    CHECK(max_rise >= eps * (1.0 - 1e-9));
    (void)N;
  }
}

TEST_CASE("augmentation budget exhaustion is distinct") {
  FlowOutcome out = solve_mcf(single_edge(1.0, 1.0, 1.0, 1.0), 0.1, false, 2);
  CHECK(out.status == SolveStatus::budget_exhausted);
}

TEST_CASE("flow verifier rejects corrupted flows") {
  FlowNetwork net = single_edge(1.0, 1.0, 1.0, 1.0);
  FlowOutcome out = solve_mcf(net, 0.1);
  REQUIRE(out.status == SolveStatus::feasible);
  REQUIRE(verify_flow(net, out, 0.1).ok);

  FlowOutcome bad = out;
  bad.commodity_flow[0][0] *= 0.5;
  bad.edge_flow[0] *= 0.5;
  FlowVerifyReport rep = verify_flow(net, bad, 0.1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.message.find("demand") != std::string::npos);
}

TEST_CASE("deactivated commodities stop receiving flow") {
  // one cheap commodity saturates early; the expensive one keeps augmenting
  FlowNetwork net;
  net.nodes = 4;
  net.edges = {{0, 1, 0.1, 5.0}, {2, 3, 1.0, 5.0}};
  net.commodities = {{0, 1, 0.5}, {2, 3, 3.0}};
  net.budget = 30.0;
  FlowOutcome out = solve_mcf(net, 0.1);
  REQUIRE(out.status == SolveStatus::feasible);
  // neither commodity overshoots its demand by more than the step bound
  for (int i = 0; i < 2; ++i) {
    double d = net.commodities[static_cast<std::size_t>(i)].demand;
    CHECK(out.shipped[static_cast<std::size_t>(i)] >= d * (1.0 - 1e-9));
    CHECK(out.shipped[static_cast<std::size_t>(i)] <= d * (1.0 + 0.2));
  }
}

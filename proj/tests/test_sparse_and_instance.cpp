#include <catch_amalgamated.hpp>

#include <mpc/instance.hpp>
#include <mpc/json_io.hpp>
#include <mpc/sparse_matrix.hpp>

using namespace mpc;

TEST_CASE("sparse matrix basics") {
  SparseNonnegMatrix a(2, 3, {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 3.0}});
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == 3);
  REQUIRE(a.nnz() == 3);

  std::vector<double> x = {1.0, 2.0, 3.0};
  std::vector<double> y = a.multiply(x);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == Catch::Approx(7.0));
  CHECK(y[1] == Catch::Approx(6.0));
}

TEST_CASE("sparse matrix rejects bad entries") {
  CHECK_THROWS_AS(SparseNonnegMatrix(1, 1, {{0, 0, -1.0}}), ParseError);
  CHECK_THROWS_AS(SparseNonnegMatrix(1, 1, {{1, 0, 1.0}}), ParseError);
  CHECK_THROWS_AS(SparseNonnegMatrix(1, 1, {{0, 2, 1.0}}), ParseError);
  CHECK_NOTHROW(SparseNonnegMatrix(1, 1, {{0, 0, 0.0}}));
}

TEST_CASE("row and column views agree") {
  SparseNonnegMatrix a(3, 2, {{0, 0, 1.0}, {1, 0, 2.0}, {1, 1, 4.0}, {2, 1, 5.0}});
  double total_rows = 0.0, total_cols = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (const auto& e : a.row(i)) total_rows += e.value;
  for (int j = 0; j < a.cols(); ++j)
    for (const auto& e : a.col(j)) total_cols += e.value;
  CHECK(total_rows == Catch::Approx(12.0));
  CHECK(total_cols == Catch::Approx(12.0));
}

TEST_CASE("normalization scales rows to a common target") {
  MixedInstance inst;
  inst.num_vars = 2;
  inst.packing = SparseNonnegMatrix(1, 2, {{0, 0, 2.0}, {0, 1, 1.0}});
  inst.packing_rhs = {4.0};
  inst.covering = SparseNonnegMatrix(1, 2, {{0, 0, 1.0}});
  inst.covering_rhs = {2.0};

  NormalizedInstance ni = normalize(inst, 10.0);
  // packing row scaled by N / rhs = 2.5, covering row by 5
  REQUIRE(ni.packing.nnz() == 2);
  CHECK(ni.packing.row(0)[0].value == Catch::Approx(5.0));
  CHECK(ni.packing.row(0)[1].value == Catch::Approx(2.5));
  CHECK(ni.covering.row(0)[0].value == Catch::Approx(5.0));
}

TEST_CASE("zero packing rhs forces supported variables to zero") {
  MixedInstance inst;
  inst.num_vars = 2;
  inst.packing = SparseNonnegMatrix(1, 2, {{0, 0, 1.0}});
  inst.packing_rhs = {0.0};
  inst.covering = SparseNonnegMatrix(1, 2, {{0, 1, 1.0}});
  inst.covering_rhs = {1.0};

  NormalizedInstance ni = normalize(inst, 5.0);
  REQUIRE(ni.forced_zero_vars == std::vector<int>{0});
  REQUIRE(ni.col_map == std::vector<int>{1});
  CHECK(ni.packing.rows() == 0);
}

TEST_CASE("covering row supported only by forced variables is infeasible") {
  MixedInstance inst;
  inst.num_vars = 1;
  inst.packing = SparseNonnegMatrix(1, 1, {{0, 0, 1.0}});
  inst.packing_rhs = {0.0};
  inst.covering = SparseNonnegMatrix(1, 1, {{0, 0, 1.0}});
  inst.covering_rhs = {1.0};
  CHECK_THROWS_AS(normalize(inst, 5.0), TriviallyInfeasible);
}

TEST_CASE("zero covering rhs rows are dropped") {
  MixedInstance inst;
  inst.num_vars = 1;
  inst.packing = SparseNonnegMatrix(0, 1, {});
  inst.covering = SparseNonnegMatrix(2, 1, {{0, 0, 1.0}, {1, 0, 2.0}});
  inst.covering_rhs = {0.0, 4.0};

  NormalizedInstance ni = normalize(inst, 8.0);
  REQUIRE(ni.covering.rows() == 1);
  CHECK(ni.covering.row(0)[0].value == Catch::Approx(4.0));
}

TEST_CASE("validate rejects shape mismatches") {
  MixedInstance inst;
  inst.num_vars = 2;
  inst.packing = SparseNonnegMatrix(1, 2, {{0, 0, 1.0}});
  inst.packing_rhs = {1.0, 2.0};  // wrong length
  inst.covering = SparseNonnegMatrix(0, 2, {});
  CHECK_THROWS_AS(validate_instance(inst), ParseError);

  inst.packing_rhs = {1.0};
  CHECK_NOTHROW(validate_instance(inst));
}

TEST_CASE("instance JSON round trip") {
  GeneratedInstance g = generate_random_feasible(6, 3, 3, 0.6, 42);
  std::string text = serialize_instance(g.instance);
  MixedInstance back = parse_instance(text);
  REQUIRE(back.num_vars == g.instance.num_vars);
  REQUIRE(back.packing.nnz() == g.instance.packing.nnz());
  REQUIRE(back.covering.nnz() == g.instance.covering.nnz());
  CHECK(serialize_instance(back) == text);
}

TEST_CASE("parser ignores unknown keys and rejects malformed input") {
  MixedInstance inst = parse_instance(R"({
    "num_vars": 1,
    "comment": "extra keys are fine",
    "packing": {"rows": 1, "entries": [[0, 0, 2.0]], "rhs": [1.0]},
    "covering": {"rows": 0, "entries": [], "rhs": []}
  })");
  CHECK(inst.num_vars == 1);
  CHECK(inst.packing_rhs[0] == 1.0);

  CHECK_THROWS_AS(parse_instance("{"), ParseError);
  CHECK_THROWS_AS(parse_instance(R"({"num_vars": 1})"), ParseError);
  CHECK_THROWS_AS(parse_instance(R"({
    "num_vars": 1,
    "packing": {"rows": 1, "entries": [[0, 0, -2.0]], "rhs": [1.0]},
    "covering": {"rows": 0, "entries": [], "rhs": []}
  })"), ParseError);
}

TEST_CASE("generator plants a feasible point") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    GeneratedInstance g = generate_random_feasible(10, 5, 4, 0.4, seed);
    std::vector<double> px = g.instance.packing.multiply(g.x_star);
    std::vector<double> cx = g.instance.covering.multiply(g.x_star);
    for (std::size_t i = 0; i < px.size(); ++i)
      CHECK(px[i] <= g.instance.packing_rhs[i]);
    for (std::size_t i = 0; i < cx.size(); ++i)
      CHECK(cx[i] >= g.instance.covering_rhs[i]);
  }
}

TEST_CASE("generator is deterministic in the seed") {
  GeneratedInstance a = generate_random_feasible(8, 4, 4, 0.5, 123);
  GeneratedInstance b = generate_random_feasible(8, 4, 4, 0.5, 123);
  CHECK(serialize_instance(a.instance) == serialize_instance(b.instance));
  CHECK(a.x_star == b.x_star);
}

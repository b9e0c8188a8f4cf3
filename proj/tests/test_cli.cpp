#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <mpc/cli.hpp>

namespace fs = std::filesystem;
using mpc::json;

namespace {

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("mpc_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_of(const std::string& name) {
  return (work_dir() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// runs the CLI in-process with stdout/stderr captured
int run_cli(std::vector<std::string> args, std::string* out = nullptr,
            std::string* err = nullptr) {
  args.insert(args.begin(), "mpc");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream cap_out, cap_err;
  std::streambuf* old_out = std::cout.rdbuf(cap_out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(cap_err.rdbuf());
  int code = -1;
  try {
    code = mpc::cli::run(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (out) *out = cap_out.str();
  if (err) *err = cap_err.str();
  return code;
}

json without_timings(json j) {
  if (j.contains("stats") && j["stats"].contains("wall_time"))
    j["stats"].erase("wall_time");
  return j;
}

}  // namespace

TEST_CASE("gen is reproducible per seed") {
  const std::string f1 = path_of("gen1.json"), f2 = path_of("gen2.json");
  std::vector<std::string> args = {"gen",  "--seed",          "7",
                                   "--vars", "6",             "--packing-rows",
                                   "4",    "--covering-rows", "3"};
  auto a1 = args, a2 = args;
  a1.insert(a1.end(), {"--output", f1});
  a2.insert(a2.end(), {"--output", f2});
  REQUIRE(run_cli(a1) == 0);
  REQUIRE(run_cli(a2) == 0);
  CHECK(slurp(f1) == slurp(f2));

  json j = json::parse(slurp(f1));
  CHECK(j["seed"] == 7);
  CHECK(j["num_vars"] == 6);
  REQUIRE(j.contains("x_star"));
  CHECK(j["x_star"].size() == 6);

  const std::string f3 = path_of("gen3.json");
  auto a3 = args;
  a3[2] = "8";
  a3.insert(a3.end(), {"--output", f3});
  REQUIRE(run_cli(a3) == 0);
  CHECK(slurp(f1) != slurp(f3));
}

TEST_CASE("solve emits a feasible certificate and is deterministic") {
  const std::string inst = path_of("inst.json");
  REQUIRE(run_cli({"gen", "--seed", "11", "--vars", "8", "--packing-rows", "5",
                   "--covering-rows", "4", "--output", inst}) == 0);

  std::string out1, out2;
  REQUIRE(run_cli({"solve", "--input", inst, "--epsilon", "0.1"}, &out1) == 0);
  REQUIRE(run_cli({"solve", "--input", inst, "--epsilon", "0.1"}, &out2) == 0);

  json j1 = json::parse(out1), j2 = json::parse(out2);
  CHECK(j1["status"] == "feasible");
  REQUIRE(j1["x"].size() == 8);
  CHECK(without_timings(j1).dump() == without_timings(j2).dump());

  // the emitted vector passes the checker
  const std::string sol = path_of("sol.json");
  spit(sol, out1);
  std::string chk;
  REQUIRE(run_cli({"check", "--input", inst, "--solution", sol}, &chk) == 0);
  json jc = json::parse(chk);
  CHECK(jc["ok"] == true);
}

TEST_CASE("check flags a violated solution with exit 2") {
  const std::string inst = path_of("inst_chk.json");
  REQUIRE(run_cli({"gen", "--seed", "12", "--vars", "5", "--packing-rows", "3",
                   "--covering-rows", "3", "--output", inst}) == 0);
  std::string out;
  REQUIRE(run_cli({"solve", "--input", inst}, &out) == 0);
  json j = json::parse(out);
  for (auto& v : j["x"]) v = v.get<double>() * 0.5;
  const std::string sol = path_of("sol_bad.json");
  spit(sol, j.dump());

  std::string chk;
  CHECK(run_cli({"check", "--input", inst, "--solution", sol}, &chk) == 2);
  json jc = json::parse(chk);
  CHECK(jc["ok"] == false);
  CHECK(jc["message"].get<std::string>().find("covering") != std::string::npos);
}

TEST_CASE("solve reports infeasible instances with exit 2") {
  const std::string inst = path_of("infeas.json");
  spit(inst, R"({
    "num_vars": 1,
    "packing":  {"rows": 1, "entries": [[0, 0, 2.0]], "rhs": [1.0]},
    "covering": {"rows": 1, "entries": [[0, 0, 1.0]], "rhs": [1.0]}
  })");
  std::string out;
  CHECK(run_cli({"solve", "--input", inst}, &out) == 2);
  CHECK(json::parse(out)["status"] == "infeasible");
}

TEST_CASE("optimize approximates the scaling optimum") {
  const std::string inst = path_of("opt.json");
  spit(inst, R"({
    "num_vars": 1,
    "packing":  {"rows": 1, "entries": [[0, 0, 3.0]], "rhs": [1.0]},
    "covering": {"rows": 1, "entries": [[0, 0, 1.0]], "rhs": [1.0]}
  })");
  std::string out;
  REQUIRE(run_cli({"optimize", "--input", inst, "--epsilon", "0.1"}, &out) == 0);
  json j = json::parse(out);
  double lam = j["lambda"].get<double>();
  CHECK(lam >= 3.0 * (1.0 - 1e-6));
  CHECK(lam <= 3.0 * 1.1 * (1.0 + 1e-6));
  REQUIRE(j["x"].size() == 1);
}

TEST_CASE("flow routes a single edge and rejects a disconnected sink") {
  const std::string net = path_of("net.json");
  spit(net, R"({
    "nodes": 2, "budget": 10.0,
    "edges": [{"from": 0, "to": 1, "weight": 1.0, "capacity": 2.0}],
    "commodities": [{"source": 0, "sink": 1, "demand": 1.0}]
  })");
  std::string out;
  REQUIRE(run_cli({"flow", "--input", net, "--epsilon", "0.1"}, &out) == 0);
  json j = json::parse(out);
  CHECK(j["status"] == "feasible");
  CHECK(j["shipped"][0].get<double>() >= 1.0 - 1e-9);

  const std::string bad = path_of("net_bad.json");
  spit(bad, R"({
    "nodes": 3, "budget": 10.0,
    "edges": [{"from": 0, "to": 1, "weight": 1.0, "capacity": 2.0}],
    "commodities": [{"source": 0, "sink": 2, "demand": 1.0}]
  })");
  CHECK(run_cli({"flow", "--input", bad}, &out) == 2);
  CHECK(json::parse(out)["note"].get<std::string>().find("no path") !=
        std::string::npos);
}

TEST_CASE("tomo reconstructs and writes a PGM") {
  const std::string ph = path_of("phantom.json");
  spit(ph, R"({"grid": [[1.0, 0.5], [0.25, 1.0]]})");
  const std::string pgm = path_of("recon.pgm");
  std::string out;
  REQUIRE(run_cli({"tomo", "--input", ph, "--epsilon", "0.1", "--pgm", pgm},
                  &out) == 0);
  json j = json::parse(out);
  CHECK(j["status"] == "feasible");
  REQUIRE(j["x"].size() == 4);
  CHECK(j["residual_min"].get<double>() >= 1.0 - 1e-9);
  CHECK(j["residual_max"].get<double>() <= 1.45 + 1e-9);
  CHECK(slurp(pgm).substr(0, 2) == "P2");

  // box mode also succeeds and respects the added unit rows
  std::string box_out;
  REQUIRE(run_cli({"tomo", "--input", ph, "--box"}, &box_out) == 0);
  json jb = json::parse(box_out);
  for (const auto& v : jb["x"])
    CHECK(v.get<double>() <= 1.0 + 4.5 * 0.1 + 1e-9);
}

TEST_CASE("trace goes to the requested CSV file") {
  const std::string inst = path_of("inst_tr.json");
  REQUIRE(run_cli({"gen", "--seed", "3", "--vars", "4", "--packing-rows", "3",
                   "--covering-rows", "2", "--output", inst}) == 0);
  const std::string csv = path_of("trace.csv");
  REQUIRE(run_cli({"solve", "--input", inst, "--trace", csv}) == 0);
  std::string text = slurp(csv);
  CHECK(text.substr(0, 2) == "k,");
  CHECK(std::count(text.begin(), text.end(), '\n') >= 2);
}

TEST_CASE("bad inputs exit 1, usage errors are nonzero") {
  const std::string junk = path_of("junk.json");
  spit(junk, "this is not json");
  std::string err;
  CHECK(run_cli({"solve", "--input", junk}, nullptr, &err) == 1);
  CHECK_FALSE(err.empty());

  CHECK(run_cli({"solve"}, nullptr, &err) != 0);          // missing --input
  CHECK(run_cli({"frobnicate"}, nullptr, &err) != 0);     // unknown subcommand
  CHECK(run_cli({"solve", "--input", junk, "--epsilon", "2.0"}, nullptr,
                &err) == 1);                              // rejected config
}

TEST_CASE("bench emits one CSV row per sweep point") {
  std::string out;
  REQUIRE(run_cli({"bench", "--seed", "1"}, &out) == 0);
  std::istringstream ss(out);
  std::string header;
  std::getline(ss, header);
  CHECK(header ==
        "rows,vars,eps,N,increments,phases,row_updates,wall_time");
  int rows = 0;
  for (std::string line; std::getline(ss, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 12);
}

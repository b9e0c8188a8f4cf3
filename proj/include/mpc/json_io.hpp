#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpc/instance.hpp"
#include "mpc/mcf.hpp"
#include "mpc/optimizer.hpp"
#include "mpc/solvers.hpp"
#include "mpc/tomography.hpp"

namespace mpc {

using json = nlohmann::ordered_json;

namespace detail {

inline json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed JSON");
  return j;
}

inline SparseNonnegMatrix matrix_from_json(const json& j, int num_vars,
                                           const char* which) {
  if (!j.is_object()) throw ParseError(std::string(which) + " must be an object");
  if (!j.contains("rows") || !j["rows"].is_number_integer())
    throw ParseError(std::string(which) + ": missing integer 'rows'");
  int rows = j["rows"].get<int>();
  std::vector<MatrixEntry> entries;
  if (j.contains("entries")) {
    if (!j["entries"].is_array())
      throw ParseError(std::string(which) + ": 'entries' must be an array");
    for (const auto& e : j["entries"]) {
      if (!e.is_array() || e.size() != 3)
        throw ParseError(std::string(which) + ": entry must be [row, col, value]");
      entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
  }
  return SparseNonnegMatrix(rows, num_vars, entries);
}

inline json matrix_to_json(const SparseNonnegMatrix& m,
                           const std::vector<double>& rhs) {
  json j;
  j["rows"] = m.rows();
  json entries = json::array();
  for (const MatrixEntry& e : m.entries())
    entries.push_back(json::array({e.row, e.col, e.value}));
  j["entries"] = std::move(entries);
  j["rhs"] = rhs;
  return j;
}

inline std::vector<double> rhs_from_json(const json& j, int rows,
                                         const char* which) {
  if (!j.contains("rhs") || !j["rhs"].is_array())
    throw ParseError(std::string(which) + ": missing 'rhs' array");
  std::vector<double> rhs = j["rhs"].get<std::vector<double>>();
  if (static_cast<int>(rhs.size()) != rows)
    throw ParseError(std::string(which) + ": rhs length disagrees with rows");
  return rhs;
}

}  // namespace detail

// Instance format: { "num_vars": int,
//                    "packing":  { "rows": int, "entries": [[r,c,v],...], "rhs": [...] },
//                    "covering": { ... } }
// Unknown top-level keys are ignored so generated files may carry extras.
inline MixedInstance parse_instance(const std::string& text) {
  json j = detail::parse_text(text);
  if (!j.is_object() || !j.contains("num_vars") ||
      !j["num_vars"].is_number_integer())
    throw ParseError("missing integer 'num_vars'");
  MixedInstance inst;
  inst.num_vars = j["num_vars"].get<int>();
  if (!j.contains("packing") || !j.contains("covering"))
    throw ParseError("missing 'packing' or 'covering'");
  inst.packing = detail::matrix_from_json(j["packing"], inst.num_vars, "packing");
  inst.packing_rhs =
      detail::rhs_from_json(j["packing"], inst.packing.rows(), "packing");
  inst.covering =
      detail::matrix_from_json(j["covering"], inst.num_vars, "covering");
  inst.covering_rhs =
      detail::rhs_from_json(j["covering"], inst.covering.rows(), "covering");
  validate_instance(inst);
  return inst;
}

inline std::string serialize_instance(const MixedInstance& inst) {
  json j;
  j["num_vars"] = inst.num_vars;
  j["packing"] = detail::matrix_to_json(inst.packing, inst.packing_rhs);
  j["covering"] = detail::matrix_to_json(inst.covering, inst.covering_rhs);
  return j.dump(2) + "\n";
}

inline json stats_to_json(const SolveStats& s) {
  json j;
  j["increments"] = s.increments;
  j["phases"] = s.phases;
  j["deleted_cover_rows"] = s.deleted_cover_rows;
  j["wall_time"] = s.wall_time;
  j["N"] = s.N;
  j["max_packing_ratio"] = s.max_packing_ratio;
  j["min_covering_ratio"] = s.min_covering_ratio;
  j["row_updates"] = s.row_updates;
  j["forced_zero_vars"] = s.forced_zero_vars;
  j["unconstrained_vars"] = s.unconstrained_vars;
  return j;
}

inline json solution_to_json(const SolveOutcome& out) {
  json j;
  j["status"] = to_string(out.status);
  j["x"] = out.x;
  j["stats"] = stats_to_json(out.stats);
  if (!out.note.empty()) j["note"] = out.note;
  return j;
}

struct ParsedSolution {
  std::string status;
  std::vector<double> x;
};

inline ParsedSolution parse_solution(const std::string& text) {
  json j = detail::parse_text(text);
  ParsedSolution s;
  if (j.contains("status")) s.status = j["status"].get<std::string>();
  if (j.contains("x")) s.x = j["x"].get<std::vector<double>>();
  return s;
}

inline json optimize_to_json(const OptimizeOutcome& out) {
  json j;
  j["lambda"] = out.lambda;
  j["x"] = out.x;
  j["lambda_initial"] = out.lambda_initial;
  j["bracket"] = json::array({out.bracket_lo, out.bracket_hi});
  json log = json::array();
  for (const SubproblemRecord& r : out.subproblem_log) {
    json e;
    e["lambda"] = r.lambda;
    e["eps"] = r.eps_quality;
    e["status"] = to_string(r.status);
    e["increments"] = r.increments;
    e["wall_time"] = r.wall_time;
    log.push_back(std::move(e));
  }
  j["subproblem_log"] = std::move(log);
  if (!out.note.empty()) j["note"] = out.note;
  return j;
}

// Network format: { "nodes": int, "edges": [{"from","to","weight","capacity"}],
//                   "commodities": [{"source","sink","demand"}], "budget": real }
inline FlowNetwork parse_network(const std::string& text) {
  json j = detail::parse_text(text);
  FlowNetwork net;
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_number_integer())
    throw ParseError("missing integer 'nodes'");
  net.nodes = j["nodes"].get<int>();
  if (!j.contains("budget") || !j["budget"].is_number())
    throw ParseError("missing numeric 'budget'");
  net.budget = j["budget"].get<double>();
  if (j.contains("edges"))
    for (const auto& e : j["edges"])
      net.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(),
                           e.at("weight").get<double>(),
                           e.at("capacity").get<double>()});
  if (j.contains("commodities"))
    for (const auto& c : j["commodities"])
      net.commodities.push_back({c.at("source").get<int>(),
                                 c.at("sink").get<int>(),
                                 c.at("demand").get<double>()});
  validate_network(net);
  return net;
}

inline std::string serialize_network(const FlowNetwork& net) {
  json j;
  j["nodes"] = net.nodes;
  json edges = json::array();
  for (const FlowEdge& e : net.edges) {
    json je;
    je["from"] = e.from;
    je["to"] = e.to;
    je["weight"] = e.weight;
    je["capacity"] = e.capacity;
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  json coms = json::array();
  for (const Commodity& c : net.commodities) {
    json jc;
    jc["source"] = c.source;
    jc["sink"] = c.sink;
    jc["demand"] = c.demand;
    coms.push_back(std::move(jc));
  }
  j["commodities"] = std::move(coms);
  j["budget"] = net.budget;
  return j.dump(2) + "\n";
}

inline json flow_to_json(const FlowOutcome& out) {
  json j;
  j["status"] = to_string(out.status);
  j["edge_flow"] = out.edge_flow;
  j["commodity_flow"] = out.commodity_flow;
  j["shipped"] = out.shipped;
  j["cost"] = out.cost;
  json stats;
  stats["sp_calls"] = out.stats.sp_calls;
  stats["augmentations"] = out.stats.augmentations;
  stats["phases"] = out.stats.phases;
  stats["wall_time"] = out.stats.wall_time;
  stats["N"] = out.stats.N;
  stats["max_capacity_ratio"] = out.stats.max_capacity_ratio;
  stats["budget_ratio"] = out.stats.budget_ratio;
  stats["min_shipped_ratio"] = out.stats.min_shipped_ratio;
  j["stats"] = std::move(stats);
  if (!out.note.empty()) j["note"] = out.note;
  return j;
}

struct PhantomInput {
  std::vector<double> grid;  // row-major
  int side = 0;
  std::vector<double> angles_deg;  // empty: caller default
};

// Phantom format: { "grid": [[...], ...], "angles": [...] } or a bare 2-D array.
inline PhantomInput parse_phantom(const std::string& text) {
  json j = detail::parse_text(text);
  PhantomInput ph;
  const json* rows = nullptr;
  if (j.is_array()) {
    rows = &j;
  } else if (j.is_object() && j.contains("grid")) {
    rows = &j["grid"];
    if (j.contains("angles"))
      ph.angles_deg = j["angles"].get<std::vector<double>>();
  } else {
    throw ParseError("phantom must be a 2-D array or an object with 'grid'");
  }
  if (!rows->is_array() || rows->empty())
    throw ParseError("phantom grid must be a nonempty 2-D array");
  ph.side = static_cast<int>(rows->size());
  for (const auto& r : *rows) {
    if (!r.is_array() || static_cast<int>(r.size()) != ph.side)
      throw ParseError("phantom grid must be square");
    for (const auto& v : r) ph.grid.push_back(v.get<double>());
  }
  return ph;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

}  // namespace mpc

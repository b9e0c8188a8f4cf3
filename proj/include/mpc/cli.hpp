#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpc/json_io.hpp"
#include "mpc/oracle.hpp"

namespace mpc::cli {

namespace detail {

inline int log_level() {
  const char* env = std::getenv("MPC_LOG");
  if (!env) return 0;
  std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[mpc] " << msg << "\n";
}

inline void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty())
    std::cout << text;
  else
    write_file(output_path, text);
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "generic") return Algorithm::generic;
  if (s == "phased") return Algorithm::phased;
  if (s == "parallel") return Algorithm::parallel;
  throw CLI::ValidationError("--algorithm", "unknown algorithm: " + s);
}

inline Selector parse_selector(const std::string& s) {
  if (s == "min-ratio") return Selector::min_ratio;
  if (s == "min-difference") return Selector::min_difference;
  if (s == "first") return Selector::first_eligible;
  throw CLI::ValidationError("--selector", "unknown selector: " + s);
}

inline int status_exit(SolveStatus s) {
  if (s == SolveStatus::feasible) return 0;
  if (s == SolveStatus::infeasible) return 2;
  return 1;
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"width-independent mixed packing/covering solver"};
  app.require_subcommand(1);

  std::string input, output, solution_path, trace_path, angles_arg;
  double epsilon = 0.1;
  std::string algorithm = "phased", selector = "min-ratio";
  std::uint64_t seed = 1;
  std::int64_t max_increments = 0;
  int threads = 1;
  int gen_vars = 8, gen_prows = 4, gen_crows = 4;
  double gen_density = 0.5;
  bool tomo_box = false;
  std::string pgm_path;
  bool bench_optimizer = false;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    auto* opt = cmd->add_option("--input", input, "input JSON path");
    if (needs_input) opt->required();
    cmd->add_option("--output", output, "output path (default stdout)");
    cmd->add_option("--epsilon", epsilon, "accuracy parameter");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--threads", threads, "parallel solver lanes");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a mixed instance");
  add_common(solve_cmd, true);
  solve_cmd->add_option("--algorithm", algorithm, "generic|phased|parallel");
  solve_cmd->add_option("--selector", selector, "min-ratio|min-difference|first");
  solve_cmd->add_option("--max-increments", max_increments, "increment budget");
  solve_cmd->add_option("--trace", trace_path, "write per-increment CSV here");

  CLI::App* opt_cmd = app.add_subcommand("optimize", "minimize lambda");
  add_common(opt_cmd, true);
  opt_cmd->add_option("--algorithm", algorithm, "subproblem algorithm");

  CLI::App* flow_cmd = app.add_subcommand("flow", "multicommodity flow");
  add_common(flow_cmd, true);
  flow_cmd->add_option("--max-increments", max_increments, "augmentation budget");

  CLI::App* tomo_cmd = app.add_subcommand("tomo", "tomographic reconstruction");
  add_common(tomo_cmd, true);
  tomo_cmd->add_option("--angles", angles_arg, "comma-separated degrees");
  tomo_cmd->add_flag("--box", tomo_box, "add x_j <= 1 rows, use generic path");
  tomo_cmd->add_option("--algorithm", algorithm, "algorithm for --box");
  tomo_cmd->add_option("--pgm", pgm_path, "write reconstruction as PGM");

  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a feasible instance");
  add_common(gen_cmd, false);
  gen_cmd->add_option("--vars", gen_vars, "variable count");
  gen_cmd->add_option("--packing-rows", gen_prows, "packing row count");
  gen_cmd->add_option("--covering-rows", gen_crows, "covering row count");
  gen_cmd->add_option("--density", gen_density, "nonzero fraction");

  CLI::App* check_cmd = app.add_subcommand("check", "verify a solution file");
  add_common(check_cmd, true);
  check_cmd->add_option("--solution", solution_path, "solution JSON path")
      ->required();

  CLI::App* bench_cmd = app.add_subcommand("bench", "sweep (m, eps), emit CSV");
  add_common(bench_cmd, false);
  bench_cmd->add_option("--algorithm", algorithm, "generic|phased|parallel");
  bench_cmd->add_flag("--optimizer", bench_optimizer,
                      "time optimizer subproblems instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve_cmd) {
      MixedInstance inst = parse_instance(read_file(input));
      SolveConfig cfg;
      cfg.epsilon = epsilon;
      cfg.algorithm = detail::parse_algorithm(algorithm);
      cfg.selector = detail::parse_selector(selector);
      cfg.max_increments = max_increments;
      cfg.threads = threads;
      cfg.record_trace = !trace_path.empty();
      detail::log_info("solve: n=" + std::to_string(inst.num_vars) + " m=" +
                       std::to_string(inst.total_rows()));
      SolveOutcome out = solve(inst, cfg);
      if (!trace_path.empty()) {
        std::ostringstream csv;
        out.trace.write_csv(csv);
        write_file(trace_path, csv.str());
      }
      detail::emit(solution_to_json(out).dump(2) + "\n", output);
      return detail::status_exit(out.status);
    }
    if (*opt_cmd) {
      MixedInstance inst = parse_instance(read_file(input));
      SolveConfig cfg;
      cfg.algorithm = detail::parse_algorithm(algorithm);
      cfg.threads = threads;
      OptimizeOutcome out = optimize(inst, epsilon, cfg);
      detail::emit(optimize_to_json(out).dump(2) + "\n", output);
      return std::isfinite(out.lambda) ? 0 : 2;
    }
    if (*flow_cmd) {
      FlowNetwork net = parse_network(read_file(input));
      FlowOutcome out = solve_mcf(net, epsilon, false, max_increments);
      detail::emit(flow_to_json(out).dump(2) + "\n", output);
      return detail::status_exit(out.status);
    }
    if (*tomo_cmd) {
      PhantomInput ph = parse_phantom(read_file(input));
      std::vector<double> angles = ph.angles_deg;
      if (!angles_arg.empty()) {
        angles.clear();
        std::istringstream ss(angles_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) angles.push_back(std::stod(tok));
      }
      if (angles.empty()) angles = {0.0, 45.0, 90.0, 135.0};
      TomoInstance ti = build_tomo_instance(ph.grid, ph.side, angles);
      json j;
      std::vector<double> xg(ph.grid.size(), 0.0);
      int exit_code;
      if (tomo_box) {
        MixedInstance inst = box_constrained_instance(ti.A);
        SolveConfig cfg;
        cfg.epsilon = epsilon;
        cfg.algorithm = detail::parse_algorithm(algorithm);
        cfg.threads = threads;
        SolveOutcome out = solve(inst, cfg);
        j["status"] = to_string(out.status);
        j["stats"] = stats_to_json(out.stats);
        for (std::size_t k = 0; k < out.x.size(); ++k)
          xg[static_cast<std::size_t>(ti.col_map[k])] = out.x[k];
        exit_code = detail::status_exit(out.status);
      } else {
        NonnegSolveResult out = solve_nonneg_system(ti.A, epsilon);
        j["status"] = to_string(out.status);
        json stats;
        stats["iterations"] = out.iterations;
        stats["phases"] = out.phases;
        stats["N"] = out.N;
        j["stats"] = std::move(stats);
        for (std::size_t k = 0; k < out.x.size(); ++k)
          xg[static_cast<std::size_t>(ti.col_map[k])] = out.x[k];
        exit_code = detail::status_exit(out.status);
      }
      j["rows"] = ti.A.rows();
      j["dropped_rows"] = ti.dropped_rows;
      j["removed_cells"] = ti.removed_cells;
      j["x"] = xg;
      if (exit_code == 0) {
        double lo = kInf, hi = 0.0;
        std::vector<double> xr(static_cast<std::size_t>(ti.A.cols()));
        for (std::size_t k = 0; k < xr.size(); ++k)
          xr[k] = xg[static_cast<std::size_t>(ti.col_map[k])];
        std::vector<double> ax = ti.A.multiply(xr);
        for (double v : ax) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        j["residual_min"] = lo;
        j["residual_max"] = hi;
        if (!pgm_path.empty()) {
          std::ostringstream pgm;
          write_pgm(pgm, xg, ph.side);
          write_file(pgm_path, pgm.str());
        }
      }
      detail::emit(j.dump(2) + "\n", output);
      return exit_code;
    }
    if (*gen_cmd) {
      GeneratedInstance g = generate_random_feasible(gen_vars, gen_prows,
                                                     gen_crows, gen_density, seed);
      json j = json::parse(serialize_instance(g.instance));
      j["seed"] = seed;
      j["x_star"] = g.x_star;
      detail::emit(j.dump(2) + "\n", output);
      return 0;
    }
    if (*check_cmd) {
      MixedInstance inst = parse_instance(read_file(input));
      ParsedSolution sol = parse_solution(read_file(solution_path));
      VerifyReport rep = verify_solution(inst, sol.x, epsilon);
      json j;
      j["ok"] = rep.ok;
      j["message"] = rep.message;
      j["max_packing_ratio"] = rep.ratios.max_packing_ratio;
      j["min_covering_ratio"] = rep.ratios.min_covering_ratio;
      j["packing_slack"] = 1.0 + 4.5 * epsilon - rep.ratios.max_packing_ratio;
      j["covering_slack"] = rep.ratios.min_covering_ratio - 1.0;
      detail::emit(j.dump(2) + "\n", output);
      return rep.ok ? 0 : 2;
    }
    if (*bench_cmd) {
      std::ostringstream csv;
      if (bench_optimizer) {
        csv << "rows,eps,lambda,probes,total_wall,last_wall,last_share\n";
        for (int m : {8, 16, 32}) {
          for (double eps : {0.1, 0.25, 0.5}) {
            GeneratedInstance g = generate_random_feasible(
                m, m / 2, m / 2, 0.5, seed + static_cast<std::uint64_t>(m));
            OptimizeOutcome out = optimize(g.instance, eps);
            double total = 0.0, last = 0.0;
            for (const auto& r : out.subproblem_log) {
              total += r.wall_time;
              last = r.wall_time;
            }
            csv << m << "," << eps << "," << out.lambda << ","
                << out.subproblem_log.size() << "," << total << "," << last
                << "," << (total > 0 ? last / total : 0.0) << "\n";
          }
        }
      } else {
        Algorithm alg = detail::parse_algorithm(algorithm);
        csv << "rows,vars,eps,N,increments,phases,row_updates,wall_time\n";
        for (int m : {10, 20, 40, 80}) {
          for (double eps : {0.05, 0.1, 0.2}) {
            GeneratedInstance g = generate_random_feasible(
                m, m / 2, m / 2, 0.4, seed + static_cast<std::uint64_t>(m));
            SolveConfig cfg;
            cfg.epsilon = eps;
            cfg.algorithm = alg;
            cfg.threads = threads;
            SolveOutcome out = solve(g.instance, cfg);
            csv << m << "," << g.instance.num_vars << "," << eps << ","
                << out.stats.N << "," << out.stats.increments << ","
                << out.stats.phases << "," << out.stats.row_updates << ","
                << out.stats.wall_time << "\n";
          }
        }
      }
      detail::emit(csv.str(), output);
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const TriviallyInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mpc::cli

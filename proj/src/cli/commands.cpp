// Copyright 2026 The jamctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>

#include <CLI11.hpp>

#include "cli/records.hpp"

namespace jamctl::cli {

namespace {

namespace fs = std::filesystem;

Problem load(const CliOptions& options) {
  Problem problem = load_problem_file(options.config);
  if (options.threshold_factor) {
    auto* lq = std::get_if<LqProblem>(&problem);
    if (!lq) throw ValidationError("--threshold-factor applies to LQ problems only");
    if (*options.threshold_factor != 1.0 && *options.threshold_factor != 2.0) {
      throw ValidationError("--threshold-factor must be 1 or 2");
    }
    lq->threshold_factor = *options.threshold_factor;
    lq->validate();
  }
  return problem;
}

ShootingConfig shooting_config(const CliOptions& options) {
  ShootingConfig config;
  config.seed = options.seed;
  config.segments = options.segments;
  config.validate();
  return config;
}

double grid_step(const Problem& problem, const ShootingConfig& config) {
  return std::visit(
      [&](const auto& p) {
        const double span = p.t_end - p.t_start;
        return config.integrator.step > 0 ? config.integrator.step
                                          : span / config.integrator.default_steps;
      },
      problem);
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string());
}

json state_norm_summary(const Extremal& e) {
  double best = std::numeric_limits<double>::infinity();
  double at = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double n = e.z(i).norm();
    if (n < best) {
      best = n;
      at = e.trajectory.times[i];
    }
  }
  return {{"min_state_norm", best}, {"min_state_norm_time", at}};
}

RunRecord make_record(const CliOptions& options, const Problem& problem, ShootingResult result,
                      double wall) {
  RunRecord record;
  record.scenario_name = options.config.stem().string();
  record.problem_hash = problem_hash(problem);
  record.kind = to_string(result.extremal.kind);
  record.cost = evaluate_cost(result.extremal, problem);
  record.certificate = certify(result.extremal, problem);
  record.wall_time = wall;
  record.seed = options.seed;
  record.grid_step = grid_step(problem, shooting_config(options));
  record.result = std::move(result);
  return record;
}

json record_json(const RunRecord& record) {
  json j = to_json(record);
  j.update(state_norm_summary(record.result.extremal));
  return j;
}

// Shared body of cmd_reach and cmd_lq.
template <typename P>
int solve_command(const CliOptions& options, std::ostream& out, std::ostream& err,
                  const char* expected) {
  const Problem problem = load(options);
  if (!std::holds_alternative<P>(problem)) {
    err << "config is not a " << expected << " problem\n";
    return kInputError;
  }
  const ShootingConfig config = shooting_config(options);
  prepare_out_dir(options.out_dir);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  ShootingResult result;
  try {
    result = solve_bvp(std::get<P>(problem), config);
  } catch (const NoConvergenceError& e) {
    json j;
    j["scenario"] = options.config.stem().string();
    j["problem_hash"] = problem_hash(problem);
    j["converged"] = false;
    j["residual"] = e.best().residual_norm;
    j["eta"] = e.best().eta_used;
    j["starts_tried"] = e.best().starts_tried;
    j["wall_time_s"] = elapsed();
    write_json(options.out_dir / "result.json", j);
    err << "no convergence: best residual " << e.best().residual_norm << '\n';
    return kNoConvergence;
  }
  const RunRecord record = make_record(options, problem, std::move(result), elapsed());
  json j = record_json(record);

  if constexpr (std::is_same_v<P, LqProblem>) {
    if (options.baseline) {
      LqProblem classical = std::get<LqProblem>(problem);
      classical.gamma = 0.0;
      const RiccatiSolution lqr = classical_lqr(classical, config.integrator);
      Extremal base = lqr_feedback_rollout(classical, lqr, config.integrator);
      base.cost = evaluate_cost(base, classical);
      write_trajectory_csv(options.out_dir / "baseline_trajectory.csv", base);
      json b = {{"cost", to_json(base.cost)}};
      b.update(state_norm_summary(base));
      j["baseline"] = b;
    }
  }

  write_trajectory_csv(options.out_dir / "trajectory.csv", record.result.extremal);
  write_json(options.out_dir / "result.json", j);
  write_json(options.out_dir / run_record_name(record.problem_hash), j);

  out << std::setprecision(10) << record.scenario_name << ": converged, residual "
      << record.result.residual_norm << ", eta " << record.result.eta_used << ", cost "
      << record.cost.gamma_weighted_total << " (l0 " << record.cost.l0_measure << ")\n";
  return kConverged;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const NoConvergenceError& e) {
    err << "no convergence: best residual " << e.best().residual_norm << '\n';
    return kNoConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (...) {
    err << "error: unknown failure\n";
    return kInputError;
  }
}

}  // namespace

int cmd_reach(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return solve_command<ReachProblem>(options, out, err, "reach"); });
}

int cmd_lq(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return solve_command<LqProblem>(options, out, err, "LQ"); });
}

int cmd_oracle(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Problem problem = load(options);
    const OracleResult oracle =
        std::holds_alternative<LqProblem>(problem)
            ? oracle_lq(std::get<LqProblem>(problem), options.N)
            : oracle_reach(std::get<ReachProblem>(problem), options.N);
    prepare_out_dir(options.out_dir);
    const std::string hash = problem_hash(problem);
    json j = to_json(oracle);
    j["problem_hash"] = hash;
    const fs::path run_path = options.out_dir / run_record_name(hash);
    if (fs::exists(run_path)) {
      const StoredRun run = stored_run_from_json(read_json(run_path));
      const double run_cost = run.cost.gamma_weighted_total;
      j["run_cost"] = run_cost;
      j["gap"] = oracle.best_cost - run_cost;
      j["relative_gap"] = (oracle.best_cost - run_cost) / (1.0 + std::abs(run_cost));
    }
    write_json(options.out_dir / "oracle.json", j);
    out << std::setprecision(10) << "oracle N=" << oracle.discretization_N << ": pattern "
        << oracle.pattern_string() << ", cost " << oracle.best_cost << '\n';
    return static_cast<int>(kConverged);
  });
}

int cmd_riccati(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Problem problem = load(options);
    const auto* lq = std::get_if<LqProblem>(&problem);
    if (!lq) {
      err << "config is not a LQ problem\n";
      return static_cast<int>(kInputError);
    }
    const ShootingConfig config = shooting_config(options);
    const std::string hash = problem_hash(problem);
    json j;
    Extremal extremal;
    if (options.from_run) {
      const fs::path run_path = options.out_dir / run_record_name(hash);
      if (!fs::exists(run_path)) {
        err << "missing run record " << run_path.string() << '\n';
        return static_cast<int>(kInputError);
      }
      const StoredRun run = stored_run_from_json(read_json(run_path));
      if (run.problem_hash != hash) throw ValidationError("run record belongs to another problem");
      extremal = reconstruct_extremal(problem, run.mode, run.segments, run.eta, run.unknowns,
                                      config.integrator);
      const CostBreakdown replayed = evaluate_cost(extremal, problem);
      j["source"] = "run_record";
      j["cost_recorded"] = to_json(run.cost);
      j["cost_replayed"] = to_json(replayed);
    } else {
      extremal = solve_bvp(*lq, config).extremal;
      j["source"] = "fresh_solve";
    }
    const RiccatiSolution sol = hybrid_riccati_from_extremal(extremal, *lq);
    prepare_out_dir(options.out_dir);
    write_riccati_csv(options.out_dir / "riccati.csv", sol);
    j["problem_hash"] = hash;
    j["consistency_max"] = adjoint_consistency(extremal, sol);
    json intervals = json::array();
    for (const Interval& iv : sol.active_set) intervals.push_back({iv.start, iv.end});
    j["active_set"] = intervals;
    j["samples"] = sol.times.size();
    write_json(options.out_dir / "riccati.json", j);
    out << std::setprecision(10) << "riccati: consistency " << j["consistency_max"].get<double>()
        << ", " << sol.active_set.size() << " active interval(s)\n";
    return static_cast<int>(kConverged);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extremals of jammed linear optimal control problems"};
  CliOptions options;
  app.add_option("command", options.command, "reach | lq | oracle | riccati")
      ->required()
      ->check(CLI::IsMember({"reach", "lq", "oracle", "riccati"}));
  app.add_option("config", options.config, "problem JSON")->required();
  app.add_flag("--baseline", options.baseline, "also run the classical LQR (lq)");
  app.add_option("--N", options.N, "oracle intervals (<= 12)");
  app.add_option("--seed", options.seed, "multistart seed");
  app.add_option("--segments", options.segments, "multiple-shooting segments")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", options.out_dir, "output directory");
  app.add_option("--threshold-factor", options.threshold_factor, "1 (default) or 2 (pointwise Hamiltonian rule)");
  app.add_flag("--from-run", options.from_run, "riccati: replay the stored run record");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (options.command == "reach") return cmd_reach(options, out, err);
  if (options.command == "lq") return cmd_lq(options, out, err);
  if (options.command == "oracle") return cmd_oracle(options, out, err);
  return cmd_riccati(options, out, err);
}

}  // namespace jamctl::cli

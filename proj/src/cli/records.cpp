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

#include "cli/records.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace jamctl::cli {

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

const char* mode_name(ShootingMode mode) {
  return mode == ShootingMode::singular ? "singular" : "regular";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

json to_json(const CostBreakdown& cost) {
  return {{"l0", cost.l0_measure},
          {"running", cost.running_quadratic},
          {"terminal", cost.terminal_quadratic},
          {"total", cost.gamma_weighted_total}};
}

json to_json(const CertificateReport& report) {
  return {{"hamiltonian_piecewise_drift", report.hamiltonian_piecewise_drift},
          {"hamiltonian_jumps_at_switches", report.hamiltonian_jumps_at_switches},
          {"hamiltonian_level", report.hamiltonian_level},
          {"boundary_residual", report.boundary_residual},
          {"nontriviality_min", report.nontriviality_min},
          {"conditions_met", report.conditions_met},
          {"locally_optimal", report.locally_optimal}};
}

json to_json(const RunRecord& record) {
  const ShootingResult& r = record.result;
  json j;
  j["scenario"] = record.scenario_name;
  j["problem_hash"] = record.problem_hash;
  j["kind"] = record.kind;
  j["converged"] = r.converged;
  j["residual"] = r.residual_norm;
  j["eta"] = r.eta_used;
  j["iterations"] = r.iterations;
  j["starts_tried"] = r.starts_tried;
  j["mode"] = mode_name(r.mode);
  j["segments"] = r.segments;
  j["seed"] = record.seed;
  j["p0"] = vec_json(r.p0);
  j["unknowns"] = vec_json(r.unknowns);
  j["grid_step"] = record.grid_step;
  j["samples"] = r.extremal.size();
  j["cost"] = to_json(record.cost);
  j["switch_times"] = r.extremal.u2_switch_times();
  j["certificate"] = to_json(record.certificate);
  j["wall_time_s"] = record.wall_time;
  return j;
}

json to_json(const OracleResult& oracle) {
  return {{"best_pattern", oracle.pattern_string()},
          {"best_cost", oracle.best_cost},
          {"pattern_costs_evaluated", oracle.pattern_costs_evaluated},
          {"discretization_N", oracle.discretization_N}};
}

StoredRun stored_run_from_json(const json& j) {
  StoredRun s;
  try {
    s.problem_hash = j.at("problem_hash").get<std::string>();
    s.mode = j.at("mode").get<std::string>() == "singular" ? ShootingMode::singular
                                                           : ShootingMode::regular;
    s.segments = j.at("segments").get<int>();
    s.eta = j.at("eta").get<int>();
    s.converged = j.at("converged").get<bool>();
    const auto values = j.at("unknowns").get<std::vector<double>>();
    s.unknowns = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
    const json& c = j.at("cost");
    s.cost.l0_measure = c.at("l0").get<double>();
    s.cost.running_quadratic = c.at("running").get<double>();
    s.cost.terminal_quadratic = c.at("terminal").get<double>();
    s.cost.gamma_weighted_total = c.at("total").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed run record: ") + e.what());
  }
  return s;
}

std::string run_record_name(const std::string& problem_hash) {
  return "run_" + problem_hash + ".json";
}

void write_trajectory_csv(const std::filesystem::path& path, const Extremal& extremal) {
  std::ofstream out = open_out(path);
  const auto d = extremal.state_dim();
  const auto m = extremal.u1.front().size();
  out << 't';
  for (Eigen::Index i = 1; i <= d; ++i) out << ",z" << i;
  for (Eigen::Index i = 1; i <= d; ++i) out << ",p" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u1_" << i;
  out << ",u2,H\n";
  for (std::size_t k = 0; k < extremal.size(); ++k) {
    out << extremal.trajectory.times[k];
    const Vec& zp = extremal.trajectory.states[k];
    for (Eigen::Index i = 0; i < zp.size(); ++i) out << ',' << zp[i];
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << extremal.u1[k][i];
    out << ',' << extremal.u2[k] << ',' << extremal.hamiltonian[k] << '\n';
  }
}

void write_riccati_csv(const std::filesystem::path& path, const RiccatiSolution& solution) {
  std::ofstream out = open_out(path);
  const auto d = solution.P.front().rows();
  out << 't';
  for (Eigen::Index r = 1; r <= d; ++r) {
    for (Eigen::Index c = 1; c <= d; ++c) out << ",P" << r << c;
  }
  out << '\n';
  for (std::size_t k = 0; k < solution.times.size(); ++k) {
    out << solution.times[k];
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << solution.P[k](r, c);
    }
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON in ") + path.string() + ": " + e.what());
  }
}

}  // namespace jamctl::cli

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

#pragma once

#include <filesystem>
#include <string>

#include "jamctl/analysis.hpp"
#include "jamctl/riccati.hpp"
#include "jamctl/shooting.hpp"
#include <json.hpp>

namespace jamctl::cli {

using json = nlohmann::json;

/// Summary of one solver run, written as result.json and run_<hash>.json.
struct RunRecord {
  std::string scenario_name;
  std::string problem_hash;
  std::string kind;
  ShootingResult result;
  CostBreakdown cost;
  CertificateReport certificate;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  double grid_step = 0.0;
};

json to_json(const CostBreakdown& cost);
json to_json(const CertificateReport& report);
json to_json(const RunRecord& record);
json to_json(const OracleResult& oracle);

/// Parsed back from a RunRecord's JSON: enough to replay the extremal.
struct StoredRun {
  std::string problem_hash;
  ShootingMode mode = ShootingMode::regular;
  int segments = 1;
  int eta = 1;
  Vec unknowns;
  CostBreakdown cost;
  bool converged = false;
};

StoredRun stored_run_from_json(const json& j);

std::string run_record_name(const std::string& problem_hash);

/// `t,z1..zd,p1..pd,u1_1..u1_m,u2,H`, one row per sample, 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const Extremal& extremal);

/// `t,P11,P12,...,Pdd` (row-major), one row per sample.
void write_riccati_csv(const std::filesystem::path& path, const RiccatiSolution& solution);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace jamctl::cli

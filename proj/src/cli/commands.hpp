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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace jamctl::cli {

enum ExitCode : int { kConverged = 0, kInputError = 1, kNoConvergence = 2 };

struct CliOptions {
  std::string command;
  std::filesystem::path config;
  bool baseline = false;
  int N = 8;
  std::uint64_t seed = 0;
  int segments = 1;
  std::filesystem::path out_dir = ".";
  std::optional<double> threshold_factor;
  bool from_run = false;
};

int cmd_reach(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_lq(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_oracle(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_riccati(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Parses `jamctl reach|lq|oracle|riccati <config.json> [flags]` and runs the
/// command. Always returns 0, 1 or 2.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jamctl::cli

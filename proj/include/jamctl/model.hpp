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
#include <string_view>
#include <variant>

#include "jamctl/types.hpp"

namespace jamctl {

/// Plant x' = A x + B u1 u2 with state dimension d and input dimension m.
struct LtiSystem {
  Mat A;
  Mat B;

  LtiSystem() = default;
  /// Throws ValidationError unless A is d x d, B is d x m (d, m >= 1) and all
  /// entries are finite.
  LtiSystem(Mat A_in, Mat B_in);

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
};

/// Axis-aligned admissible set for u1 with lower < 0 < upper componentwise.
struct ControlBox {
  Vec lower;
  Vec upper;

  static ControlBox symmetric(Eigen::Index m, double bound = 1.0) {
    return {Vec::Constant(m, -bound), Vec::Constant(m, bound)};
  }
};

/// Minimum-L0 transfer from z_start at t_start to z_end at t_end.
struct ReachProblem {
  LtiSystem system;
  ControlBox box;
  double t_start = 0.0;
  double t_end = 1.0;
  Vec z_start;
  Vec z_end;

  void validate() const;
};

/// Jammed LQ problem: gamma ||u2||_L0 plus the usual quadratic running and
/// terminal costs. `sparse` selects the single-control L0-regularized
/// regulator, where u = u1 u2 is treated as one signal.
///
/// `threshold_factor` scales gamma in the switching rule q >= factor * gamma:
/// 1 is the default rule, 2 is the rule obtained from jointly maximizing
/// the Hamiltonian over (u1, u2).
struct LqProblem {
  LtiSystem system;
  Mat Q;
  Mat R;
  Mat Qf;
  double gamma = 0.0;
  double t_start = 0.0;
  double t_end = 1.0;
  Vec z_start;
  bool sparse = false;
  double threshold_factor = 1.0;

  void validate() const;
  double switching_threshold() const { return threshold_factor * gamma; }
};

using Problem = std::variant<ReachProblem, LqProblem>;

struct ControllabilityReport {
  int rank = 0;
  bool controllable = false;
};

/// Numerical rank of [B, AB, ..., A^{d-1}B] (singular values above
/// 1e-10 times the largest).
ControllabilityReport controllability_report(const LtiSystem& system);

/// Parses and validates a problem description (see README for the schema).
/// Throws ParseError on malformed text and ValidationError on violated
/// invariants.
Problem load_problem(std::string_view config_text);
Problem load_problem_file(const std::filesystem::path& path);

/// Canonical JSON text of a problem; load_problem(serialize_problem(p))
/// reproduces every field exactly.
std::string serialize_problem(const Problem& problem);

/// Stable 64-bit FNV-1a content hash of the canonical JSON, as 16 hex digits.
std::string problem_hash(const Problem& problem);

/// True if M is symmetric and its smallest eigenvalue is >= -1e-10 ||M||_2.
bool is_symmetric_psd(const Mat& M);
/// True if M is symmetric with strictly positive smallest eigenvalue.
bool is_symmetric_pd(const Mat& M);

}  // namespace jamctl

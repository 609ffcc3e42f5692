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
#include <functional>
#include <vector>

#include "jamctl/analysis.hpp"
#include "jamctl/extremal.hpp"
#include "jamctl/model.hpp"

namespace jamctl {

struct ShootingConfig {
  int segments = 1;
  int max_iterations = 200;
  double residual_tolerance = 1e-8;
  double fd_step = 1e-6;
  std::vector<double> multistart_magnitudes{0.1, 1.0, 10.0, 100.0};
  int multistart_samples_per_magnitude = 4;
  std::uint64_t seed = 0;
  IntegratorOptions integrator;

  void validate() const;
};

/// How the unknown vector of a shooting run is laid out.
///   regular:  p0, then (segments - 1) interior nodes (z_k, p_k)
///   singular: p0, then the on-interval [a, b] of u2 (reach problems only)
enum class ShootingMode { regular, singular };

struct ShootingResult {
  Extremal extremal;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int eta_used = 1;
  int starts_tried = 0;
  ShootingMode mode = ShootingMode::regular;
  int segments = 1;
  Vec unknowns;
  Vec p0;
};

class NoConvergenceError : public Error {
 public:
  explicit NoConvergenceError(ShootingResult best)
      : Error("no convergence"), best_(std::move(best)) {}
  const ShootingResult& best() const { return best_; }

 private:
  ShootingResult best_;
};

/// z(t_end) - z_end of the extremal field started at (z_start, p0).
Vec reach_residual(const Vec& p0, const ReachProblem& problem, int eta,
                   const IntegratorOptions& options = {});

/// p(t_end) + Qf z(t_end) of the extremal field started at (z_start, p0).
Vec lq_residual(const Vec& p0, const LqProblem& problem, const IntegratorOptions& options = {});

/// Residual of a full unknown vector (continuity defects first, then the
/// boundary residual).
Vec shooting_residual(const Problem& problem, ShootingMode mode, int segments, int eta,
                      const Vec& unknowns, const IntegratorOptions& options = {});

using ResidualFunction = std::function<Vec(const Vec&)>;

/// Central differences with step fd_step * max(1, |x_i|).
Mat central_jacobian(const ResidualFunction& f, const Vec& x, double fd_step);
/// Forward differences with the same step rule.
Mat forward_jacobian(const ResidualFunction& f, const Vec& x, double fd_step);

struct LmOutcome {
  Vec x;
  Vec residual;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt on 0.5 ||f(x)||^2 with Marquardt scaling. `project`
/// maps trial points back onto the feasible set (identity if empty).
LmOutcome levenberg_marquardt(const ResidualFunction& f, const Vec& x0, const ShootingConfig& config,
                              const std::function<Vec(const Vec&)>& project = {});

/// Integrates the extremal described by an unknown vector.
Extremal reconstruct_extremal(const Problem& problem, ShootingMode mode, int segments, int eta,
                              const Vec& unknowns, const IntegratorOptions& options = {});

/// Multistart indirect shooting. LQ problems are always normal. Reach problems
/// try eta = 1, then a singular-arc solve (on-interval [a, b] with sigma(p0) =
/// 1), then eta = 0. Among converged starts the lowest cost wins (first on
/// ties). Throws NoConvergenceError carrying the smallest residual.
ShootingResult solve_bvp(const ReachProblem& problem, const ShootingConfig& config = {});
ShootingResult solve_bvp(const LqProblem& problem, const ShootingConfig& config = {});
ShootingResult solve_bvp(const Problem& problem, const ShootingConfig& config = {});

}  // namespace jamctl

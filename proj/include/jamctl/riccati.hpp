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

#include <vector>

#include "jamctl/extremal.hpp"
#include "jamctl/model.hpp"
#include "jamctl/numkernel.hpp"

namespace jamctl {

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

/// Time samples of P(t) for the gated Riccati equation
///   -P' = A'P + PA + Q - 1_S(t) P B R^{-1} B' P,   P(t_end) = Qf,
/// with S = active_set. Outside S the equation is a Lyapunov equation.
struct RiccatiSolution {
  std::vector<double> times;
  std::vector<Mat> P;
  std::vector<Mat> P_dot;
  std::vector<Interval> active_set;

  /// Cubic Hermite interpolation of P between samples.
  Mat at(double t) const;
};

/// Backward RK4 on `grid` (increasing, first = t_start, last = t_end) with the
/// quadratic term active on [grid[i], grid[i+1]) iff active[i] != 0. Each grid
/// interval is split so no RK4 step exceeds `max_step` (0 = no splitting).
/// Throws NumericalError("Riccati blowup") if P escapes to infinity.
RiccatiSolution gated_riccati(const LqProblem& problem, const std::vector<double>& grid,
                              const std::vector<int>& active, double max_step = 0.0);

/// Classical finite-horizon LQR (gamma ignored), S = whole horizon.
RiccatiSolution classical_lqr(const LqProblem& problem, const IntegratorOptions& options = {});

/// Maximal intervals on which the extremal's u2 equals 1.
std::vector<Interval> active_intervals(const Extremal& extremal);

/// Gated Riccati equation with 1_S frozen to the extremal's activation set,
/// integrated on the extremal's own sample grid.
RiccatiSolution hybrid_riccati_from_extremal(const Extremal& extremal, const LqProblem& problem);

/// Closed-loop rollout z' = (A - B R^{-1} B' P(t)) z from z_start, reported as
/// an LQ extremal with p = -P z and u2 = 1.
Extremal lqr_feedback_rollout(const LqProblem& problem, const RiccatiSolution& riccati,
                              const IntegratorOptions& options = {});

/// max_i ||p(t_i) + P(t_i) z(t_i)|| / (1 + ||p(t_i)||) over the extremal's samples.
double adjoint_consistency(const Extremal& extremal, const RiccatiSolution& riccati);

}  // namespace jamctl

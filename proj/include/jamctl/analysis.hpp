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

#include <string>
#include <vector>

#include "jamctl/extremal.hpp"
#include "jamctl/model.hpp"

namespace jamctl {

/// Necessary-condition diagnostics for an extremal.
struct CertificateReport {
  // max over inter-switch intervals of (max H - min H)
  double hamiltonian_piecewise_drift = 0.0;
  // H(t+) - H(t-) at every switching sample
  std::vector<double> hamiltonian_jumps_at_switches;
  double boundary_residual = 0.0;
  // min over samples of ||(eta, p(t))||
  double nontriviality_min = 0.0;
  // mean H over the first inter-switch interval
  double hamiltonian_level = 0.0;
  bool conditions_met = false;
  // conditions_met for a normal (eta = 1) extremal: local optimality holds.
  bool locally_optimal = false;
};

struct OracleResult {
  std::vector<int> best_pattern;
  double best_cost = 0.0;
  long pattern_costs_evaluated = 0;
  int discretization_N = 0;

  std::string pattern_string() const;
};

constexpr int kMaxOracleIntervals = 12;

/// Lebesgue measure of {t : u2(t) = 1}, summed over maximal on-intervals
/// bounded by localized switch times.
double l0_seminorm(const Extremal& extremal);

/// Reach: total = L0 measure. LQ: running cost by the trapezoid rule on the
/// sample grid (left and right limits of u1 at each interval), terminal cost
/// z'Qf z / 2 and total gamma * l0 + running + terminal.
CostBreakdown evaluate_cost(const Extremal& extremal, const ReachProblem& problem);
CostBreakdown evaluate_cost(const Extremal& extremal, const LqProblem& problem);
CostBreakdown evaluate_cost(const Extremal& extremal, const Problem& problem);

/// Largest step of the extremal's sample grid (bounds the quadrature error).
double max_grid_step(const Extremal& extremal);

CertificateReport certify(const Extremal& extremal, const ReachProblem& problem,
                          double tolerance = 1e-6);
CertificateReport certify(const Extremal& extremal, const LqProblem& problem,
                          double tolerance = 1e-6);
CertificateReport certify(const Extremal& extremal, const Problem& problem,
                          double tolerance = 1e-6);

/// Exhaustive search over the 2^N on/off patterns of u2 that are constant on
/// N equal intervals. Each pattern's inner LQ problem is solved exactly by the
/// gated Riccati equation; its cost is z0'P(t0)z0/2 + gamma * on-measure.
/// Ties resolve to the lexicographically smallest pattern.
OracleResult oracle_lq(const LqProblem& problem, int N);

/// Patterns in increasing on-measure; a pattern is feasible if projected
/// gradient on the box-constrained endpoint least-squares problem (u1
/// piecewise constant on `grid` sub-steps per on-interval, 500 iterations,
/// step 1/L) reaches the target within 1e-4 (1 + ||zf||). Returns the first
/// feasible pattern. Throws Error("oracle infeasible at this N") if none is.
OracleResult oracle_reach(const ReachProblem& problem, int N, int grid = 16);

}  // namespace jamctl

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

#include <functional>
#include <utility>
#include <vector>

#include "jamctl/model.hpp"
#include "jamctl/numkernel.hpp"
#include "jamctl/types.hpp"

namespace jamctl {

enum class ProblemKind { reach, lq, sparse_lq };

const char* to_string(ProblemKind kind);

/// Cost of an extremal. For reach problems the total is the L0 measure; for
/// LQ problems it is gamma * l0 + running + terminal.
struct CostBreakdown {
  double l0_measure = 0.0;
  double running_quadratic = 0.0;
  double terminal_quadratic = 0.0;
  double gamma_weighted_total = 0.0;
};

/// Initial adjoint and abnormal multiplier; (eta, p0) must not vanish.
struct AdjointInit {
  Vec p0;
  int eta = 1;

  void validate() const;
};

/// A state-adjoint-control trajectory. Samples carry the stacked (z, p) and
/// the right-continuous controls in force from that sample onwards.
struct Extremal {
  Trajectory<double> trajectory;
  std::vector<Vec> u1;
  std::vector<int> u2;
  std::vector<double> hamiltonian;
  int eta = 1;
  ProblemKind kind = ProblemKind::lq;
  CostBreakdown cost;
  // u2 on a singular arc was placed by the solver rather than by the
  // switching law (the adjoint sits on the switching surface).
  bool singular = false;

  std::size_t size() const { return trajectory.size(); }
  Eigen::Index state_dim() const { return trajectory.states.front().size() / 2; }
  Vec z(std::size_t i) const { return trajectory.states[i].head(state_dim()); }
  Vec p(std::size_t i) const { return trajectory.states[i].tail(state_dim()); }
  /// Times at which u2 changes value, in order.
  std::vector<double> u2_switch_times() const;
};

// --- Reachability law ------------------------------------------------------

/// Componentwise maximizer of <B^T p, v> over the box; components with
/// (B^T p)_i == 0 return 0.
Vec reach_u1(const Vec& p, const LtiSystem& system, const ControlBox& box);

/// Support function of the box at B^T p.
double reach_sigma(const Vec& p, const LtiSystem& system, const ControlBox& box);

/// eta = 0: always 1. eta = 1: 1 iff sigma >= 1.
int reach_u2(double sigma, int eta);

/// (A z + B u1 u2, -A^T p) for stacked zp = (z, p).
Vec reach_field(double t, const Vec& zp, const LtiSystem& system, const ControlBox& box, int eta);

/// exp(-(t - t_start) A^T) p0.
Vec adjoint_closed_form(const Vec& p0, const LtiSystem& system, double t, double t_start);

// --- LQ law ------------------------------------------------------------------

/// q = (B^T p)^T R^{-1} (B^T p).
double lq_q(const Vec& p, const LtiSystem& system, const Mat& R);

struct LqControls {
  Vec u1;
  int u2 = 0;
};

/// u2 = 1 iff lq_q(p) >= threshold_factor * gamma; u1 = R^{-1} B^T p when u2 = 1,
/// else 0.
LqControls lq_controls(const Vec& p, const LtiSystem& system, const Mat& R, double gamma,
                       double threshold_factor = 1.0);

/// (A z + B R^{-1} B^T p u2, Q z - A^T p).
Vec lq_field(double t, const Vec& zp, const LtiSystem& system, const Mat& Q, const Mat& R,
             double gamma, double threshold_factor = 1.0);

/// Single-signal L0-regularized regulator law: R^{-1} B^T p if q >= gamma, else 0.
Vec sparse_lq_control(const Vec& p, const LtiSystem& system, const Mat& R, double gamma,
                      double threshold_factor = 1.0);

/// The constant block matrix [[A, B R^{-1} B^T u2], [Q, -A^T]].
Mat hamiltonian_matrix(const LtiSystem& system, const Mat& Q, const Mat& R, int u2);

/// Pontryagin Hamiltonian. reach: <p, Az + B u1 u2> + eta 1{u2 = 0}.
/// lq / sparse_lq: <p, Az + B u1 u2> + gamma 1{u2 = 0} - z'Qz/2 - u1'Ru1/2.
/// `problem` must match `kind`.
double hamiltonian(ProblemKind kind, const Vec& z, const Vec& p, const Vec& u1, int u2,
                   const Problem& problem, int eta);

// --- Regime-aware flows ------------------------------------------------------

/// The extremal vector field of one problem together with its switching
/// surfaces, evaluated with the regime frozen by the integrator.
struct ExtremalFlow {
  ProblemKind kind = ProblemKind::lq;
  int eta = 1;
  bool singular = false;
  std::vector<EventSpec<double>> events;
  RegimeField<double> field;
  std::function<std::pair<Vec, int>(double, const Vec&, const Regime&)> controls;
  std::function<double(const Vec&, const Vec&, const Vec&, int)> hamiltonian;
};

/// Flow of the reachability extremal system. Surfaces: sigma(p) - 1 (eta = 1
/// only) and (B^T p)_i for bang-bang switching of u1.
ExtremalFlow reach_flow(const ReachProblem& problem, int eta);

/// Reachability flow on a singular arc: u1 follows the argmax law while u2 is
/// switched on exactly over [on_start, on_end).
ExtremalFlow singular_reach_flow(const ReachProblem& problem, double on_start, double on_end);

/// Flow of the LQ extremal system with surface q(p) - threshold_factor * gamma.
ExtremalFlow lq_flow(const LqProblem& problem);

/// Integrates a flow from zp0 over [t0, t1] and fills controls and H samples.
Extremal integrate_extremal(const ExtremalFlow& flow, double t0, double t1, const Vec& zp0,
                            const IntegratorOptions& options = {});

/// Integrates each segment [times[k], times[k+1]] from nodes[k] and joins the
/// pieces. A regime change across a node is recorded as a switch at the node.
Extremal integrate_extremal_segments(const ExtremalFlow& flow, const std::vector<double>& times,
                                     const std::vector<Vec>& nodes,
                                     const IntegratorOptions& options = {});

/// Joins two extremals with a.t_end() == b.t_start(); the first sample of b
/// replaces the last sample of a.
Extremal concatenate_in_time(const Extremal& a, const Extremal& b);

}  // namespace jamctl

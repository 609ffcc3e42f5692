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

#include "jamctl/extremal.hpp"

#include <algorithm>
#include <cmath>

namespace jamctl {

namespace {

Mat rinv_bt(const LtiSystem& system, const Mat& R) {
  return R.llt().solve(system.B.transpose());
}

double support(const Vec& bp, const ControlBox& box) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < bp.size(); ++i) {
    s += std::max(box.upper[i] * bp[i], box.lower[i] * bp[i]);
  }
  return s;
}

// u1 under a frozen regime: the sign surfaces (B^T p)_i start at `offset`.
Vec box_control(const Vec& bp, const ControlBox& box, const Regime& regime, std::size_t offset) {
  Vec u(bp.size());
  for (Eigen::Index i = 0; i < bp.size(); ++i) {
    if (bp[i] == 0.0) {
      u[i] = 0.0;
    } else {
      u[i] = regime[offset + static_cast<std::size_t>(i)] > 0 ? box.upper[i] : box.lower[i];
    }
  }
  return u;
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::reach: return "reach";
    case ProblemKind::lq: return "lq";
    case ProblemKind::sparse_lq: return "sparse_lq";
  }
  return "unknown";
}

void AdjointInit::validate() const {
  if (eta != 0 && eta != 1) throw ValidationError("eta must be 0 or 1");
  if (eta == 0 && (p0.size() == 0 || p0.isZero(0.0))) {
    throw ValidationError("nontriviality violated: eta = 0 and p0 = 0");
  }
}

std::vector<double> Extremal::u2_switch_times() const {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < u2.size(); ++i) {
    if (u2[i] != u2[i - 1]) out.push_back(trajectory.times[i]);
  }
  return out;
}

Vec reach_u1(const Vec& p, const LtiSystem& system, const ControlBox& box) {
  const Vec bp = system.B.transpose() * p;
  Vec u(bp.size());
  for (Eigen::Index i = 0; i < bp.size(); ++i) {
    u[i] = bp[i] > 0.0 ? box.upper[i] : (bp[i] < 0.0 ? box.lower[i] : 0.0);
  }
  return u;
}

double reach_sigma(const Vec& p, const LtiSystem& system, const ControlBox& box) {
  return support(system.B.transpose() * p, box);
}

int reach_u2(double sigma, int eta) {
  if (eta == 0) return 1;
  return sigma >= 1.0 ? 1 : 0;
}

Vec reach_field(double, const Vec& zp, const LtiSystem& system, const ControlBox& box, int eta) {
  const auto d = system.state_dim();
  const Vec z = zp.head(d);
  const Vec p = zp.tail(d);
  const int u2 = reach_u2(reach_sigma(p, system, box), eta);
  Vec out(2 * d);
  out.head(d) = system.A * z + system.B * reach_u1(p, system, box) * static_cast<double>(u2);
  out.tail(d) = -system.A.transpose() * p;
  return out;
}

Vec adjoint_closed_form(const Vec& p0, const LtiSystem& system, double t, double t_start) {
  return mat_exp(Mat(-(t - t_start) * system.A.transpose())) * p0;
}

double lq_q(const Vec& p, const LtiSystem& system, const Mat& R) {
  const Vec bp = system.B.transpose() * p;
  return bp.dot(R.llt().solve(bp));
}

LqControls lq_controls(const Vec& p, const LtiSystem& system, const Mat& R, double gamma,
                       double threshold_factor) {
  LqControls c;
  c.u2 = lq_q(p, system, R) >= threshold_factor * gamma ? 1 : 0;
  c.u1 = c.u2 == 1 ? Vec(rinv_bt(system, R) * p) : Vec::Zero(system.input_dim());
  return c;
}

Vec lq_field(double, const Vec& zp, const LtiSystem& system, const Mat& Q, const Mat& R,
             double gamma, double threshold_factor) {
  const auto d = system.state_dim();
  const Vec z = zp.head(d);
  const Vec p = zp.tail(d);
  const LqControls c = lq_controls(p, system, R, gamma, threshold_factor);
  Vec out(2 * d);
  out.head(d) = system.A * z + system.B * c.u1;
  out.tail(d) = Q * z - system.A.transpose() * p;
  return out;
}

Vec sparse_lq_control(const Vec& p, const LtiSystem& system, const Mat& R, double gamma,
                      double threshold_factor) {
  return lq_controls(p, system, R, gamma, threshold_factor).u1;
}

Mat hamiltonian_matrix(const LtiSystem& system, const Mat& Q, const Mat& R, int u2) {
  const auto d = system.state_dim();
  Mat H(2 * d, 2 * d);
  H.topLeftCorner(d, d) = system.A;
  H.topRightCorner(d, d) = static_cast<double>(u2) * (system.B * rinv_bt(system, R));
  H.bottomLeftCorner(d, d) = Q;
  H.bottomRightCorner(d, d) = -system.A.transpose();
  return H;
}

double hamiltonian(ProblemKind kind, const Vec& z, const Vec& p, const Vec& u1, int u2,
                   const Problem& problem, int eta) {
  if (kind == ProblemKind::reach) {
    const auto& rp = std::get<ReachProblem>(problem);
    const Vec drift = rp.system.A * z + rp.system.B * u1 * static_cast<double>(u2);
    return p.dot(drift) + (u2 == 0 ? static_cast<double>(eta) : 0.0);
  }
  const auto& lq = std::get<LqProblem>(problem);
  const Vec u = u1 * static_cast<double>(u2);
  const Vec drift = lq.system.A * z + lq.system.B * u;
  // The single-signal regulator charges R on the merged input u = u1 u2.
  const Vec& charged = kind == ProblemKind::sparse_lq ? u : u1;
  const bool off = kind == ProblemKind::sparse_lq ? u.isZero(0.0) : u2 == 0;
  return p.dot(drift) + (off ? lq.gamma : 0.0) - 0.5 * z.dot(lq.Q * z) -
         0.5 * charged.dot(lq.R * charged);
}

ExtremalFlow reach_flow(const ReachProblem& problem, int eta) {
  const LtiSystem system = problem.system;
  const ControlBox box = problem.box;
  const auto d = system.state_dim();
  const auto m = system.input_dim();
  const std::size_t offset = eta == 1 ? 1 : 0;

  ExtremalFlow flow;
  flow.kind = ProblemKind::reach;
  flow.eta = eta;
  if (eta == 1) {
    flow.events.push_back({[system, box, d](double, const Vec& zp) {
                             return reach_sigma(zp.tail(d), system, box) - 1.0;
                           },
                           Crossing::any, 0.0});
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    flow.events.push_back({[system, d, i](double, const Vec& zp) {
                             return system.B.col(i).dot(zp.tail(d));
                           },
                           Crossing::any, 0.0});
  }
  flow.controls = [system, box, d, eta, offset](double, const Vec& zp, const Regime& regime) {
    const Vec bp = system.B.transpose() * zp.tail(d);
    const int u2 = eta == 1 ? (regime[0] > 0 ? 1 : 0) : 1;
    return std::pair<Vec, int>(box_control(bp, box, regime, offset), u2);
  };
  flow.field = [system, d, controls = flow.controls](double t, const Vec& zp,
                                                     const Regime& regime) {
    const auto [u1, u2] = controls(t, zp, regime);
    Vec out(2 * d);
    out.head(d) = system.A * zp.head(d) + system.B * u1 * static_cast<double>(u2);
    out.tail(d) = -system.A.transpose() * zp.tail(d);
    return out;
  };
  flow.hamiltonian = [system, eta](const Vec& z, const Vec& p, const Vec& u1, int u2) {
    return p.dot(system.A * z + system.B * u1 * static_cast<double>(u2)) +
           (u2 == 0 ? static_cast<double>(eta) : 0.0);
  };
  return flow;
}

ExtremalFlow singular_reach_flow(const ReachProblem& problem, double on_start, double on_end) {
  const LtiSystem system = problem.system;
  const ControlBox box = problem.box;
  const auto d = system.state_dim();
  const auto m = system.input_dim();

  ExtremalFlow flow;
  flow.kind = ProblemKind::reach;
  flow.eta = 1;
  flow.singular = true;
  flow.events.push_back({[on_start](double t, const Vec&) { return t - on_start; },
                         Crossing::any, 0.0});
  flow.events.push_back({[on_end](double t, const Vec&) { return t - on_end; },
                         Crossing::any, 0.0});
  for (Eigen::Index i = 0; i < m; ++i) {
    flow.events.push_back({[system, d, i](double, const Vec& zp) {
                             return system.B.col(i).dot(zp.tail(d));
                           },
                           Crossing::any, 0.0});
  }
  flow.controls = [system, box, d](double, const Vec& zp, const Regime& regime) {
    const Vec bp = system.B.transpose() * zp.tail(d);
    const int u2 = (regime[0] > 0 && regime[1] < 0) ? 1 : 0;
    return std::pair<Vec, int>(box_control(bp, box, regime, 2), u2);
  };
  flow.field = [system, d, controls = flow.controls](double t, const Vec& zp,
                                                     const Regime& regime) {
    const auto [u1, u2] = controls(t, zp, regime);
    Vec out(2 * d);
    out.head(d) = system.A * zp.head(d) + system.B * u1 * static_cast<double>(u2);
    out.tail(d) = -system.A.transpose() * zp.tail(d);
    return out;
  };
  flow.hamiltonian = [system](const Vec& z, const Vec& p, const Vec& u1, int u2) {
    return p.dot(system.A * z + system.B * u1 * static_cast<double>(u2)) + (u2 == 0 ? 1.0 : 0.0);
  };
  return flow;
}

ExtremalFlow lq_flow(const LqProblem& problem) {
  const LtiSystem system = problem.system;
  const auto d = system.state_dim();
  const auto m = system.input_dim();
  const Mat gain = rinv_bt(system, problem.R);  // R^{-1} B^T
  const Mat coupling = system.B * gain;          // B R^{-1} B^T
  const Mat Q = problem.Q;
  const Mat R = problem.R;
  const double threshold = problem.switching_threshold();
  const double gamma = problem.gamma;

  ExtremalFlow flow;
  flow.kind = problem.sparse ? ProblemKind::sparse_lq : ProblemKind::lq;
  flow.eta = 1;
  flow.events.push_back({[coupling, d, threshold](double, const Vec& zp) {
                           const Vec p = zp.tail(d);
                           return p.dot(coupling * p) - threshold;
                         },
                         Crossing::any, 0.0});
  flow.controls = [gain, d, m](double, const Vec& zp, const Regime& regime) {
    const int u2 = regime[0] > 0 ? 1 : 0;
    Vec u1 = u2 == 1 ? Vec(gain * zp.tail(d)) : Vec::Zero(m);
    return std::pair<Vec, int>(std::move(u1), u2);
  };
  flow.field = [system, coupling, Q, d](double, const Vec& zp, const Regime& regime) {
    const Vec z = zp.head(d);
    const Vec p = zp.tail(d);
    Vec out(2 * d);
    out.head(d) = system.A * z;
    if (regime[0] > 0) out.head(d) += coupling * p;
    out.tail(d) = Q * z - system.A.transpose() * p;
    return out;
  };
  flow.hamiltonian = [system, Q, R, gamma](const Vec& z, const Vec& p, const Vec& u1, int u2) {
    return p.dot(system.A * z + system.B * u1 * static_cast<double>(u2)) +
           (u2 == 0 ? gamma : 0.0) - 0.5 * z.dot(Q * z) - 0.5 * u1.dot(R * u1);
  };
  return flow;
}

namespace {

Extremal fill_extremal(const ExtremalFlow& flow, Trajectory<double> trajectory) {
  Extremal e;
  e.kind = flow.kind;
  e.eta = flow.eta;
  e.singular = flow.singular;
  const std::size_t n = trajectory.size();
  const auto d = trajectory.states.front().size() / 2;
  e.u1.reserve(n);
  e.u2.reserve(n);
  e.hamiltonian.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& zp = trajectory.states[i];
    auto [u1, u2] = flow.controls(trajectory.times[i], zp, trajectory.regimes[i]);
    e.hamiltonian.push_back(flow.hamiltonian(zp.head(d), zp.tail(d), u1, u2));
    e.u1.push_back(std::move(u1));
    e.u2.push_back(u2);
  }
  e.trajectory = std::move(trajectory);
  return e;
}

}  // namespace

Extremal integrate_extremal(const ExtremalFlow& flow, double t0, double t1, const Vec& zp0,
                            const IntegratorOptions& options) {
  return fill_extremal(flow, integrate_with_events<double>(flow.field, t0, t1, zp0, flow.events,
                                                           options));
}

Extremal integrate_extremal_segments(const ExtremalFlow& flow, const std::vector<double>& times,
                                     const std::vector<Vec>& nodes,
                                     const IntegratorOptions& options) {
  if (times.size() < 2 || nodes.size() + 1 != times.size()) {
    throw ValidationError("integrate_extremal_segments: need one node per segment");
  }
  Extremal out = integrate_extremal(flow, times[0], times[1], nodes[0], options);
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    out = concatenate_in_time(out, integrate_extremal(flow, times[k], times[k + 1], nodes[k],
                                                      options));
  }
  return out;
}

Extremal concatenate_in_time(const Extremal& a, const Extremal& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  const double join = b.trajectory.t_start();
  if (std::abs(a.trajectory.t_end() - join) > 1e-12 * (1.0 + std::abs(join))) {
    throw ValidationError("concatenate_in_time: extremals do not meet");
  }
  Extremal out = a;
  auto& tr = out.trajectory;
  // Regime in force just before the join.
  const Regime before = tr.regimes.size() >= 2 ? tr.regimes[tr.size() - 2] : tr.regimes.back();
  const int u2_before = out.u2.size() >= 2 ? out.u2[out.size() - 2] : out.u2.back();
  tr.times.pop_back();
  tr.states.pop_back();
  tr.regimes.pop_back();
  out.u1.pop_back();
  out.u2.pop_back();
  out.hamiltonian.pop_back();
  const std::size_t offset = tr.size();

  const Regime& after = b.trajectory.regimes.front();
  if (before.size() == after.size()) {
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] != after[i]) {
        tr.switch_times.push_back(join);
        tr.switch_surfaces.push_back(static_cast<int>(i));
        tr.switch_samples.push_back(offset);
      }
    }
  } else if (u2_before != b.u2.front()) {
    tr.switch_times.push_back(join);
    tr.switch_surfaces.push_back(0);
    tr.switch_samples.push_back(offset);
  }

  const auto& bt = b.trajectory;
  tr.times.insert(tr.times.end(), bt.times.begin(), bt.times.end());
  tr.states.insert(tr.states.end(), bt.states.begin(), bt.states.end());
  tr.regimes.insert(tr.regimes.end(), bt.regimes.begin(), bt.regimes.end());
  for (std::size_t k = 0; k < bt.switch_times.size(); ++k) {
    tr.switch_times.push_back(bt.switch_times[k]);
    tr.switch_surfaces.push_back(bt.switch_surfaces[k]);
    tr.switch_samples.push_back(bt.switch_samples[k] + offset);
  }
  out.u1.insert(out.u1.end(), b.u1.begin(), b.u1.end());
  out.u2.insert(out.u2.end(), b.u2.begin(), b.u2.end());
  out.hamiltonian.insert(out.hamiltonian.end(), b.hamiltonian.begin(), b.hamiltonian.end());
  out.singular = a.singular || b.singular;
  return out;
}

}  // namespace jamctl

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

#include "jamctl/riccati.hpp"

#include <algorithm>
#include <cmath>

namespace jamctl {

namespace {

constexpr double kBlowup = 1e150;

struct RiccatiRhs {
  Mat A;
  Mat Q;
  Mat coupling;  // B R^{-1} B^T

  // dP/dt
  Mat operator()(const Mat& P, bool active) const {
    Mat rhs = A.transpose() * P + P * A + Q;
    if (active) rhs.noalias() -= P * coupling * P;
    return -rhs;
  }
};

Mat symmetrize(const Mat& P) { return 0.5 * (P + P.transpose()); }

}  // namespace

Mat RiccatiSolution::at(double t) const {
  if (times.empty()) throw ValidationError("RiccatiSolution::at: empty solution");
  if (t <= times.front()) return P.front();
  if (t >= times.back()) return P.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double h = times[i + 1] - times[i];
  const double s = (t - times[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * P[i] + h10 * h * P_dot[i] + h01 * P[i + 1] + h11 * h * P_dot[i + 1];
}

RiccatiSolution gated_riccati(const LqProblem& problem, const std::vector<double>& grid,
                              const std::vector<int>& active, double max_step) {
  if (grid.size() < 2 || active.size() + 1 < grid.size()) {
    throw ValidationError("gated_riccati: grid and activation pattern disagree");
  }
  const RiccatiRhs rhs{problem.system.A, problem.Q,
                       problem.system.B * problem.R.llt().solve(problem.system.B.transpose())};

  const std::size_t n = grid.size();
  RiccatiSolution sol;
  sol.times = grid;
  sol.P.assign(n, Mat());
  sol.P_dot.assign(n, Mat());

  Mat P = symmetrize(problem.Qf);
  sol.P[n - 1] = P;
  sol.P_dot[n - 1] = rhs(P, active[n - 2] != 0);
  for (std::size_t i = n - 1; i-- > 0;) {
    const bool on = active[i] != 0;
    const double span = grid[i + 1] - grid[i];
    const double base = max_step > 0 ? std::min(span, max_step) : span;
    // The quadratic term linearizes to a rate of about 2 ||B R^-1 B' P||;
    // substeps keep RK4 well inside its stability region when P is large.
    double remaining = span;
    while (remaining > 0) {
      const double rate = 2.0 * rhs.A.lpNorm<1>() +
                          (on ? 2.0 * rhs.coupling.lpNorm<1>() * P.lpNorm<1>() : 0.0);
      double step = std::min(base, rate > 0 ? 0.5 / rate : base);
      if (step >= remaining * (1.0 - 1e-12)) step = remaining;
      // Spread the remainder evenly so no sliver step is left at the end.
      else step = remaining / std::ceil(remaining / step);
      const double h = -step;
      const Mat k1 = rhs(P, on);
      const Mat k2 = rhs(P + (h / 2) * k1, on);
      const Mat k3 = rhs(P + (h / 2) * k2, on);
      const Mat k4 = rhs(P + h * k3, on);
      P = symmetrize(P + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
      if (!P.allFinite() || P.cwiseAbs().maxCoeff() > kBlowup) {
        throw NumericalError("Riccati blowup");
      }
      remaining -= step;
      if (remaining <= 1e-15 * span) break;
    }
    sol.P[i] = P;
    // Right-continuous derivative: the regime in force on [grid[i], grid[i+1]).
    sol.P_dot[i] = rhs(P, on);
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (active[i] == 0) continue;
    if (!sol.active_set.empty() && sol.active_set.back().end == grid[i]) {
      sol.active_set.back().end = grid[i + 1];
    } else {
      sol.active_set.push_back({grid[i], grid[i + 1]});
    }
  }
  return sol;
}

RiccatiSolution classical_lqr(const LqProblem& problem, const IntegratorOptions& options) {
  const double span = problem.t_end - problem.t_start;
  const double nominal = options.step > 0 ? options.step : span / std::max(1, options.default_steps);
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / nominal - 1e-9)));
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k <= steps; ++k) {
    grid[static_cast<std::size_t>(k)] =
        k == steps ? problem.t_end : problem.t_start + span * static_cast<double>(k) / steps;
  }
  return gated_riccati(problem, grid, std::vector<int>(grid.size() - 1, 1));
}

std::vector<Interval> active_intervals(const Extremal& extremal) {
  std::vector<Interval> out;
  const auto& times = extremal.trajectory.times;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (extremal.u2[i] == 0) continue;
    if (!out.empty() && out.back().end == times[i]) {
      out.back().end = times[i + 1];
    } else {
      out.push_back({times[i], times[i + 1]});
    }
  }
  return out;
}

RiccatiSolution hybrid_riccati_from_extremal(const Extremal& extremal, const LqProblem& problem) {
  if (extremal.size() < 2) throw ValidationError("hybrid_riccati_from_extremal: empty extremal");
  const double scale = 1.0 + std::abs(problem.t_end) + std::abs(problem.t_start);
  if (std::abs(extremal.trajectory.t_start() - problem.t_start) > 1e-12 * scale ||
      std::abs(extremal.trajectory.t_end() - problem.t_end) > 1e-12 * scale ||
      extremal.state_dim() != problem.system.state_dim()) {
    throw ValidationError("mismatched horizon");
  }
  std::vector<int> active(extremal.u2.begin(), extremal.u2.end() - 1);
  return gated_riccati(problem, extremal.trajectory.times, active);
}

Extremal lqr_feedback_rollout(const LqProblem& problem, const RiccatiSolution& riccati,
                              const IntegratorOptions& options) {
  const LtiSystem& sys = problem.system;
  const auto d = sys.state_dim();
  const Mat gain = problem.R.llt().solve(sys.B.transpose());  // R^{-1} B^T
  const PlainField<double> closed_loop = [&](double t, const Vec& z) {
    return Vec(sys.A * z - sys.B * (gain * (riccati.at(t) * z)));
  };
  Trajectory<double> states = integrate_with_events<double>(closed_loop, problem.t_start,
                                                            problem.t_end, problem.z_start, {},
                                                            options);
  Extremal e;
  e.kind = problem.sparse ? ProblemKind::sparse_lq : ProblemKind::lq;
  e.eta = 1;
  e.trajectory.times = states.times;
  e.trajectory.regimes = states.regimes;
  const Problem wrapped = problem;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vec& z = states.states[i];
    const Vec p = -(riccati.at(states.times[i]) * z);
    Vec zp(2 * d);
    zp << z, p;
    Vec u1 = gain * p;
    e.hamiltonian.push_back(hamiltonian(e.kind, z, p, u1, 1, wrapped, 1));
    e.trajectory.states.push_back(std::move(zp));
    e.u1.push_back(std::move(u1));
    e.u2.push_back(1);
  }
  return e;
}

double adjoint_consistency(const Extremal& extremal, const RiccatiSolution& riccati) {
  double worst = 0.0;
  for (std::size_t i = 0; i < extremal.size(); ++i) {
    const Vec z = extremal.z(i);
    const Vec p = extremal.p(i);
    const double err = (p + riccati.at(extremal.trajectory.times[i]) * z).norm() / (1.0 + p.norm());
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace jamctl

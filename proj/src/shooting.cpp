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

#include "jamctl/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "jamctl/riccati.hpp"

namespace jamctl {

namespace {

// Tolerance on the switching law along a singular arc.
constexpr double kSingularSlack = 1e-6;

IntegratorOptions fixed_grid(const IntegratorOptions& options, double span) {
  IntegratorOptions out = options;
  if (out.step <= 0) out.step = span / std::max(1, out.default_steps);
  return out;
}

struct Layout {
  double t_start = 0.0;
  double t_end = 1.0;
  Eigen::Index d = 0;
  Vec z_start;
};

Layout layout_of(const Problem& problem) {
  return std::visit(
      [](const auto& p) { return Layout{p.t_start, p.t_end, p.system.state_dim(), p.z_start}; },
      problem);
}

std::vector<double> segment_times(double t0, double t1, int segments) {
  std::vector<double> times(static_cast<std::size_t>(segments) + 1);
  for (int k = 0; k <= segments; ++k) {
    times[static_cast<std::size_t>(k)] =
        k == segments ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / segments;
  }
  return times;
}

ExtremalFlow flow_for(const Problem& problem, ShootingMode mode, int eta, const Vec& unknowns) {
  if (const auto* lq = std::get_if<LqProblem>(&problem)) return lq_flow(*lq);
  const auto& reach = std::get<ReachProblem>(problem);
  if (mode == ShootingMode::singular) {
    const auto d = reach.system.state_dim();
    return singular_reach_flow(reach, unknowns[d], unknowns[d + 1]);
  }
  return reach_flow(reach, eta);
}

Vec boundary_residual(const Problem& problem, const Vec& zp_end) {
  if (const auto* lq = std::get_if<LqProblem>(&problem)) {
    const auto d = lq->system.state_dim();
    return zp_end.tail(d) + lq->Qf * zp_end.head(d);
  }
  const auto& reach = std::get<ReachProblem>(problem);
  return zp_end.head(reach.system.state_dim()) - reach.z_end;
}

Vec stack(const Vec& z, const Vec& p) {
  Vec zp(z.size() + p.size());
  zp << z, p;
  return zp;
}

std::vector<Vec> segment_nodes(const Layout& lay, ShootingMode mode, int segments,
                               const Vec& unknowns) {
  std::vector<Vec> nodes;
  nodes.push_back(stack(lay.z_start, unknowns.head(lay.d)));
  if (mode == ShootingMode::regular) {
    for (int k = 1; k < segments; ++k) {
      nodes.push_back(unknowns.segment(lay.d + 2 * lay.d * (k - 1), 2 * lay.d));
    }
  }
  return nodes;
}

double singular_violation(const Extremal& e, const ReachProblem& problem) {
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double s = reach_sigma(e.p(i), problem.system, problem.box);
    worst = std::max(worst, e.u2[i] == 1 ? 1.0 - s : s - 1.0);
  }
  return worst;
}

struct Attempt {
  LmOutcome lm;
  ShootingMode mode = ShootingMode::regular;
  int eta = 1;
};

class Runner {
 public:
  Runner(const Problem& problem, const ShootingConfig& config)
      : problem_(problem), config_(config), layout_(layout_of(problem)) {
    config_.integrator = fixed_grid(config.integrator, layout_.t_end - layout_.t_start);
  }

  // Runs LM from an initial p0 (and, for the singular mode, [a, b]).
  void attempt(ShootingMode mode, int eta, const Vec& start) {
    ++starts_;
    Vec x0 = mode == ShootingMode::regular ? initial_unknowns(start, eta) : start;
    const ResidualFunction f = [&, mode, eta](const Vec& x) {
      Vec r = shooting_residual(problem_, mode, config_.segments, eta, x, config_.integrator);
      if (mode != ShootingMode::singular) return r;
      const auto& reach = std::get<ReachProblem>(problem_);
      Vec out(r.size() + 1);
      out << r, reach_sigma(x.head(layout_.d), reach.system, reach.box) - 1.0;
      return out;
    };
    std::function<Vec(const Vec&)> project;
    if (mode == ShootingMode::singular) {
      project = [lay = layout_](const Vec& x) {
        Vec y = x;
        double a = std::clamp(y[lay.d], lay.t_start, lay.t_end);
        double b = std::clamp(y[lay.d + 1], lay.t_start, lay.t_end);
        if (a > b) a = b = 0.5 * (a + b);
        y[lay.d] = a;
        y[lay.d + 1] = b;
        return y;
      };
      x0 = project(x0);
    }
    Attempt att;
    att.mode = mode;
    att.eta = eta;
    try {
      att.lm = levenberg_marquardt(f, x0, config_, project);
    } catch (const NumericalError&) {
      return;
    }
    consider(std::move(att));
  }

  int starts() const { return starts_; }
  bool has_converged() const { return chosen_.has_value(); }

  ShootingResult finish() const {
    if (chosen_) return build(*chosen_, chosen_extremal_, true);
    if (!closest_) {
      ShootingResult empty;
      empty.starts_tried = starts_;
      empty.residual_norm = std::numeric_limits<double>::infinity();
      empty.converged = false;
      throw NoConvergenceError(empty);
    }
    const Extremal e = replay(*closest_);
    throw NoConvergenceError(build(*closest_, e, false));
  }

 private:
  int mode_segments(ShootingMode mode) const {
    return mode == ShootingMode::regular ? config_.segments : 1;
  }

  Vec initial_unknowns(const Vec& p0, int eta) const {
    if (config_.segments == 1) return p0;
    // Interior nodes from a single-shooting sweep of the initial guess.
    const ExtremalFlow flow = flow_for(problem_, ShootingMode::regular, eta, p0);
    const auto times = segment_times(layout_.t_start, layout_.t_end, config_.segments);
    Vec x(layout_.d + 2 * layout_.d * (config_.segments - 1));
    x.head(layout_.d) = p0;
    Vec zp = stack(layout_.z_start, p0);
    for (int k = 1; k < config_.segments; ++k) {
      try {
        const auto tr = integrate_with_events<double>(flow.field, times[static_cast<std::size_t>(k - 1)],
                                                      times[static_cast<std::size_t>(k)], zp,
                                                      flow.events, config_.integrator);
        zp = tr.states.back();
      } catch (const NumericalError&) {
        // keep the previous node; LM will pull the defect closed
      }
      x.segment(layout_.d + 2 * layout_.d * (k - 1), 2 * layout_.d) = zp;
    }
    return x;
  }

  Extremal replay(const Attempt& att) const {
    return reconstruct_extremal(problem_, att.mode, mode_segments(att.mode), att.eta, att.lm.x,
                                config_.integrator);
  }

  void consider(Attempt att) {
    if (!closest_ || att.lm.residual_norm < closest_->lm.residual_norm) closest_ = att;
    if (!att.lm.converged) return;
    Extremal e;
    try {
      e = replay(att);
    } catch (const NumericalError&) {
      return;
    }
    if (att.mode == ShootingMode::singular &&
        singular_violation(e, std::get<ReachProblem>(problem_)) > kSingularSlack) {
      return;
    }
    const double cost = evaluate_cost(e, problem_).gamma_weighted_total;
    if (!chosen_ || cost < chosen_cost_) {
      chosen_ = std::move(att);
      chosen_cost_ = cost;
      chosen_extremal_ = std::move(e);
    }
  }

  ShootingResult build(const Attempt& att, Extremal e, bool converged) const {
    ShootingResult r;
    e.cost = evaluate_cost(e, problem_);
    r.extremal = std::move(e);
    r.residual_norm = att.lm.residual_norm;
    r.iterations = att.lm.iterations;
    r.converged = converged;
    r.eta_used = att.eta;
    r.starts_tried = starts_;
    r.mode = att.mode;
    r.segments = mode_segments(att.mode);
    r.unknowns = att.lm.x;
    r.p0 = att.lm.x.head(layout_.d);
    return r;
  }

  const Problem& problem_;
  ShootingConfig config_;
  Layout layout_;
  int starts_ = 0;
  std::optional<Attempt> chosen_;
  double chosen_cost_ = 0.0;
  Extremal chosen_extremal_;
  std::optional<Attempt> closest_;
};

std::vector<Vec> multistart_draws(const ShootingConfig& config, Eigen::Index d) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec> draws;
  for (const double magnitude : config.multistart_magnitudes) {
    for (int s = 0; s < config.multistart_samples_per_magnitude; ++s) {
      Vec p(d);
      for (Eigen::Index i = 0; i < d; ++i) p[i] = magnitude * normal(rng);
      draws.push_back(std::move(p));
    }
  }
  return draws;
}

}  // namespace

void ShootingConfig::validate() const {
  if (segments < 1) throw ValidationError("segments must be >= 1");
  if (!(residual_tolerance > 0)) throw ValidationError("residual_tolerance must be positive");
  if (!(fd_step > 0)) throw ValidationError("fd_step must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (multistart_samples_per_magnitude < 0) {
    throw ValidationError("multistart_samples_per_magnitude must be >= 0");
  }
  for (const double m : multistart_magnitudes) {
    if (!(m > 0)) throw ValidationError("multistart magnitudes must be positive");
  }
}

Vec reach_residual(const Vec& p0, const ReachProblem& problem, int eta,
                   const IntegratorOptions& options) {
  return shooting_residual(problem, ShootingMode::regular, 1, eta, p0, options);
}

Vec lq_residual(const Vec& p0, const LqProblem& problem, const IntegratorOptions& options) {
  return shooting_residual(problem, ShootingMode::regular, 1, 1, p0, options);
}

Vec shooting_residual(const Problem& problem, ShootingMode mode, int segments, int eta,
                      const Vec& unknowns, const IntegratorOptions& options) {
  const Layout lay = layout_of(problem);
  if (mode == ShootingMode::singular) segments = 1;
  const Eigen::Index expected = mode == ShootingMode::singular
                                    ? lay.d + 2
                                    : lay.d + 2 * lay.d * (segments - 1);
  if (unknowns.size() != expected) throw ValidationError("shooting: wrong number of unknowns");
  const IntegratorOptions grid = fixed_grid(options, lay.t_end - lay.t_start);
  const ExtremalFlow flow = flow_for(problem, mode, eta, unknowns);
  const auto times = segment_times(lay.t_start, lay.t_end, segments);
  const auto nodes = segment_nodes(lay, mode, segments, unknowns);

  Vec residual(2 * lay.d * (segments - 1) + lay.d);
  Vec end;
  for (int k = 0; k < segments; ++k) {
    const auto tr = integrate_with_events<double>(flow.field, times[static_cast<std::size_t>(k)],
                                                  times[static_cast<std::size_t>(k + 1)],
                                                  nodes[static_cast<std::size_t>(k)], flow.events,
                                                  grid);
    end = tr.states.back();
    if (k + 1 < segments) {
      residual.segment(2 * lay.d * k, 2 * lay.d) = end - nodes[static_cast<std::size_t>(k + 1)];
    }
  }
  residual.tail(lay.d) = boundary_residual(problem, end);
  return residual;
}

Mat central_jacobian(const ResidualFunction& f, const Vec& x, double fd_step) {
  Mat J;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vec col = (f(xp) - f(xm)) / (2.0 * h);
    if (i == 0) J.resize(col.size(), x.size());
    J.col(i) = col;
  }
  return J;
}

Mat forward_jacobian(const ResidualFunction& f, const Vec& x, double fd_step) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step * std::max(1.0, std::abs(x[i]));
    Vec xp = x;
    xp[i] += h;
    J.col(i) = (f(xp) - f0) / h;
  }
  return J;
}

LmOutcome levenberg_marquardt(const ResidualFunction& f, const Vec& x0, const ShootingConfig& config,
                              const std::function<Vec(const Vec&)>& project) {
  LmOutcome out;
  out.x = x0;
  out.residual = f(out.x);
  out.residual_norm = out.residual.norm();
  double lambda = 1e-3;
  int slow = 0;  // consecutive accepted steps with negligible progress
  while (out.iterations < config.max_iterations && slow < 10) {
    if (out.residual_norm <= config.residual_tolerance) break;
    ++out.iterations;
    const Mat J = central_jacobian(f, out.x, config.fd_step);
    if (!J.allFinite()) break;
    // Column scale for Marquardt damping, floored so zero columns stay damped.
    const Vec col_sq = J.colwise().squaredNorm().transpose();
    const double diag_floor = 1e-12 * std::max(1.0, col_sq.maxCoeff());
    const Vec D = col_sq.cwiseMax(diag_floor).cwiseSqrt();
    // Each damped step solves min ||[J; sqrt(lambda) D] s + [r; 0]|| by an
    // orthogonal factorization, which sees cond(J) rather than cond(J'J).
    const Eigen::Index rows = J.rows(), n = J.cols();
    Mat aug(rows + n, n);
    aug.topRows(rows) = J;
    Vec rhs = Vec::Zero(rows + n);
    rhs.head(rows) = -out.residual;
    bool accepted = false;
    while (lambda < 1e16) {
      aug.bottomRows(n) = (std::sqrt(lambda) * D).asDiagonal();
      Vec trial = out.x + aug.colPivHouseholderQr().solve(rhs);
      if (project) trial = project(trial);
      if (!trial.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Vec r;
      try {
        r = f(trial);
      } catch (const NumericalError&) {
        lambda *= 10.0;
        continue;
      }
      const double norm = r.norm();
      if (std::isfinite(norm) && norm < out.residual_norm) {
        slow = norm > (1.0 - 1e-3) * out.residual_norm ? slow + 1 : 0;
        out.x = std::move(trial);
        out.residual = std::move(r);
        out.residual_norm = norm;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // stalled: no descent at any damping
  }
  out.converged = out.residual_norm <= config.residual_tolerance;
  return out;
}

Extremal reconstruct_extremal(const Problem& problem, ShootingMode mode, int segments, int eta,
                              const Vec& unknowns, const IntegratorOptions& options) {
  const Layout lay = layout_of(problem);
  if (mode == ShootingMode::singular) segments = 1;
  const IntegratorOptions grid = fixed_grid(options, lay.t_end - lay.t_start);
  const ExtremalFlow flow = flow_for(problem, mode, eta, unknowns);
  return integrate_extremal_segments(flow, segment_times(lay.t_start, lay.t_end, segments),
                                     segment_nodes(lay, mode, segments, unknowns), grid);
}

ShootingResult solve_bvp(const LqProblem& problem, const ShootingConfig& config) {
  problem.validate();
  config.validate();
  const Problem wrapped = problem;
  Runner runner(wrapped, config);
  // The classical LQR adjoint is a natural first guess: exact for gamma = 0.
  try {
    const RiccatiSolution lqr = classical_lqr(problem, config.integrator);
    runner.attempt(ShootingMode::regular, 1, Vec(-lqr.P.front() * problem.z_start));
  } catch (const NumericalError&) {
  }
  for (const Vec& p0 : multistart_draws(config, problem.system.state_dim())) {
    runner.attempt(ShootingMode::regular, 1, p0);
  }
  return runner.finish();
}

ShootingResult solve_bvp(const ReachProblem& problem, const ShootingConfig& config) {
  problem.validate();
  config.validate();
  const Problem wrapped = problem;
  const auto draws = multistart_draws(config, problem.system.state_dim());

  Runner normal(wrapped, config);
  for (const Vec& p0 : draws) normal.attempt(ShootingMode::regular, 1, p0);
  if (normal.has_converged()) return normal.finish();
  int tried = normal.starts();

  // Singular arc: sigma pinned at 1, the on-interval [a, b] is unknown.
  Runner singular(wrapped, config);
  const auto d = problem.system.state_dim();
  for (const Vec& p0 : draws) {
    const double s = reach_sigma(p0, problem.system, problem.box);
    if (!(s > 0)) continue;
    Vec x(d + 2);
    x << p0 / s, problem.t_start, problem.t_end;
    singular.attempt(ShootingMode::singular, 1, x);
  }
  tried += singular.starts();
  if (singular.has_converged()) {
    ShootingResult r = singular.finish();
    r.starts_tried = tried;
    return r;
  }

  Runner abnormal(wrapped, config);
  for (const Vec& p0 : draws) abnormal.attempt(ShootingMode::regular, 0, p0);
  tried += abnormal.starts();
  try {
    ShootingResult r = abnormal.finish();
    r.starts_tried = tried;
    return r;
  } catch (const NoConvergenceError& err) {
    // Report the smallest residual over every stage.
    ShootingResult best = err.best();
    for (Runner* stage : {&normal, &singular}) {
      try {
        stage->finish();
      } catch (const NoConvergenceError& e) {
        if (e.best().residual_norm < best.residual_norm) best = e.best();
      }
    }
    best.starts_tried = tried;
    throw NoConvergenceError(best);
  }
}

ShootingResult solve_bvp(const Problem& problem, const ShootingConfig& config) {
  return std::visit([&](const auto& p) { return solve_bvp(p, config); }, problem);
}

}  // namespace jamctl

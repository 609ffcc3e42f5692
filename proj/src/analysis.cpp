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

#include "jamctl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "jamctl/numkernel.hpp"
#include "jamctl/riccati.hpp"

namespace jamctl {

namespace {

// u1 just before sample j, i.e. with the controls of interval j - 1.
Vec lq_left_control(const Extremal& e, std::size_t j, const Mat& gain) {
  if (e.u2[j - 1] == 0) return Vec::Zero(gain.rows());
  return gain * e.p(j);
}

std::vector<std::size_t> switch_sample_indices(const Extremal& e) {
  std::vector<std::size_t> idx = e.trajectory.switch_samples;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e.u2[i] != e.u2[i - 1]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  idx.erase(std::remove_if(idx.begin(), idx.end(),
                           [&](std::size_t i) { return i == 0 || i + 1 >= e.size(); }),
            idx.end());
  return idx;
}

template <typename LeftH>
void hamiltonian_profile(const Extremal& e, LeftH&& left_h, CertificateReport& report) {
  const std::vector<std::size_t> cuts = switch_sample_indices(e);
  std::size_t begin = 0;
  double worst = 0.0;
  bool first = true;
  auto close_interval = [&](std::size_t end_exclusive, double end_value, bool has_end) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = begin; i < end_exclusive; ++i) {
      lo = std::min(lo, e.hamiltonian[i]);
      hi = std::max(hi, e.hamiltonian[i]);
      sum += e.hamiltonian[i];
      ++count;
    }
    if (has_end) {
      lo = std::min(lo, end_value);
      hi = std::max(hi, end_value);
    }
    if (count > 0) {
      worst = std::max(worst, hi - lo);
      if (first) {
        report.hamiltonian_level = sum / static_cast<double>(count);
        first = false;
      }
    }
  };
  for (const std::size_t c : cuts) {
    const double before = left_h(c);
    close_interval(c, before, true);
    report.hamiltonian_jumps_at_switches.push_back(e.hamiltonian[c] - before);
    begin = c;
  }
  close_interval(e.size(), 0.0, false);
  report.hamiltonian_piecewise_drift = worst;
}

double nontriviality(const Extremal& e) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i) {
    worst = std::min(worst, std::sqrt(static_cast<double>(e.eta * e.eta) + e.p(i).squaredNorm()));
  }
  return worst;
}

void finish(CertificateReport& report, double tolerance, int eta) {
  double scale = std::abs(report.hamiltonian_level);
  report.conditions_met = report.hamiltonian_piecewise_drift <= 1e-3 * (1.0 + scale) &&
                          report.boundary_residual <= tolerance && report.nontriviality_min > 0.0;
  report.locally_optimal = report.conditions_met && eta == 1;
}

}  // namespace

std::string OracleResult::pattern_string() const {
  std::string s;
  for (const int b : best_pattern) s.push_back(b ? '1' : '0');
  return s;
}

double l0_seminorm(const Extremal& extremal) {
  const auto& times = extremal.trajectory.times;
  double total = 0.0;
  std::size_t i = 0;
  const std::size_t n = times.size();
  while (i + 1 < n) {
    if (extremal.u2[i] == 0) {
      ++i;
      continue;
    }
    const double start = times[i];
    while (i + 1 < n && extremal.u2[i] != 0) ++i;
    total += times[i] - start;
  }
  return total;
}

double max_grid_step(const Extremal& extremal) {
  double h = 0.0;
  const auto& t = extremal.trajectory.times;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) h = std::max(h, t[i + 1] - t[i]);
  return h;
}

CostBreakdown evaluate_cost(const Extremal& extremal, const ReachProblem& problem) {
  if (extremal.state_dim() != problem.system.state_dim()) {
    throw ValidationError("evaluate_cost: dimension mismatch");
  }
  CostBreakdown c;
  c.l0_measure = l0_seminorm(extremal);
  c.gamma_weighted_total = c.l0_measure;
  return c;
}

CostBreakdown evaluate_cost(const Extremal& extremal, const LqProblem& problem) {
  if (extremal.state_dim() != problem.system.state_dim() ||
      extremal.u1.front().size() != problem.system.input_dim()) {
    throw ValidationError("evaluate_cost: dimension mismatch");
  }
  const Mat gain = problem.R.llt().solve(problem.system.B.transpose());
  const auto& times = extremal.trajectory.times;
  auto stage = [&](const Vec& z, const Vec& u) {
    return 0.5 * z.dot(problem.Q * z) + 0.5 * u.dot(problem.R * u);
  };
  CostBreakdown c;
  c.l0_measure = l0_seminorm(extremal);
  for (std::size_t i = 0; i + 1 < extremal.size(); ++i) {
    const double h = times[i + 1] - times[i];
    const double left = stage(extremal.z(i), extremal.u1[i]);
    const double right = stage(extremal.z(i + 1), lq_left_control(extremal, i + 1, gain));
    c.running_quadratic += 0.5 * h * (left + right);
  }
  const Vec zT = extremal.z(extremal.size() - 1);
  c.terminal_quadratic = 0.5 * zT.dot(problem.Qf * zT);
  c.gamma_weighted_total = problem.gamma * c.l0_measure + c.running_quadratic + c.terminal_quadratic;
  return c;
}

CostBreakdown evaluate_cost(const Extremal& extremal, const Problem& problem) {
  return std::visit([&](const auto& p) { return evaluate_cost(extremal, p); }, problem);
}

CertificateReport certify(const Extremal& extremal, const ReachProblem& problem, double tolerance) {
  CertificateReport report;
  const LtiSystem& sys = problem.system;
  auto left_h = [&](std::size_t j) {
    const Vec& u1 = extremal.u1[j - 1];
    const int u2 = extremal.u2[j - 1];
    return extremal.p(j).dot(sys.A * extremal.z(j) + sys.B * u1 * static_cast<double>(u2)) +
           (u2 == 0 ? static_cast<double>(extremal.eta) : 0.0);
  };
  hamiltonian_profile(extremal, left_h, report);
  report.boundary_residual = std::max((extremal.z(0) - problem.z_start).norm(),
                                      (extremal.z(extremal.size() - 1) - problem.z_end).norm());
  report.nontriviality_min = nontriviality(extremal);
  finish(report, tolerance, extremal.eta);
  return report;
}

CertificateReport certify(const Extremal& extremal, const LqProblem& problem, double tolerance) {
  CertificateReport report;
  const Problem wrapped = problem;
  const Mat gain = problem.R.llt().solve(problem.system.B.transpose());
  auto left_h = [&](std::size_t j) {
    return hamiltonian(extremal.kind, extremal.z(j), extremal.p(j),
                       lq_left_control(extremal, j, gain), extremal.u2[j - 1], wrapped, 1);
  };
  hamiltonian_profile(extremal, left_h, report);
  const std::size_t last = extremal.size() - 1;
  report.boundary_residual =
      std::max((extremal.z(0) - problem.z_start).norm(),
               (extremal.p(last) + problem.Qf * extremal.z(last)).norm());
  report.nontriviality_min = nontriviality(extremal);
  finish(report, tolerance, extremal.eta);
  return report;
}

CertificateReport certify(const Extremal& extremal, const Problem& problem, double tolerance) {
  return std::visit([&](const auto& p) { return certify(extremal, p, tolerance); }, problem);
}

OracleResult oracle_lq(const LqProblem& problem, int N) {
  if (N < 1 || N > kMaxOracleIntervals) throw ValidationError("N too large");
  const double span = problem.t_end - problem.t_start;
  const int steps_per_interval = std::max(1, (2000 + N - 1) / N);
  const double h = span / N;

  std::vector<double> grid(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) grid[static_cast<std::size_t>(k)] = k == N ? problem.t_end : problem.t_start + h * k;
  const double max_step = h / steps_per_interval;

  OracleResult result;
  result.discretization_N = N;
  result.best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> pattern(static_cast<std::size_t>(N));
  const long count = 1L << N;
  for (long code = 0; code < count; ++code) {
    // Lexicographic order: the first interval is the most significant bit.
    int on = 0;
    for (int k = 0; k < N; ++k) {
      pattern[static_cast<std::size_t>(k)] = static_cast<int>((code >> (N - 1 - k)) & 1L);
      on += pattern[static_cast<std::size_t>(k)];
    }
    const RiccatiSolution sol = gated_riccati(problem, grid, pattern, max_step);
    const double cost = 0.5 * problem.z_start.dot(sol.P.front() * problem.z_start) +
                        problem.gamma * h * on;
    ++result.pattern_costs_evaluated;
    if (cost < result.best_cost) {
      result.best_cost = cost;
      result.best_pattern = pattern;
    }
  }
  return result;
}

OracleResult oracle_reach(const ReachProblem& problem, int N, int grid) {
  if (N < 1 || N > kMaxOracleIntervals) throw ValidationError("N too large");
  if (grid < 1) throw ValidationError("oracle grid must be positive");
  const LtiSystem& sys = problem.system;
  const auto d = sys.state_dim();
  const auto m = sys.input_dim();
  const double span = problem.t_end - problem.t_start;
  const int substeps = N * grid;
  const double delta = span / substeps;

  // Zero-order-hold input map of one sub-step: [[A, B], [0, 0]] exponential.
  Mat aug = Mat::Zero(d + m, d + m);
  aug.topLeftCorner(d, d) = sys.A * delta;
  aug.topRightCorner(d, m) = sys.B * delta;
  const Mat aug_exp = mat_exp(aug);
  const Mat step_transition = aug_exp.topLeftCorner(d, d);
  const Mat step_input = aug_exp.topRightCorner(d, m);

  // Column block j maps u on sub-step j to z(t_end).
  Mat G(d, substeps * m);
  Mat tail = Mat::Identity(d, d);
  for (int j = substeps - 1; j >= 0; --j) {
    G.middleCols(j * m, m) = tail * step_input;
    tail = tail * step_transition;
  }
  const Vec target = problem.z_end - tail * problem.z_start;
  const double threshold = 1e-4 * (1.0 + problem.z_end.norm());

  OracleResult result;
  result.discretization_N = N;
  std::vector<int> pattern(static_cast<std::size_t>(N));
  const long count = 1L << N;
  for (int on = 0; on <= N; ++on) {
    for (long code = 0; code < count; ++code) {
      if (__builtin_popcountl(static_cast<unsigned long>(code)) != on) continue;
      std::vector<Eigen::Index> cols;
      for (int k = 0; k < N; ++k) {
        pattern[static_cast<std::size_t>(k)] = static_cast<int>((code >> (N - 1 - k)) & 1L);
        if (!pattern[static_cast<std::size_t>(k)]) continue;
        for (int s = 0; s < grid; ++s) {
          for (Eigen::Index c = 0; c < m; ++c) cols.push_back((k * grid + s) * m + c);
        }
      }
      ++result.pattern_costs_evaluated;
      double residual = target.norm();
      if (!cols.empty()) {
        Mat Gs(d, static_cast<Eigen::Index>(cols.size()));
        Vec lo(Gs.cols()), hi(Gs.cols());
        for (Eigen::Index c = 0; c < Gs.cols(); ++c) {
          Gs.col(c) = G.col(cols[static_cast<std::size_t>(c)]);
          const auto comp = cols[static_cast<std::size_t>(c)] % m;
          lo[c] = problem.box.lower[comp];
          hi[c] = problem.box.upper[comp];
        }
        const double lipschitz = Eigen::JacobiSVD<Mat>(Gs).singularValues()(0);
        const double L = lipschitz * lipschitz;
        if (L > 0.0) {
          Vec u = Vec::Zero(Gs.cols());
          for (int it = 0; it < 500; ++it) {
            const Vec r = Gs * u - target;
            u = (u - Gs.transpose() * r / L).cwiseMax(lo).cwiseMin(hi);
          }
          residual = (Gs * u - target).norm();
        }
      }
      if (residual <= threshold) {
        result.best_pattern = pattern;
        result.best_cost = span * on / N;
        return result;
      }
    }
  }
  throw Error("oracle infeasible at this N");
}

}  // namespace jamctl

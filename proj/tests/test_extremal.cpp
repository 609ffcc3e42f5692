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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jamctl/extremal.hpp"

namespace jamctl {
namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

Mat col(std::initializer_list<double> xs) { return Mat(v(xs)); }

const LtiSystem kScalar(Mat::Zero(1, 1), Mat::Ones(1, 1));
const LtiSystem kRateInput(Mat::Zero(2, 2), col({0, 1}));

ReachProblem scalar_reach() {
  ReachProblem p;
  p.system = kScalar;
  p.box = ControlBox::symmetric(1);
  p.t_start = 0.0;
  p.t_end = 2.0;
  p.z_start = v({0});
  p.z_end = v({1});
  return p;
}

LqProblem pendulum(double gamma) {
  LqProblem p;
  p.system = LtiSystem((Mat(2, 2) << 0, 1, 29.43, -0.03).finished(), col({0, 1}));
  p.Q = 3 * Mat::Identity(2, 2);
  p.R = Mat::Constant(1, 1, 3.0);
  p.Qf = 10 * Mat::Identity(2, 2);
  p.gamma = gamma;
  p.t_end = 2.0;
  p.z_start = v({0, M_PI / 10});
  return p;
}

TEST(AdjointInit, Nontriviality) {
  EXPECT_THROW((AdjointInit{v({0, 0}), 0}.validate()), ValidationError);
  EXPECT_NO_THROW((AdjointInit{v({0, 0}), 1}.validate()));
  EXPECT_NO_THROW((AdjointInit{v({1, 0}), 0}.validate()));
  EXPECT_THROW((AdjointInit{v({1}), 2}.validate()), ValidationError);
}

TEST(ReachU1, Examples) {
  const LtiSystem I2(Mat::Zero(2, 2), Mat::Identity(2, 2));
  EXPECT_EQ(reach_u1(v({2, -3}), I2, ControlBox::symmetric(2)), v({1, -1}));
  EXPECT_EQ(reach_u1(v({0, 0}), I2, ControlBox::symmetric(2)), v({0, 0}));
  EXPECT_EQ(reach_u1(v({5, 0.5}), kRateInput, ControlBox::symmetric(1)), v({1}));
}

TEST(ReachSigma, Examples) {
  const LtiSystem I2(Mat::Zero(2, 2), Mat::Identity(2, 2));
  EXPECT_DOUBLE_EQ(reach_sigma(v({2, -3}), I2, ControlBox::symmetric(2)), 5.0);
  EXPECT_DOUBLE_EQ(reach_sigma(v({0, 0}), I2, ControlBox::symmetric(2)), 0.0);
  EXPECT_DOUBLE_EQ(reach_sigma(v({-3}), kScalar, ControlBox{v({-2}), v({1})}), 6.0);
}

TEST(ReachU2, Examples) {
  EXPECT_EQ(reach_u2(5.0, 1), 1);
  EXPECT_EQ(reach_u2(0.5, 1), 0);
  EXPECT_EQ(reach_u2(0.5, 0), 1);
  EXPECT_EQ(reach_u2(1.0, 1), 1);  // the ">=" branch on the surface
}

TEST(ReachField, Examples) {
  const ControlBox box = ControlBox::symmetric(1);
  EXPECT_EQ(reach_field(0, v({0, 0, 0, 0}), kRateInput, box, 1), v({0, 0, 0, 0}));
  EXPECT_EQ(reach_field(0, v({0, 2}), kScalar, box, 1), v({1, 0}));
  EXPECT_EQ(reach_field(0, v({0, 0.5}), kScalar, box, 1), v({0, 0}));
  EXPECT_EQ(reach_field(0, v({0, 0.5}), kScalar, box, 0), v({1, 0}));
}

TEST(AdjointClosedForm, Examples) {
  EXPECT_EQ(adjoint_closed_form(v({1, -2}), kRateInput, 3.0, 0.0), v({1, -2}));
  const LtiSystem unit(Mat::Ones(1, 1), Mat::Ones(1, 1));
  EXPECT_NEAR(adjoint_closed_form(v({1}), unit, 1.0, 0.0)[0], 0.36787944117144233, 1e-15);
  const LtiSystem pend = pendulum(0).system;
  EXPECT_TRUE(adjoint_closed_form(v({1, 2}), pend, 0.5, 0.5).isApprox(v({1, 2})));
}

TEST(AdjointClosedForm, MatchesIntegratedAdjoint) {
  const ReachProblem base = scalar_reach();
  ReachProblem p = base;
  p.system = pendulum(0).system;
  p.box = ControlBox::symmetric(1);
  p.z_start = v({0.1, 0});
  p.z_end = v({0, 0});
  const Extremal e = integrate_extremal(reach_flow(p, 1), 0.0, 1.0, v({0.1, 0, 0.3, 0.05}));
  for (std::size_t i = 0; i < e.size(); i += 97) {
    const Vec closed = adjoint_closed_form(v({0.3, 0.05}), p.system, e.trajectory.times[i], 0.0);
    EXPECT_LE((closed - e.p(i)).norm(), 1e-8 * (1 + closed.norm()));
  }
}

TEST(LqQ, Examples) {
  const Mat R3 = Mat::Constant(1, 1, 3.0);
  EXPECT_EQ(lq_q(v({0, 0}), kRateInput, R3), 0.0);
  EXPECT_DOUBLE_EQ(lq_q(v({7, 3}), kRateInput, R3), 3.0);
  const LtiSystem I2(Mat::Zero(2, 2), Mat::Identity(2, 2));
  EXPECT_DOUBLE_EQ(lq_q(v({3, 4}), I2, Mat::Identity(2, 2)), 25.0);
}

TEST(LqControls, Examples) {
  const Mat R3 = Mat::Constant(1, 1, 3.0);
  const auto classical = lq_controls(v({1, -2}), kRateInput, R3, 0.0);
  EXPECT_EQ(classical.u2, 1);
  EXPECT_NEAR(classical.u1[0], -2.0 / 3.0, 1e-15);

  const auto on = lq_controls(v({0, 0.3}), kRateInput, R3, 0.01);
  EXPECT_EQ(on.u2, 1);
  EXPECT_NEAR(on.u1[0], 0.1, 1e-15);

  const auto off = lq_controls(v({0, 0.3}), kRateInput, R3, 1.0);
  EXPECT_EQ(off.u2, 0);
  EXPECT_EQ(off.u1[0], 0.0);

  // Joint-maximization rule doubles the threshold: q = 0.03 < 2 * 0.02.
  EXPECT_EQ(lq_controls(v({0, 0.3}), kRateInput, R3, 0.02, 2.0).u2, 0);
  EXPECT_EQ(lq_controls(v({0, 0.3}), kRateInput, R3, 0.02, 1.0).u2, 1);
}

TEST(LqField, Examples) {
  const LqProblem p = pendulum(0.0);
  EXPECT_EQ(lq_field(0, v({0, 0, 0, 0}), p.system, p.Q, p.R, 0.01), v({0, 0, 0, 0}));

  const Mat H = hamiltonian_matrix(p.system, p.Q, p.R, 1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Vec zp = v({g(rng), g(rng), g(rng), g(rng)});
    EXPECT_LE((lq_field(0, zp, p.system, p.Q, p.R, 0.0) - H * zp).norm(), 1e-12 * (1 + zp.norm()));
  }
  EXPECT_EQ(lq_field(0, v({1, 1}), kScalar, Mat::Zero(1, 1), Mat::Ones(1, 1), 4.0), v({0, 0}));
}

TEST(Hamiltonian, Examples) {
  const ReachProblem rp = scalar_reach();
  EXPECT_EQ(hamiltonian(ProblemKind::reach, v({0}), v({0}), v({0}), 0, rp, 1), 1.0);

  LqProblem lq = pendulum(0.01);
  EXPECT_EQ(hamiltonian(ProblemKind::lq, v({0, 0}), v({0, 0}), v({0}), 1, lq, 1), 0.0);

  ReachProblem r2 = rp;
  r2.system = kRateInput;
  r2.z_start = v({0, 0});
  r2.z_end = v({0, 0});
  EXPECT_EQ(hamiltonian(ProblemKind::reach, v({0, 0}), v({0, 2}), v({1}), 1, r2, 1), 2.0);
}

TEST(Hamiltonian, SparseChargesMergedInput) {
  const LqProblem lq = pendulum(0.5);
  const Vec z = v({0.1, 0.2}), p = v({0.3, 0.4});
  // The merged input u1 u2 vanishes when u2 = 0, so R is not charged on u1.
  const double dense = hamiltonian(ProblemKind::lq, z, p, v({2}), 0, lq, 1);
  const double sparse = hamiltonian(ProblemKind::sparse_lq, z, p, v({2}), 0, lq, 1);
  EXPECT_NEAR(sparse - dense, 0.5 * 3.0 * 4.0, 1e-12);
}

TEST(SparseLqControl, Examples) {
  const Mat R1 = Mat::Ones(1, 1);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const Vec p = v({g(rng), g(rng)});
    EXPECT_EQ(sparse_lq_control(p, kRateInput, R1, 0.0), kRateInput.B.transpose() * p);
  }
  EXPECT_EQ(sparse_lq_control(v({0, 0}), kRateInput, R1, 0.3), v({0}));
  EXPECT_EQ(sparse_lq_control(v({9, 0.4}), kRateInput, R1, 0.25), v({0}));
}

TEST(ReachLaw, ComponentwiseArgmax) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int draw = 0; draw < 1000; ++draw) {
    const Eigen::Index d = 1 + draw % 4, m = 1 + draw % 3;
    Mat B(d, m);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const LtiSystem sys(Mat::Zero(d, d), B);
    ControlBox box{Vec(m), Vec(m)};
    for (Eigen::Index i = 0; i < m; ++i) {
      box.lower[i] = -0.1 - 2 * u01(rng);
      box.upper[i] = 0.1 + 2 * u01(rng);
    }
    Vec p(d);
    for (Eigen::Index i = 0; i < d; ++i) p[i] = g(rng);
    const Vec bp = B.transpose() * p;
    const Vec u = reach_u1(p, sys, box);
    const double best = bp.dot(u);
    EXPECT_EQ(reach_sigma(p, sys, box), best);
    for (int k = 0; k < 100; ++k) {
      Vec w(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        w[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * u01(rng);
      }
      ASSERT_GE(best, bp.dot(w));
    }
    const double c = 0.1 + 10 * u01(rng);
    EXPECT_EQ(reach_u1(Vec(c * p), sys, box), u);
    EXPECT_NEAR(reach_sigma(Vec(c * p), sys, box), c * best, 1e-12 * (1 + c * best));
  }
}

TEST(LqLaw, GammaZeroIsClassical) {
  const LqProblem lq = pendulum(0.0);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const Vec p = v({g(rng), g(rng)});
    const auto c = lq_controls(p, lq.system, lq.R, 0.0);
    EXPECT_EQ(c.u2, 1);
    EXPECT_NEAR(c.u1[0], p[1] / 3.0, 1e-13 * (1 + std::abs(p[1])));
  }
}

double max_drift_between_switches(const Extremal& e) {
  double worst = 0.0;
  std::size_t begin = 0;
  auto close = [&](std::size_t end) {
    // The sample at a switch carries the post-switch controls, so the
    // interval [begin, end) is one regime.
    double lo = e.hamiltonian[begin], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, e.hamiltonian[i]);
      hi = std::max(hi, e.hamiltonian[i]);
    }
    worst = std::max(worst, hi - lo);
  };
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e.trajectory.regimes[i] != e.trajectory.regimes[i - 1]) {
      close(i);
      begin = i;
    }
  }
  close(e.size());
  return worst;
}

TEST(Flows, PiecewiseHamiltonianConservation) {
  IntegratorOptions opt;
  for (const double gamma : {0.0, 0.01, 1.0}) {
    const LqProblem lq = pendulum(gamma);
    const Extremal e = integrate_extremal(lq_flow(lq), 0.0, 2.0, v({0, M_PI / 10, -50, -9}), opt);
    EXPECT_LE(max_drift_between_switches(e), 10 * opt.tolerance) << "gamma " << gamma;
    for (std::size_t i = 0; i < e.size(); ++i) {
      ASSERT_TRUE(e.u2[i] == 0 || e.u2[i] == 1);
      if (e.u2[i] == 0) ASSERT_TRUE(e.u1[i].isZero(0.0));
    }
  }
  ReachProblem rp = scalar_reach();
  rp.system = LtiSystem((Mat(2, 2) << 0, 1, -1, 0).finished(), col({0, 1}));
  rp.z_start = v({1, 0});
  rp.z_end = v({0, 0});
  const Extremal e = integrate_extremal(reach_flow(rp, 1), 0.0, 6.0, v({1, 0, 0.5, 1.2}), opt);
  EXPECT_GE(e.trajectory.switch_times.size(), 2u);
  EXPECT_LE(max_drift_between_switches(e), 10 * opt.tolerance);
}

TEST(Flows, LqSwitchLocalized) {
  const LqProblem lq = pendulum(0.01);
  const ExtremalFlow flow = lq_flow(lq);
  const Extremal e = integrate_extremal(flow, 0.0, 2.0, v({0, M_PI / 10, -55.5071707, -10.24536252}));
  ASSERT_FALSE(e.trajectory.switch_times.empty());
  for (std::size_t k = 0; k < e.trajectory.switch_times.size(); ++k) {
    const std::size_t i = e.trajectory.switch_samples[k];
    EXPECT_EQ(e.trajectory.times[i], e.trajectory.switch_times[k]);
    EXPECT_NEAR(lq_q(e.p(i), lq.system, lq.R), lq.gamma, 1e-8);
  }
}

TEST(Flows, SingularReachArc) {
  const ReachProblem rp = scalar_reach();
  const Extremal e = integrate_extremal(singular_reach_flow(rp, 0.5, 1.5), 0.0, 2.0, v({0, 1}));
  EXPECT_NEAR(e.z(e.size() - 1)[0], 1.0, 1e-9);
  EXPECT_TRUE(e.singular);
  const auto sw = e.u2_switch_times();
  ASSERT_EQ(sw.size(), 2u);
  EXPECT_NEAR(sw[0], 0.5, 1e-9);
  EXPECT_NEAR(sw[1], 1.5, 1e-9);
  for (double h : e.hamiltonian) EXPECT_DOUBLE_EQ(h, 1.0);
}

TEST(Concatenate, JoinsAtTheSeam) {
  const LqProblem lq = pendulum(0.0);
  const ExtremalFlow flow = lq_flow(lq);
  const Vec zp0 = v({0, M_PI / 10, -55, -10});
  const Extremal a = integrate_extremal(flow, 0.0, 1.0, zp0);
  const Extremal b = integrate_extremal(flow, 1.0, 2.0, a.trajectory.states.back());
  const Extremal ab = concatenate_in_time(a, b);
  EXPECT_EQ(ab.size(), a.size() + b.size() - 1);
  EXPECT_EQ(ab.trajectory.t_start(), 0.0);
  EXPECT_EQ(ab.trajectory.t_end(), 2.0);
  EXPECT_TRUE(ab.trajectory.switch_times.empty());
  EXPECT_THROW(concatenate_in_time(b, a), ValidationError);
}

}  // namespace
}  // namespace jamctl

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

#include "jamctl/numkernel.hpp"

namespace jamctl {
namespace {

Mat random_matrix(std::mt19937_64& rng, Eigen::Index n, double norm) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
  return M * (norm / M.norm());
}

// Reference exponential: Taylor series on M / 2^s, squared back up.
Mat taylor_exp(const Mat& M) {
  int s = 0;
  double n = M.norm();
  while (n > 0.01) {
    n /= 2;
    ++s;
  }
  const Mat X = M / std::pow(2.0, s);
  Mat term = Mat::Identity(M.rows(), M.cols());
  Mat sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * X / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

TEST(MatExp, Zero) { EXPECT_TRUE(mat_exp(Mat::Zero(3, 3)).isApprox(Mat::Identity(3, 3))); }

TEST(MatExp, Nilpotent) {
  Mat M(2, 2), E(2, 2);
  M << 0, 1, 0, 0;
  E << 1, 1, 0, 1;
  EXPECT_LE((mat_exp(M) - E).norm(), 1e-15);
}

TEST(MatExp, Diagonal) {
  const Mat E = mat_exp(Vec((Vec(2) << 1, -1).finished()).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(E(0, 0), 2.718281828459045, 1e-14);
  EXPECT_NEAR(E(1, 1), 0.36787944117144233, 1e-15);
  EXPECT_EQ(E(0, 1), 0.0);
}

TEST(MatExp, AgainstTaylorReference) {
  std::mt19937_64 rng(11);
  for (const double norm : {0.5, 1.5, 4.0, 10.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Mat M = random_matrix(rng, 4, norm);
      const Mat ref = taylor_exp(M);
      EXPECT_LE((mat_exp(M) - ref).norm(), 1e-12 * ref.norm()) << "norm " << norm;
    }
  }
}

TEST(MatExp, InverseProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat M = random_matrix(rng, 1 + trial % 6, 5.0 * (trial + 1) / 50);
    const Mat I = Mat::Identity(M.rows(), M.cols());
    EXPECT_LE((mat_exp(M) * mat_exp(Mat(-M)) - I).norm(), 1e-10);
  }
}

TEST(MatExp, Semigroup) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat M = random_matrix(rng, 1 + trial % 5, 2.0);
    const double s = u(rng), t = u(rng);
    const Mat lhs = mat_exp(Mat(M * (s + t)));
    EXPECT_LE((lhs - mat_exp(Mat(M * s)) * mat_exp(Mat(M * t))).norm(), 1e-10 * (1 + lhs.norm()));
  }
}

TEST(MatExp, Overflow) {
  Mat M = Mat::Identity(2, 2) * 1e6;
  try {
    mat_exp(M);
    FAIL() << "expected overflow";
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "matrix exponential overflow");
  }
}

TEST(LinearSolve, Examples) {
  EXPECT_TRUE(linear_solve(Mat::Identity(2, 2), Vec((Vec(2) << 1, 2).finished()))
                  .isApprox((Vec(2) << 1, 2).finished()));
  Mat D(2, 2);
  D << 2, 0, 0, 4;
  EXPECT_TRUE(linear_solve(D, Vec((Vec(2) << 2, 8).finished())).isApprox((Vec(2) << 1, 2).finished()));
  Mat S(2, 2);
  S << 1, 1, 2, 2;
  try {
    linear_solve(S, Vec((Vec(2) << 1, 0).finished()));
    FAIL() << "expected singular";
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "singular matrix");
  }
}

TEST(LinearSolve, ResidualBound) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    Mat M = random_matrix(rng, 6, 1.0);
    // Condition number up to ~1e8 through a graded spectrum.
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s(6);
    for (int i = 0; i < 6; ++i) s[i] = std::pow(10.0, -8.0 * i / 5.0 * (trial % 3) / 2.0);
    M = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const Vec b = Vec::Random(6);
    const Vec x = linear_solve(M, b);
    EXPECT_LE((M * x - b).norm(), 1e-10 * (M.norm() * x.norm() + b.norm()));
  }
}

TEST(Integrator, ConstantField) {
  const PlainField<double> f = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  const Vec c = (Vec(2) << 3, -4).finished();
  const auto tr = integrate_with_events<double>(f, 0.0, 1.0, c, {});
  EXPECT_TRUE(tr.switch_times.empty());
  for (const Vec& x : tr.states) EXPECT_EQ(x, c);
  EXPECT_EQ(tr.size(), 2001u);
}

TEST(Integrator, Exponential) {
  const PlainField<double> f = [](double, const Vec& x) { return x; };
  IntegratorOptions opt;
  opt.step = 1e-3;
  const auto tr = integrate_with_events<double>(f, 0.0, 1.0, Vec::Ones(1), {}, opt);
  EXPECT_NEAR(tr.states.back()[0], std::exp(1.0), 1e-8);
  EXPECT_DOUBLE_EQ(tr.t_end(), 1.0);
}

TEST(Integrator, LinearCrossing) {
  const PlainField<double> f = [](double, const Vec&) { return Vec::Ones(1).eval(); };
  const std::vector<EventSpec<double>> ev{{[](double, const Vec& x) { return x[0]; }, Crossing::up, 0}};
  const auto tr = integrate_with_events<double>(f, 0.0, 1.0, Vec::Constant(1, -0.5), ev);
  ASSERT_EQ(tr.switch_times.size(), 1u);
  EXPECT_NEAR(tr.switch_times[0], 0.5, 1e-10);
  // A sample sits exactly at the event.
  const std::size_t k = tr.switch_samples[0];
  EXPECT_EQ(tr.times[k], tr.switch_times[0]);
}

TEST(Integrator, MatchesMatrixExponential) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat M = random_matrix(rng, 3, 2.0);
    const Vec x0 = Vec::Random(3);
    const PlainField<double> f = [&](double, const Vec& x) { return Vec(M * x); };
    IntegratorOptions opt;
    const auto tr = integrate_with_events<double>(f, 0.0, 1.5, x0, {}, opt);
    EXPECT_LE((tr.states.back() - mat_exp(Mat(M * 1.5)) * x0).norm(), 10 * opt.tolerance);
  }
}

TEST(Integrator, TrajectoryInvariants) {
  // Harmonic oscillator with a sign surface on x: several crossings.
  const PlainField<double> f = [](double, const Vec& x) { return (Vec(2) << x[1], -x[0]).finished(); };
  const std::vector<EventSpec<double>> ev{{[](double, const Vec& x) { return x[0]; }, Crossing::any, 0}};
  const auto tr = integrate_with_events<double>(f, 0.0, 10.0, (Vec(2) << 1, 0).finished(), ev);
  ASSERT_EQ(tr.switch_times.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(tr.switch_times[i], M_PI / 2 + i * M_PI, 1e-7);
  }
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LT(tr.times[i - 1], tr.times[i]);
  EXPECT_EQ(tr.t_start(), 0.0);
  EXPECT_EQ(tr.t_end(), 10.0);
  EXPECT_EQ(tr.size(), 2001u + tr.switch_times.size());
}

TEST(Integrator, DirectionFilter) {
  const PlainField<double> f = [](double, const Vec& x) { return (Vec(2) << x[1], -x[0]).finished(); };
  const std::vector<EventSpec<double>> ev{{[](double, const Vec& x) { return x[0]; }, Crossing::down, 0}};
  const auto tr = integrate_with_events<double>(f, 0.0, 10.0, (Vec(2) << 1, 0).finished(), ev);
  ASSERT_EQ(tr.switch_times.size(), 2u);
  EXPECT_NEAR(tr.switch_times[0], M_PI / 2, 1e-7);
  EXPECT_NEAR(tr.switch_times[1], 5 * M_PI / 2, 1e-7);
}

TEST(Integrator, RefiningToleranceShrinksEventError) {
  // x' = t, x(0) = -0.3: crossing at sqrt(0.6).
  const PlainField<double> f = [](double t, const Vec&) { return Vec::Constant(1, t); };
  const double exact = std::sqrt(0.6);
  double previous = 0.0;
  for (const double tol : {1e-4, 1e-5, 1e-6, 1e-7}) {
    const std::vector<EventSpec<double>> ev{{[](double, const Vec& x) { return x[0]; }, Crossing::any, tol}};
    IntegratorOptions opt;
    opt.step = 0.1;
    const auto tr = integrate_with_events<double>(f, 0.0, 1.0, Vec::Constant(1, -0.3), ev, opt);
    ASSERT_EQ(tr.switch_times.size(), 1u);
    const double err = std::abs(tr.switch_times[0] - exact);
    if (previous > 0) {
      EXPECT_LE(err, previous / 5) << "tol " << tol;
    }
    previous = err;
  }
}

TEST(Integrator, ChatteringGuard) {
  // Regime-dependent field that flips direction at the surface: sliding mode.
  const RegimeField<double> f = [](double, const Vec&, const Regime& r) {
    return Vec::Constant(1, r[0] > 0 ? -1.0 : 1.0);
  };
  const std::vector<EventSpec<double>> ev{{[](double, const Vec& x) { return x[0]; }, Crossing::any, 0}};
  try {
    integrate_with_events<double>(f, 0.0, 1.0, Vec::Constant(1, 0.1), ev);
    FAIL() << "expected chattering guard";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("chattering guard"), std::string::npos);
  }
}

TEST(Integrator, NonFiniteState) {
  const PlainField<double> f = [](double, const Vec& x) { return Vec(x.array().square() * 1e200); };
  EXPECT_THROW(integrate_with_events<double>(f, 0.0, 1.0, Vec::Ones(1), {}), NumericalError);
}

TEST(Integrator, ToleranceRefinesGrid) {
  const PlainField<double> f = [](double, const Vec& x) { return Vec(50.0 * x); };
  IntegratorOptions opt;
  opt.default_steps = 4;
  const auto tr = integrate_with_events<double>(f, 0.0, 0.1, Vec::Ones(1), {}, opt);
  EXPECT_GT(tr.size(), 5u);
  EXPECT_NEAR(tr.states.back()[0], std::exp(5.0), 1e-3 * std::exp(5.0));
}

}  // namespace
}  // namespace jamctl

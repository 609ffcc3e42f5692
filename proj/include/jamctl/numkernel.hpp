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

// Dense numerical kernel: matrix exponential, LU solve and fixed-step RK4
// integration with switching-surface events. Header-only; every routine is
// templated on the scalar type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jamctl/types.hpp"

namespace jamctl {

namespace detail {

template <typename Scalar>
Scalar one_norm(const MatrixX<Scalar>& M) {
  if (M.size() == 0) return Scalar(0);
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename Scalar>
Scalar inf_norm(const MatrixX<Scalar>& M) {
  if (M.size() == 0) return Scalar(0);
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

// Diagonal Padé numerator/denominator pair of order m for exp(M), in the
// even/odd split form U (odd part) and V (even part): r = (V - U)^{-1}(V + U).
template <typename Scalar>
void pade_uv(const MatrixX<Scalar>& M, int order, MatrixX<Scalar>& U,
             MatrixX<Scalar>& V) {
  const auto n = M.rows();
  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> M2 = M * M;
  if (order == 7) {
    static constexpr double b[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                   25200.0,    1512.0,    56.0,      1.0};
    const MatrixX<Scalar> M4 = M2 * M2;
    const MatrixX<Scalar> M6 = M4 * M2;
    U = M * (Scalar(b[7]) * M6 + Scalar(b[5]) * M4 + Scalar(b[3]) * M2 +
             Scalar(b[1]) * I);
    V = Scalar(b[6]) * M6 + Scalar(b[4]) * M4 + Scalar(b[2]) * M2 +
        Scalar(b[0]) * I;
  } else if (order == 9) {
    static constexpr double b[] = {17643225600.0, 8821612800.0, 2075673600.0,
                                   302702400.0,   30270240.0,   2162160.0,
                                   110880.0,      3960.0,       90.0,
                                   1.0};
    const MatrixX<Scalar> M4 = M2 * M2;
    const MatrixX<Scalar> M6 = M4 * M2;
    const MatrixX<Scalar> M8 = M6 * M2;
    U = M * (Scalar(b[9]) * M8 + Scalar(b[7]) * M6 + Scalar(b[5]) * M4 +
             Scalar(b[3]) * M2 + Scalar(b[1]) * I);
    V = Scalar(b[8]) * M8 + Scalar(b[6]) * M6 + Scalar(b[4]) * M4 +
        Scalar(b[2]) * M2 + Scalar(b[0]) * I;
  } else {
    static constexpr double b[] = {64764752532480000.0,
                                   32382376266240000.0,
                                   7771770303897600.0,
                                   1187353796428800.0,
                                   129060195264000.0,
                                   10559470521600.0,
                                   670442572800.0,
                                   33522128640.0,
                                   1323241920.0,
                                   40840800.0,
                                   960960.0,
                                   16380.0,
                                   182.0,
                                   1.0};
    const MatrixX<Scalar> M4 = M2 * M2;
    const MatrixX<Scalar> M6 = M4 * M2;
    const MatrixX<Scalar> inner_u = Scalar(b[13]) * M6 + Scalar(b[11]) * M4 +
                                    Scalar(b[9]) * M2;
    U = M * (M6 * inner_u + Scalar(b[7]) * M6 + Scalar(b[5]) * M4 +
             Scalar(b[3]) * M2 + Scalar(b[1]) * I);
    const MatrixX<Scalar> inner_v = Scalar(b[12]) * M6 + Scalar(b[10]) * M4 +
                                    Scalar(b[8]) * M2;
    V = M6 * inner_v + Scalar(b[6]) * M6 + Scalar(b[4]) * M4 +
        Scalar(b[2]) * M2 + Scalar(b[0]) * I;
  }
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of order 7, 9 or 13 (Higham's backward-error thresholds).
/// Throws NumericalError("matrix exponential overflow") when the result is
/// not representable.
template <typename Derived>
MatrixX<typename Derived::Scalar> mat_exp(const Eigen::MatrixBase<Derived>& M_in) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> M = M_in;
  if (M.rows() != M.cols()) throw ValidationError("mat_exp: matrix must be square");
  if (!M.allFinite()) throw NumericalError("mat_exp: non-finite input");
  const auto n = M.rows();
  if (n == 0) return M;

  const Scalar norm = detail::one_norm<Scalar>(M);
  MatrixX<Scalar> U, V;
  int squarings = 0;
  if (norm <= Scalar(0.9504178996162932)) {
    detail::pade_uv<Scalar>(M, 7, U, V);
  } else if (norm <= Scalar(2.097847961257068)) {
    detail::pade_uv<Scalar>(M, 9, U, V);
  } else {
    constexpr double theta13 = 5.371920351148152;
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / Scalar(theta13)))));
    if (squarings > 1000) throw NumericalError("matrix exponential overflow");
    const MatrixX<Scalar> scaled = M / std::ldexp(Scalar(1), squarings);
    detail::pade_uv<Scalar>(scaled, 13, U, V);
  }
  MatrixX<Scalar> E = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) {
    E = E * E;
    if (!E.allFinite()) throw NumericalError("matrix exponential overflow");
  }
  if (!E.allFinite()) throw NumericalError("matrix exponential overflow");
  return E;
}

/// Solves M x = b by LU with partial pivoting. Throws
/// NumericalError("singular matrix") when a pivot falls below 1e-14 ||M||.
template <typename DerivedM, typename DerivedB>
VectorX<typename DerivedM::Scalar> linear_solve(const Eigen::MatrixBase<DerivedM>& M_in,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedM::Scalar;
  const MatrixX<Scalar> M = M_in;
  if (M.rows() != M.cols()) throw ValidationError("linear_solve: matrix must be square");
  if (b.size() != M.rows()) throw ValidationError("linear_solve: dimension mismatch");
  const Scalar scale = detail::inf_norm<Scalar>(M);
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(M);
  const Scalar min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(scale > 0) || !(min_pivot >= Scalar(1e-14) * scale)) {
    throw NumericalError("singular matrix");
  }
  return lu.solve(VectorX<Scalar>(b));
}

// ---------------------------------------------------------------------------
// Event-driven fixed-step integration.

enum class Crossing { any, up, down };

/// Side of every event surface currently in force: +1 for surface >= 0,
/// -1 otherwise. The vector field is evaluated with the regime frozen over a
/// step, so a step never straddles a switching surface.
using Regime = std::vector<signed char>;

template <typename Scalar>
struct EventSpec {
  std::function<Scalar(Scalar, const VectorX<Scalar>&)> surface;
  Crossing direction = Crossing::any;
  Scalar time_tolerance = 0;  // <= 0 selects 1e-10 * (t1 - t0)
};

template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<VectorX<Scalar>> states;
  // regimes[i] is in force on [times[i], times[i+1]).
  std::vector<Regime> regimes;
  std::vector<Scalar> switch_times;
  std::vector<int> switch_surfaces;
  std::vector<std::size_t> switch_samples;

  std::size_t size() const { return times.size(); }
  Scalar t_start() const { return times.front(); }
  Scalar t_end() const { return times.back(); }
};

struct IntegratorOptions {
  double step = 0;  // <= 0 selects (t1 - t0) / default_steps
  int default_steps = 2000;
  double tolerance = 1e-4;
  std::size_t max_events = 1000;
};

template <typename Scalar>
using RegimeField =
    std::function<VectorX<Scalar>(Scalar, const VectorX<Scalar>&, const Regime&)>;

template <typename Scalar>
using PlainField = std::function<VectorX<Scalar>(Scalar, const VectorX<Scalar>&)>;

namespace detail {

template <typename Scalar>
VectorX<Scalar> rk4_step(const RegimeField<Scalar>& f, Scalar t, const VectorX<Scalar>& x,
                         Scalar h, const Regime& regime) {
  const VectorX<Scalar> k1 = f(t, x, regime);
  const VectorX<Scalar> k2 = f(t + h / 2, x + (h / 2) * k1, regime);
  const VectorX<Scalar> k3 = f(t + h / 2, x + (h / 2) * k2, regime);
  const VectorX<Scalar> k4 = f(t + h, x + h * k3, regime);
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

template <typename Scalar>
Regime regime_at(const std::vector<EventSpec<Scalar>>& events, Scalar t,
                 const VectorX<Scalar>& x) {
  Regime r(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    r[i] = events[i].surface(t, x) >= 0 ? 1 : -1;
  }
  return r;
}

inline bool crossing_matches(Crossing dir, signed char before, signed char after) {
  switch (dir) {
    case Crossing::up: return before < 0 && after > 0;
    case Crossing::down: return before > 0 && after < 0;
    case Crossing::any: return before != after;
  }
  return false;
}

}  // namespace detail

/// Integrates x' = f(t, x, regime) on [t0, t1] with classical RK4 on a fixed
/// grid. Whenever the side of an event surface changes over a step, the
/// crossing is localized by bisection on the step length to within the
/// surface's time tolerance, a sample is inserted exactly at the crossing and
/// integration restarts there in the post-crossing regime.
///
/// `options.tolerance` bounds the global error estimate of the grid: a
/// step-doubling probe at t0 halves the step until the projected error is
/// below it.
template <typename Scalar>
Trajectory<Scalar> integrate_with_events(const RegimeField<Scalar>& field, Scalar t0,
                                         Scalar t1, const VectorX<Scalar>& x0,
                                         const std::vector<EventSpec<Scalar>>& events,
                                         const IntegratorOptions& options = {}) {
  if (!(t1 > t0)) throw ValidationError("integrate_with_events: empty horizon");
  if (!(options.tolerance > 0)) throw ValidationError("integrate_with_events: tolerance must be positive");
  if (!x0.allFinite()) throw NumericalError("non-finite state");

  const Scalar span = t1 - t0;
  const Scalar nominal = options.step > 0 ? Scalar(options.step)
                                          : span / Scalar(std::max(1, options.default_steps));
  long steps = std::max<long>(1, static_cast<long>(std::ceil(span / nominal - Scalar(1e-9))));

  Regime regime = detail::regime_at(events, t0, x0);

  for (int refine = 0; refine < 6; ++refine) {
    const Scalar h = span / Scalar(steps);
    const VectorX<Scalar> full = detail::rk4_step(field, t0, x0, h, regime);
    const VectorX<Scalar> half = detail::rk4_step(
        field, t0 + h / 2, detail::rk4_step(field, t0, x0, h / 2, regime), h / 2, regime);
    const Scalar local = (full - half).template lpNorm<Eigen::Infinity>() / Scalar(15);
    const Scalar scale = Scalar(1) + x0.template lpNorm<Eigen::Infinity>();
    if (!(local * Scalar(steps) > Scalar(options.tolerance) * scale)) break;
    steps *= 2;
  }
  const Scalar h = span / Scalar(steps);

  std::vector<Scalar> tolerances(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    tolerances[i] = events[i].time_tolerance > 0 ? events[i].time_tolerance : Scalar(1e-10) * span;
  }
  const Scalar time_tol = tolerances.empty()
                              ? Scalar(0)
                              : *std::min_element(tolerances.begin(), tolerances.end());

  Trajectory<Scalar> out;
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.regimes.reserve(steps + 1);
  out.times.push_back(t0);
  out.states.push_back(x0);
  out.regimes.push_back(regime);

  auto flipped = [&](Scalar t, const VectorX<Scalar>& x) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if ((events[i].surface(t, x) >= 0 ? 1 : -1) != regime[i]) return true;
    }
    return false;
  };
  auto check_finite = [](const VectorX<Scalar>& x) {
    if (!x.allFinite()) throw NumericalError("non-finite state");
  };

  Scalar t = t0;
  VectorX<Scalar> x = x0;
  std::size_t event_count = 0;
  for (long k = 0; k < steps; ++k) {
    const Scalar target = (k == steps - 1) ? t1 : t0 + Scalar(k + 1) * h;
    for (;;) {
      const Scalar dt = target - t;
      VectorX<Scalar> xn = detail::rk4_step(field, t, x, dt, regime);
      check_finite(xn);
      if (events.empty() || !flipped(target, xn)) {
        t = target;
        x = std::move(xn);
        break;
      }
      // The crossing lies in (t, target]. Bisect with a fixed number of
      // halvings so the bracket width is dt / 2^k <= time_tol.
      Scalar lo = 0, hi = dt;
      const int halvings = std::max(0, static_cast<int>(std::ceil(std::log2(dt / time_tol))));
      for (int it = 0; it < halvings; ++it) {
        const Scalar mid = (lo + hi) / 2;
        if (flipped(t + mid, detail::rk4_step(field, t, x, mid, regime))) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      // Secant through the final bracket, stepping just past the root so the
      // restart lies on the post-crossing side; falls back to the bracket end.
      if (lo < hi) {
        const VectorX<Scalar> x_lo = detail::rk4_step(field, t, x, lo, regime);
        const VectorX<Scalar> x_hi = detail::rk4_step(field, t, x, hi, regime);
        Scalar root = hi;
        for (std::size_t i = 0; i < events.size(); ++i) {
          const Scalar s_hi = events[i].surface(t + hi, x_hi);
          if ((s_hi >= 0 ? 1 : -1) == regime[i]) continue;
          const Scalar s_lo = events[i].surface(t + lo, x_lo);
          if (s_lo != s_hi) root = std::min(root, lo + (hi - lo) * s_lo / (s_lo - s_hi));
        }
        const Scalar candidate = std::min(hi, root + Scalar(1e-3) * (hi - lo));
        if (candidate > lo && candidate < hi &&
            flipped(t + candidate, detail::rk4_step(field, t, x, candidate, regime))) {
          hi = candidate;
        }
      }
      const bool at_grid = !(hi < dt);
      const Scalar te = at_grid ? target : t + hi;
      VectorX<Scalar> xe = at_grid ? xn : detail::rk4_step(field, t, x, hi, regime);
      check_finite(xe);
      const Regime before = regime;
      for (std::size_t i = 0; i < events.size(); ++i) {
        regime[i] = events[i].surface(te, xe) >= 0 ? 1 : -1;
      }
      if (te < t1) {
        for (std::size_t i = 0; i < events.size(); ++i) {
          if (detail::crossing_matches(events[i].direction, before[i], regime[i])) {
            out.switch_times.push_back(te);
            out.switch_surfaces.push_back(static_cast<int>(i));
            out.switch_samples.push_back(out.times.size());
          }
        }
      }
      if (++event_count > options.max_events) {
        throw NumericalError("chattering guard: more than " + std::to_string(options.max_events) +
                             " events");
      }
      t = te;
      x = std::move(xe);
      if (at_grid) break;
      out.times.push_back(t);
      out.states.push_back(x);
      out.regimes.push_back(regime);
    }
    out.times.push_back(t);
    out.states.push_back(x);
    out.regimes.push_back(regime);
  }
  return out;
}

/// Overload for fields that do not depend on the regime.
template <typename Scalar>
Trajectory<Scalar> integrate_with_events(const PlainField<Scalar>& field, Scalar t0, Scalar t1,
                                         const VectorX<Scalar>& x0,
                                         const std::vector<EventSpec<Scalar>>& events,
                                         const IntegratorOptions& options = {}) {
  const RegimeField<Scalar> wrapped = [&field](Scalar t, const VectorX<Scalar>& x,
                                               const Regime&) { return field(t, x); };
  return integrate_with_events<Scalar>(wrapped, t0, t1, x0, events, options);
}

}  // namespace jamctl

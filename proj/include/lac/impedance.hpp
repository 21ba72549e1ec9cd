#pragma once

// Discrete position-based impedance: a per-axis second-order filter that
// turns force errors into position adjustments, plus the outer
// (object-environment) and inner (arm-object) instantiations and the
// action-to-parameter clamping.

#include <algorithm>
#include <array>
#include <tuple>

#include "lac/math.hpp"

namespace lac {

// Diagonal desired inertia (kg), damping (N*s/m) and stiffness (N/m).
struct ImpedanceParams {
  Vec3 m_d{1.0, 1.0, 1.0};
  Vec3 b_d{50.0, 50.0, 50.0};
  Vec3 k_d{500.0, 500.0, 500.0};

  bool positive() const {
    for (int i = 0; i < 3; ++i)
      if (!(m_d[i] > 0.0 && b_d[i] > 0.0 && k_d[i] > 0.0)) return false;
    return true;
  }
};

// Runtime bounds on the adjustable damping/stiffness, applied per axis.
struct ImpedanceBounds {
  double b_min = 5.0;
  double b_max = 200.0;
  double k_min = 50.0;
  double k_max = 2000.0;

  ImpedanceParams midpoint(const Vec3& m_d = {1.0, 1.0, 1.0}) const {
    ImpedanceParams p;
    p.m_d = m_d;
    const double b = 0.5 * (b_min + b_max);
    const double k = 0.5 * (k_min + k_max);
    p.b_d = {b, b, b};
    p.k_d = {k, k, k};
    return p;
  }
};

// Bilinear-discretization weights of M xdd + B xd + K x = E at period t_s:
// w1 = 4M + 2BT + KT^2, w2 = -8M + 2KT^2, w3 = 4M - 2BT + KT^2.
inline std::tuple<Vec3, Vec3, Vec3> filter_weights(const ImpedanceParams& p,
                                                   double t_s) {
  Vec3 w1, w2, w3;
  const double t2 = t_s * t_s;
  for (int i = 0; i < 3; ++i) {
    w1[i] = 4.0 * p.m_d[i] + 2.0 * p.b_d[i] * t_s + p.k_d[i] * t2;
    w2[i] = -8.0 * p.m_d[i] + 2.0 * p.k_d[i] * t2;
    w3[i] = 4.0 * p.m_d[i] - 2.0 * p.b_d[i] * t_s + p.k_d[i] * t2;
  }
  return {w1, w2, w3};
}

// Filter memory: force errors E(t), E(t-1), E(t-2) and adjustments
// dX(t-1), dX(t-2). Histories start at zero; parameters may change between
// samples while the histories are retained.
struct ImpedanceFilterState {
  std::array<Vec3, 3> e_hist{};
  std::array<Vec3, 2> dx_hist{};
  double period = 0.002;

  explicit ImpedanceFilterState(double t_s = 0.002) : period(t_s) {}

  void reset() {
    e_hist = {};
    dx_hist = {};
  }
};

// One filter sample:
// dX(t) = T^2/w1 (E(t) + 2E(t-1) + E(t-2)) - w2/w1 dX(t-1) - w3/w1 dX(t-2)
inline Vec3 impedance_step(ImpedanceFilterState& state, const ImpedanceParams& p,
                           const Vec3& e_now) {
  const auto [w1, w2, w3] = filter_weights(p, state.period);
  const double t2 = state.period * state.period;
  Vec3 dx;
  for (int i = 0; i < 3; ++i) {
    // at entry e_hist = {E(t-1), E(t-2), E(t-3)}, dx_hist = {dX(t-1), dX(t-2)}
    dx[i] = (t2 * (e_now[i] + 2.0 * state.e_hist[0][i] + state.e_hist[1][i]) -
             w2[i] * state.dx_hist[0][i] - w3[i] * state.dx_hist[1][i]) /
            w1[i];
  }
  state.e_hist = {e_now, state.e_hist[0], state.e_hist[1]};
  state.dx_hist = {dx, state.dx_hist[0]};
  return dx;
}

// Outer loop: compliant object position from the environment wrench.
// Positive contact force pushes the commanded object position away from the
// contact.
inline Vec3 apply_outer(const Vec3& x_d_obj, const Vec3& f_env,
                        ImpedanceFilterState& state, const ImpedanceParams& p) {
  return x_d_obj + impedance_step(state, p, f_env);
}

// Inner loop: per-arm compliant target from the force tracking error
// E = F_d - F. A force deficit moves the end-effector to increase contact.
inline Vec3 apply_inner(const Vec3& x_d_arm, const Vec3& f_err,
                        ImpedanceFilterState& state, const ImpedanceParams& p) {
  return x_d_arm + impedance_step(state, p, f_err);
}

// Saturation of a raw policy output into [-1, 1]; idempotent.
inline double clamp_unit(double raw) { return std::clamp(raw, -1.0, 1.0); }

// Affine map of 6 raw values in [-1, 1] onto [min, max] damping (first 3)
// and stiffness (last 3). Desired inertia stays fixed.
inline ImpedanceParams clamp_params(const std::array<double, 6>& raw,
                                    const ImpedanceBounds& bounds,
                                    const Vec3& m_d = {1.0, 1.0, 1.0}) {
  ImpedanceParams p;
  p.m_d = m_d;
  for (int i = 0; i < 3; ++i) {
    const double ub = 0.5 * (clamp_unit(raw[i]) + 1.0);
    const double uk = 0.5 * (clamp_unit(raw[3 + i]) + 1.0);
    p.b_d[i] = bounds.b_min + ub * (bounds.b_max - bounds.b_min);
    p.k_d[i] = bounds.k_min + uk * (bounds.k_max - bounds.k_min);
  }
  return p;
}

// Clamps damping/stiffness values into the bounds; idempotent.
inline ImpedanceParams clamp_to_bounds(const ImpedanceParams& p,
                                       const ImpedanceBounds& bounds) {
  ImpedanceParams out = p;
  for (int i = 0; i < 3; ++i) {
    out.b_d[i] = std::clamp(p.b_d[i], bounds.b_min, bounds.b_max);
    out.k_d[i] = std::clamp(p.k_d[i], bounds.k_min, bounds.k_max);
  }
  return out;
}

}  // namespace lac

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <type_traits>

#include "xiflow/types.hpp"

namespace xiflow::dynamics {

template <int N>
using StateVec = Eigen::Matrix<double, N, 1>;

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  double max_local_error = 0.0;  // largest accepted scaled error estimate
};

struct StepControl {
  double tol = 1e-10;     // atol = rtol = tol
  double hmax = 0.1;      // design cap on the step size
  double hmin = 1e-14;    // below this: StepSizeUnderflow
  double safety = 0.9;
};

namespace detail {
// Observers may return void (always continue) or bool (false = stop).
template <class Observer, int N>
bool observe(Observer& obs, double t, const StateVec<N>& y) {
  if constexpr (std::is_void_v<decltype(obs(t, y))>) {
    obs(t, y);
    return true;
  } else {
    return obs(t, y);
  }
}
}  // namespace detail

/// Embedded Dormand-Prince RK5(4) with PI step-size control and FSAL.
/// Integrates y' = f(t, y) from t0 to t1 (t1 > t0), calling
/// observer(t, y) after the initial state and after every accepted step.
/// An observer returning bool can stop the run early by returning false.
template <int N, class RHS, class Observer>
void integrate_adaptive(RHS&& f, StateVec<N>& y, double t0, double t1,
                        const StepControl& ctrl, StepStats& stats,
                        Observer&& observer) {
  using V = StateVec<N>;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  // b - bhat, the order-4 error weights (e2 = 0).
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double atol = ctrl.tol, rtol = ctrl.tol;
  double t = t0;
  if (!detail::observe<Observer, N>(observer, t, y)) return;
  if (t1 <= t0) return;

  V k1 = f(t, y);
  // Starting step from the local velocity scale; the controller adapts fast.
  double h = ctrl.hmax;
  {
    const double d0 = y.norm(), d1 = k1.norm();
    if (d1 > 1e-30) h = std::min(ctrl.hmax, 0.01 * (d0 + 1.0) / d1);
    h = std::min(h, t1 - t0);
  }

  double err_prev = 1.0;
  while (t < t1) {
    const bool last = t + h >= t1;
    if (last) h = t1 - t;

    const V k2 = f(t + c2 * h, V(y + h * (a21 * k1)));
    const V k3 = f(t + c3 * h, V(y + h * (a31 * k1 + a32 * k2)));
    const V k4 = f(t + c4 * h, V(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const V k5 = f(t + c5 * h,
                   V(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const V k6 = f(t + h, V(y + h * (a61 * k1 + a62 * k2 + a63 * k3 +
                                     a64 * k4 + a65 * k5)));
    const V ynew =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const V k7 = f(t + h, ynew);
    const V errv =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    bool finite = ynew.allFinite() && errv.allFinite();
    if (finite) {
      for (int i = 0; i < N; ++i) {
        const double scale =
            atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double e = errv[i] / scale;
        err += e * e;
      }
      err = std::sqrt(err / N);
    }

    if (finite && err <= 1.0) {
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;  // FSAL
      ++stats.accepted;
      stats.max_local_error = std::max(stats.max_local_error, err * ctrl.tol);
      if (!detail::observe<Observer, N>(observer, t, y)) return;
      // PI controller (Hairer: alpha = 0.17, beta = 0.04).
      double fac = ctrl.safety * std::pow(std::max(err, 1e-10), -0.17) *
                   std::pow(err_prev, 0.04);
      fac = std::clamp(fac, 0.2, 5.0);
      h = std::min(h * fac, ctrl.hmax);
      err_prev = std::max(err, 1e-10);
    } else {
      ++stats.rejected;
      // t and y are unchanged, so k1 stays valid for the retry.
      const double fac =
          finite ? std::clamp(ctrl.safety * std::pow(err, -0.2), 0.1, 0.9)
                 : 0.1;
      h *= fac;
    }
    if (h < ctrl.hmin && t < t1)
      throw StepSizeUnderflow(
          "step size underflow at t = " + std::to_string(t) +
          " (blow-up or extreme stiffness)");
  }
}

}  // namespace xiflow::dynamics

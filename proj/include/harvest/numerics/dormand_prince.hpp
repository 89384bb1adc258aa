#pragma once

#include <algorithm>
#include <cmath>

namespace harvest::numerics {

/// One Dormand-Prince 5(4) step for a scalar ODE y' = f(x, y).
/// Works for negative h (integration towards smaller x).
struct DopriStep {
    double y5;     // 5th-order solution
    double error;  // |y5 - y4|
};

template <typename F>
DopriStep dopri_step(F& f, double x, double y, double h) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double k1 = f(x, y);
    const double k2 = f(x + c2 * h, y + h * a21 * k1);
    const double k3 = f(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = f(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = f(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 =
        f(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(x + h, y5);
    const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    return {y5, std::abs(err)};
}

struct StepControl {
    double abs_tol = 1e-11;
    double rel_tol = 1e-10;
    double min_step = 1e-14;
};

/// Adaptive step from x towards x_target (one accepted step, possibly shorter
/// than requested). Returns false on step-size underflow.
template <typename F>
bool dopri_advance(F& f, double& x, double& y, double& h, double x_target,
                   const StepControl& ctl) {
    const double dir = x_target > x ? 1.0 : -1.0;
    for (;;) {
        double step = dir * std::min(std::abs(h), std::abs(x_target - x));
        if (std::abs(step) < ctl.min_step * std::max(1.0, std::abs(x))) return false;
        const auto s = dopri_step(f, x, y, step);
        const double scale = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y), std::abs(s.y5));
        const double ratio = s.error / scale;
        if (std::isfinite(s.y5) && ratio <= 1.0) {
            const bool last = std::abs(x_target - (x + step)) <= 0.0;
            x = last ? x_target : x + step;
            y = s.y5;
            const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
            h = dir * std::abs(step) * grow;
            return true;
        }
        const double shrink =
            std::isfinite(ratio) ? std::clamp(0.9 * std::pow(ratio, -0.25), 0.1, 0.9) : 0.1;
        h = step * shrink;
    }
}

}  // namespace harvest::numerics

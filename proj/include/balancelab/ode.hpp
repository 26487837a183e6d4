#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "balancelab/errors.hpp"
#include "balancelab/matrix.hpp"

namespace balancelab {

struct OdeIntegrationParams {
    double step_tol = 1e-8;         // per-entry local error control
    double blowup_threshold = 1e9;  // stop once any |entry| reaches this
    double horizon = 100.0;         // max integration time
    bool zero_diagonal = false;     // mask the derivative's diagonal (off-diagonal dynamics only)
};

struct OdeResult {
    std::vector<double> times;   // accepted sample times, strictly increasing, starts at 0
    std::vector<Matrix> states;  // states at those times
    bool blew_up = false;
    double t_sing = std::numeric_limits<double>::infinity();
    Matrix terminal;             // final accepted state
};

/// Adaptive integration stalled: step size underflowed before the blow-up
/// threshold was reached. Carries the last accepted state.
class IntegrationStallError : public NumericalError {
public:
    IntegrationStallError(Matrix state, double time)
        : NumericalError("integrate_z_squared: step size underflow at t = " + std::to_string(time)),
          last_state(std::move(state)),
          last_time(time) {}

    Matrix last_state;
    double last_time;
};

namespace detail {

inline Matrix z_squared_rhs(const Matrix& z, bool zero_diagonal) {
    Matrix f = z.multiply(z);
    if (zero_diagonal)
        for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) = 0.0;
    return f;
}

// Least-squares straight-line extrapolation of y = 1 / max|entry| to zero,
// over the last (up to) 5 accepted samples. Near a rational blow-up 1/z is
// asymptotically linear in t, so the root estimates the singularity time.
inline double extrapolate_singularity(const std::vector<double>& times,
                                      const std::vector<Matrix>& states) {
    const std::size_t count = std::min<std::size_t>(5, times.size());
    const std::size_t start = times.size() - count;
    if (count < 2) return times.back();
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = start; i < times.size(); ++i) {
        const double t = times[i];
        const double y = 1.0 / states[i].max_abs();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double nd = static_cast<double>(count);
    const double denom = nd * stt - st * st;
    if (denom == 0.0) return times.back();
    const double slope = (nd * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / nd;
    if (slope >= 0.0) return times.back();
    return -intercept / slope;
}

} // namespace detail

/// Integrate dZ/dt = Z^2 from Z(0) = z0 with an embedded Cash-Karp 4/5
/// Runge-Kutta pair and per-entry max-norm error control. Stops at the first
/// accepted step where any |entry| >= blowup_threshold, or at the horizon.
inline OdeResult integrate_z_squared(const Matrix& z0, const OdeIntegrationParams& params = {}) {
    if (z0.rows() != z0.cols()) throw UsageError("integrate_z_squared: matrix must be square");
    if (params.step_tol <= 0.0) throw UsageError("integrate_z_squared: step_tol must be positive");
    if (params.horizon <= 0.0) throw UsageError("integrate_z_squared: horizon must be positive");
    if (params.blowup_threshold <= z0.max_abs())
        throw UsageError("integrate_z_squared: blow-up threshold must exceed max|Z0|");

    // Cash-Karp tableau.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 3.0 / 10, a42 = -9.0 / 10, a43 = 6.0 / 5;
    static constexpr double a51 = -11.0 / 54, a52 = 5.0 / 2, a53 = -70.0 / 27, a54 = 35.0 / 27;
    static constexpr double a61 = 1631.0 / 55296, a62 = 175.0 / 512, a63 = 575.0 / 13824,
                            a64 = 44275.0 / 110592, a65 = 253.0 / 4096;
    static constexpr double b1 = 37.0 / 378, b3 = 250.0 / 621, b4 = 125.0 / 594, b6 = 512.0 / 1771;
    static constexpr double e1 = b1 - 2825.0 / 27648, e3 = b3 - 18575.0 / 48384,
                            e4 = b4 - 13525.0 / 55296, e5 = -277.0 / 14336, e6 = b6 - 1.0 / 4;

    const std::size_t n = z0.rows();
    const bool mask = params.zero_diagonal;

    auto combine = [n](const Matrix& base, std::initializer_list<std::pair<double, const Matrix*>> terms,
                       double h) {
        Matrix out = base;
        for (const auto& [coef, mat] : terms) {
            const double hc = h * coef;
            for (std::size_t i = 0; i < n * n; ++i) out.raw()[i] += hc * mat->raw()[i];
        }
        return out;
    };

    OdeResult result;
    result.times.push_back(0.0);
    result.states.push_back(z0);

    Matrix z = z0;
    double t = 0.0;
    double deriv_scale = std::max(detail::z_squared_rhs(z0, mask).max_abs(), 1e-12);
    double h = std::min({0.01 / deriv_scale, params.horizon, 1.0});

    while (t < params.horizon) {
        h = std::min(h, params.horizon - t);
        const Matrix k1 = detail::z_squared_rhs(z, mask);
        const Matrix k2 = detail::z_squared_rhs(combine(z, {{a21, &k1}}, h), mask);
        const Matrix k3 = detail::z_squared_rhs(combine(z, {{a31, &k1}, {a32, &k2}}, h), mask);
        const Matrix k4 = detail::z_squared_rhs(combine(z, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h), mask);
        const Matrix k5 =
            detail::z_squared_rhs(combine(z, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h), mask);
        const Matrix k6 = detail::z_squared_rhs(
            combine(z, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h), mask);

        Matrix z_next = combine(z, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b6, &k6}}, h);

        double err_ratio = 0.0;
        for (std::size_t i = 0; i < n * n; ++i) {
            const double err = h * (e1 * k1.raw()[i] + e3 * k3.raw()[i] + e4 * k4.raw()[i] +
                                    e5 * k5.raw()[i] + e6 * k6.raw()[i]);
            const double scale = params.step_tol * (1.0 + std::abs(z_next.raw()[i]));
            err_ratio = std::max(err_ratio, std::abs(err) / scale);
        }

        if (err_ratio <= 1.0 && std::isfinite(z_next.max_abs())) {
            t += h;
            z = std::move(z_next);
            result.times.push_back(t);
            result.states.push_back(z);
            if (z.max_abs() >= params.blowup_threshold) {
                result.blew_up = true;
                break;
            }
        }

        double factor;
        if (!std::isfinite(err_ratio))
            factor = 0.2;  // overflow in a stage: retry much smaller
        else if (err_ratio == 0.0)
            factor = 5.0;
        else
            factor = std::clamp(0.9 * std::pow(err_ratio, -0.2), 0.2, 5.0);
        h *= factor;
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationStallError(z, t);
    }

    result.terminal = result.states.back();
    if (result.blew_up) result.t_sing = detail::extrapolate_singularity(result.times, result.states);
    return result;
}

} // namespace balancelab

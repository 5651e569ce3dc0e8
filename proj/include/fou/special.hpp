#pragma once

#include <cmath>
#include <stdexcept>

#include "fou/detail/power_quad.hpp"
#include "fou/grid.hpp"

namespace fou {

// Gamma function on the positive half line.
inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

// Beta via log-gamma so large arguments do not overflow.
inline double beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("beta_fn: arguments must be positive");
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

namespace detail {
inline void check_order(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("fractional order must lie in (0,1)");
}
}  // namespace detail

// Right-sided fractional integral of order alpha on [0, T]:
//   (I g)(t) = (1/Gamma(alpha)) ∫_t^T g(s) (s - t)^{alpha-1} ds,
// with g piecewise linear and the power factor integrated exactly per cell.
// The value at t = T is 0.
inline GridFunction frac_integral_right(const GridFunction& g, double alpha) {
    detail::check_order(alpha);
    const Grid& gr = g.grid;
    const std::size_t n = gr.steps;
    GridFunction out(gr);
    const double inv_gamma = 1.0 / gamma_fn(alpha);
    // accumulate from the right: out[i] = out over [t_i, T]
    // each cell contributes to all t_i <= t_cell, so loop per evaluation point
    for (std::size_t i = 0; i < n; ++i) {
        const double t = gr.node(i);
        double acc = 0.0;
        for (std::size_t k = i; k < n; ++k)
            acc += detail::cell_power(gr.node(k) - t, gr.node(k + 1) - t,
                                      g[k], g[k + 1], alpha - 1.0);
        out[i] = inv_gamma * acc;
    }
    out[n] = 0.0;
    return out;
}

// Right-sided fractional derivative of order alpha on [0, T], Marchaud form:
//   (D g)(t) = (1/Gamma(1-alpha)) [ g(t)(T-t)^{-alpha}
//              + alpha ∫_t^T (g(t) - g(s))(s - t)^{-alpha-1} ds ].
// Left inverse of frac_integral_right on grids of smooth functions.  The
// boundary term diverges at t = T; the last node is filled by linear
// extrapolation and is excluded from convergence guarantees.
inline GridFunction frac_derivative_right(const GridFunction& g, double alpha) {
    detail::check_order(alpha);
    const Grid& gr = g.grid;
    const std::size_t n = gr.steps;
    GridFunction out(gr);
    const double c = 1.0 / gamma_fn(1.0 - alpha);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = gr.node(i);
        const double gt = g[i];
        double acc = 0.0;
        for (std::size_t k = i; k < n; ++k)
            acc += detail::cell_power(gr.node(k) - t, gr.node(k + 1) - t,
                                      gt - g[k], gt - g[k + 1], -alpha - 1.0);
        out[i] = c * (gt * std::pow(gr.horizon - t, -alpha) + alpha * acc);
    }
    out[n] = 2.0 * out[n - 1] - out[n - 2];
    return out;
}

}  // namespace fou

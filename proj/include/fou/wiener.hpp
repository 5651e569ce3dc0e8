#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fou/grid.hpp"
#include "fou/kernels.hpp"
#include "fou/simulation.hpp"
#include "fou/transfer_ops.hpp"

namespace fou {

struct WienerIntegralResult {
    double value = 0.0;
    std::optional<double> variance_estimate;  // squared L2/Gram norm of the integrand
    ProcessKind integrand_target = ProcessKind::brownian;
};

// Left-point Riemann-Stieltjes sum  sum_j f(t_j) (x_{j+1} - x_j).
inline WienerIntegralResult integrate(const Integrand& f, const Path& x) {
    if (f.grid() != x.grid) throw std::invalid_argument("integrate: grid mismatch");
    const std::size_t n = x.grid.steps;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += f.f[j] * (x.values[j + 1] - x.values[j]);
    WienerIntegralResult r;
    r.value = acc;
    r.integrand_target = f.target;
    return r;
}

// Integration-by-parts form for differentiable integrands:
//   f(T) x_T - f(0) x_0 - ∫_0^T x f' dt,
// with f' taken cellwise from the piecewise-linear samples and the Lebesgue
// integral by the trapezoid rule.
inline WienerIntegralResult integrate_parts(const GridFunction& f, const Path& x) {
    if (f.grid != x.grid) throw std::invalid_argument("integrate_parts: grid mismatch");
    const std::size_t n = x.grid.steps;
    const double dt = x.grid.dt();
    double lebesgue = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double slope = (f[j + 1] - f[j]) / dt;
        lebesgue += slope * 0.5 * (x.values[j] + x.values[j + 1]) * dt;
    }
    WienerIntegralResult r;
    r.value = f[n] * x.values[n] - f[0] * x.values[0] - lebesgue;
    return r;
}

namespace detail {

// Projection of a transformed integrand onto the increment cells: trapezoidal
// node means with the known power-law behavior integrated exactly in the end
// cells (exponents of the value near t = 0 and t = T).
inline std::vector<double> cell_average_weights(const GridFunction& f, double left_exp,
                                                double right_exp) {
    const Grid& gr = f.grid;
    const std::size_t n = gr.steps;
    const double dt = gr.dt();
    std::vector<double> c(n);
    for (std::size_t l = 0; l < n; ++l) c[l] = 0.5 * (f[l] + f[l + 1]);
    if (left_exp != 0.0) {
        const double S = f[1] * std::pow(gr.node(1), -left_exp);
        c[0] = S * std::pow(dt, left_exp) / (left_exp + 1.0);
    }
    if (right_exp != 0.0) {
        const double S = f[n - 1] * std::pow(dt, -right_exp);
        c[n - 1] = S * std::pow(dt, right_exp) / (right_exp + 1.0);
    }
    return c;
}

inline double weighted_increment_sum(std::span<const double> w, const Path& x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * (x.values[j + 1] - x.values[j]);
    return acc;
}

}  // namespace detail

// RHS of the extended transfer identity ∫ g dU = ∫ (L* g) dW, evaluated as a
// cell-projected sum against the increments of w.  Indicator integrands route
// through the KernelMatrix row (identical cell-average convention).
inline WienerIntegralResult transfer_integral_to_bm(const Integrand& g, const FouParams& p,
                                                    const Path& w, const LStarCache& cache) {
    p.validate();
    expect_kind(w, ProcessKind::brownian, "transfer_integral_to_bm");
    if (g.grid() != w.grid) throw std::invalid_argument("transfer_integral_to_bm: grid mismatch");
    WienerIntegralResult r;
    r.integrand_target = ProcessKind::fou;
    const double H = p.hurst;
    if (g.kind == Integrand::Kind::indicator) {
        KernelMatrix M = discretize(KernelRole::L, p, w.grid);
        const std::size_t row = w.grid.index_of(g.cutoff);
        std::span<const double> weights(M.weights.data() + row * w.grid.steps, row);
        r.value = detail::weighted_increment_sum(weights, w);
        return r;
    }
    GridFunction lsg = apply_L_star(g, p, cache);
    const double eL = (H == 0.5) ? 0.0 : -std::abs(H - 0.5);
    const double eR = (H == 0.5) ? 0.0 : H - 0.5;
    auto wts = detail::cell_average_weights(lsg, eL, eR);
    r.value = detail::weighted_increment_sum(wts, w);
    r.variance_estimate = l2_norm_sq(lsg, eL, eR);
    return r;
}

// RHS of ∫ f dW = ∫ (L*)^{-1} f dU on the same realization.
inline WienerIntegralResult transfer_integral_to_fou(const Integrand& f, const FouParams& p,
                                                     const Path& u) {
    p.validate();
    expect_kind(u, ProcessKind::fou, "transfer_integral_to_fou");
    if (f.grid() != u.grid) throw std::invalid_argument("transfer_integral_to_fou: grid mismatch");
    WienerIntegralResult r;
    r.integrand_target = ProcessKind::brownian;
    const double H = p.hurst;
    if (f.kind == Integrand::Kind::indicator) {
        KernelMatrix M = discretize(KernelRole::L_inv, p, u.grid);
        const std::size_t row = u.grid.index_of(f.cutoff);
        std::span<const double> weights(M.weights.data() + row * u.grid.steps, row);
        r.value = detail::weighted_increment_sum(weights, u);
        return r;
    }
    GridFunction linv = apply_L_star_inv(f, p);
    const double e = (H == 0.5) ? 0.0 : 0.5 - H;
    auto wts = detail::cell_average_weights(linv, e, e);
    r.value = detail::weighted_increment_sum(wts, u);
    return r;
}

// fBm analogue ∫ g dB = ∫ (K* g) dW.
inline WienerIntegralResult transfer_integral_to_bm(const Integrand& g, double hurst,
                                                    const Path& w) {
    check_hurst(hurst);
    expect_kind(w, ProcessKind::brownian, "transfer_integral_to_bm");
    WienerIntegralResult r;
    r.integrand_target = ProcessKind::fbm;
    if (g.kind == Integrand::Kind::indicator) {
        KernelMatrix M = discretize(KernelRole::K, hurst, w.grid);
        const std::size_t row = w.grid.index_of(g.cutoff);
        std::span<const double> weights(M.weights.data() + row * w.grid.steps, row);
        r.value = detail::weighted_increment_sum(weights, w);
        return r;
    }
    GridFunction ksg = apply_K_star(g, hurst);
    const double eL = (hurst == 0.5) ? 0.0 : -std::abs(hurst - 0.5);
    const double eR = (hurst == 0.5) ? 0.0 : hurst - 0.5;
    auto wts = detail::cell_average_weights(ksg, eL, eR);
    r.value = detail::weighted_increment_sum(wts, w);
    r.variance_estimate = l2_norm_sq(ksg, eL, eR);
    return r;
}

}  // namespace fou

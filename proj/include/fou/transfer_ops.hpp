#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fou/detail/power_quad.hpp"
#include "fou/grid.hpp"
#include "fou/kernels.hpp"
#include "fou/params.hpp"
#include "fou/special.hpp"

namespace fou {

// Wiener integrand on the grid: either piecewise-linear node samples or an
// exact indicator 1_{[0,cutoff)} (kept exact so operator outputs coincide
// with kernel sections).
struct Integrand {
    enum class Kind { samples, indicator };

    Kind kind = Kind::samples;
    GridFunction f;
    double cutoff = 0.0;          // indicator only
    ProcessKind target = ProcessKind::brownian;

    static Integrand from_samples(GridFunction g, ProcessKind tgt) {
        if (!g.all_finite()) throw std::domain_error("Integrand: non-finite values");
        Integrand out;
        out.kind = Kind::samples;
        out.f = std::move(g);
        out.target = tgt;
        return out;
    }

    static Integrand step(const Grid& grid, double cutoff, ProcessKind tgt) {
        Integrand out;
        out.kind = Kind::indicator;
        out.f = GridFunction(grid);
        for (std::size_t i = 0; i < grid.nodes(); ++i)
            out.f[i] = grid.node(i) < cutoff ? 1.0 : 0.0;
        out.cutoff = cutoff;
        out.target = tgt;
        return out;
    }

    const Grid& grid() const { return f.grid; }
};

namespace detail {

// (K* g)(x) or ((K*)^{-1} g)(x) for piecewise-linear g, 0 < x < T.
// The weighted integrand is phi(u) = u^{H-1/2} g(u), product-sampled at the
// grid nodes.
inline double k_star_point(const GridFunction& g, double hurst, double x, bool inverse) {
    const Grid& gr = g.grid;
    const double H = hurst;
    const double T = gr.horizon;
    if (H == 0.5) return g.at(x);
    const double ch = c_hat(H);
    const double pref = inverse ? std::pow(x, 0.5 - H) / ch : c_hat(H) * std::pow(x, 0.5 - H);
    const double order = inverse ? (0.5 - H) : (H - 0.5);

    // local node list starting exactly at x
    const double dt = gr.dt();
    auto first = static_cast<std::size_t>(std::floor(x / dt)) + 1;
    if (first > gr.steps) first = gr.steps;
    std::vector<double> nodes;
    std::vector<double> phi;
    nodes.reserve(gr.steps - first + 2);
    phi.reserve(nodes.capacity());
    nodes.push_back(x);
    phi.push_back(std::pow(x, H - 0.5) * g.at(x));
    for (std::size_t l = first; l <= gr.steps; ++l) {
        if (gr.node(l) <= x) continue;
        nodes.push_back(gr.node(l));
        phi.push_back(std::pow(gr.node(l), H - 0.5) * g[l]);
    }

    if (order > 0.0) {
        const double I = pl_power_integral(nodes, phi, x, order - 1.0);
        return pref * I / gamma_fn(order);
    }
    // Marchaud form of the fractional derivative
    const double gam = -order;
    std::vector<double> diff(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) diff[k] = phi[0] - phi[k];
    const double I = pl_power_integral(nodes, diff, x, -gam - 1.0);
    return pref * (phi[0] * std::pow(T - x, -gam) + gam * I) / gamma_fn(1.0 - gam);
}

}  // namespace detail

// Operator evaluation on the whole grid. Where the pointwise formula is
// singular the evaluation point is substituted half a cell inward: node 0 for
// H > 1/2 (prefactor), node n for the fractional-derivative branch (boundary
// term). Left-point integration never reads node n, so the substitution only
// keeps values finite.
inline GridFunction apply_K_star_impl(const Integrand& g, double hurst, bool inverse) {
    check_hurst(hurst);
    const Grid& gr = g.grid();
    GridFunction out(gr);

    if (g.kind == Integrand::Kind::indicator) {
        // sections of the corresponding kernel, one code path with kernel_K
        const double v = g.cutoff;
        for (std::size_t i = 0; i < gr.nodes(); ++i) {
            double s = gr.node(i);
            if (s >= v) {
                out[i] = 0.0;
                continue;
            }
            if (i == 0 && hurst != 0.5) s = 0.5 * gr.dt();
            if (s >= v) {
                out[i] = 0.0;
                continue;
            }
            out[i] = inverse ? kernel_K_inv(hurst, v, s) : kernel_K(hurst, v, s);
        }
        return out;
    }

    const double H = hurst;
    if (H == 0.5) {
        out.values = g.f.values;
        return out;
    }
    const bool marchaud = inverse ? (H > 0.5) : (H < 0.5);
    const std::size_t n = gr.steps;
    for (std::size_t i = 0; i <= n; ++i) {
        double x = gr.node(i);
        if (i == 0) {
            x = 0.5 * gr.dt();  // pointwise formulas are singular at t = 0
        } else if (i == n) {
            if (!marchaud) {
                out[i] = 0.0;
                continue;
            }
            x = gr.horizon - 0.5 * gr.dt();
        }
        out[i] = detail::k_star_point(g.f, H, x, inverse);
    }
    return out;
}

inline GridFunction apply_K_star(const Integrand& g, double hurst) {
    return apply_K_star_impl(g, hurst, false);
}

inline GridFunction apply_K_star_inv(const Integrand& g, double hurst) {
    return apply_K_star_impl(g, hurst, true);
}

namespace detail {

// tail[i] = ∫_{t_i}^T f dv, trapezoid plus an exact-power last cell when the
// integrand behaves like (T-v)^{sing_exp} there.
inline std::vector<double> tail_integral(const GridFunction& f, double sing_exp) {
    const Grid& gr = f.grid;
    const std::size_t n = gr.steps;
    const double dt = gr.dt();
    std::vector<double> tail(n + 1, 0.0);
    double last;
    if (sing_exp == 0.0) {
        last = 0.5 * (f[n - 1] + f[n]) * dt;
    } else {
        const double S = f[n - 1] * std::pow(dt, -sing_exp);  // T - t_{n-1} = dt
        last = S * std::pow(dt, sing_exp + 1.0) / (sing_exp + 1.0);
    }
    tail[n - 1] = last;
    for (std::size_t i = n - 1; i-- > 0;)
        tail[i] = tail[i + 1] + 0.5 * (f[i] + f[i + 1]) * dt;
    return tail;
}

}  // namespace detail

// Kernel sections L(t_l, t_j) cached once per (params, grid); column j = 0 is
// evaluated at s = dt/2 (the node itself is singular).
struct LStarCache {
    Grid grid;
    FouParams params;
    std::vector<double> lsec;  // (n+1) x (n+1), entry(l, j) for l > j

    LStarCache(const Grid& g, const FouParams& p) : grid(g), params(p) {
        const std::size_t n = g.steps;
        lsec.assign((n + 1) * (n + 1), 0.0);
        std::vector<double> nodes;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = (j == 0) ? 0.5 * g.dt() : g.node(j);
            nodes.clear();
            for (std::size_t l = j + 1; l <= n; ++l) nodes.push_back(g.node(l));
            auto sec = detail::kernel_L_section(p, s, nodes);
            for (std::size_t l = 0; l < sec.size(); ++l) lsec[(j + 1 + l) * (n + 1) + j] = sec[l];
        }
    }

    double operator()(std::size_t l, std::size_t j) const {
        return lsec[l * (grid.steps + 1) + j];
    }
};

// L*[g](t) = sigma (K* g)(t) - theta ∫_t^T g(v) L(v, t) dv.
inline GridFunction apply_L_star(const Integrand& g, const FouParams& p, const LStarCache& cache) {
    p.validate();
    const Grid& gr = g.grid();
    if (gr != cache.grid) throw std::invalid_argument("apply_L_star: cache grid mismatch");

    if (g.kind == Integrand::Kind::indicator) {
        GridFunction out(gr);
        const double v = g.cutoff;
        for (std::size_t i = 0; i < gr.nodes(); ++i) {
            double s = gr.node(i);
            if (i == 0 && p.hurst != 0.5) s = 0.5 * gr.dt();
            out[i] = s < v ? kernel_L(p, v, s) : 0.0;
        }
        return out;
    }

    GridFunction out = apply_K_star(g, p.hurst);
    for (auto& v : out.values) v *= p.sigma;
    const std::size_t n = gr.steps;
    const double dt = gr.dt();
    const double H = p.hurst;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        // first cell [t_j, t_{j+1}]: L(v, t_j) ~ S (v - t_j)^{H-1/2} for H < 1/2
        if (H < 0.5) {
            const double S0 = p.sigma * c_H(H) * g.f[j];
            const double S1 = g.f[j + 1] * cache(j + 1, j) * std::pow(dt, 0.5 - H);
            acc += detail::cell_power(0.0, dt, S0, S1, H - 0.5);
        } else if (H == 0.5) {
            acc += 0.5 * (g.f[j] * p.sigma + g.f[j + 1] * cache(j + 1, j)) * dt;
        } else {
            acc += 0.5 * g.f[j + 1] * cache(j + 1, j) * dt;  // L(t_j+, t_j) = 0
        }
        for (std::size_t l = j + 1; l < n; ++l)
            acc += 0.5 * (g.f[l] * cache(l, j) + g.f[l + 1] * cache(l + 1, j)) * dt;
        out[j] -= p.theta * acc;
    }
    return out;
}

// (L*)^{-1}[g](t) = (1/sigma) ((K*)^{-1} g)(t) + (theta/sigma) ∫_t^T ((K*)^{-1} g)(v) dv.
inline GridFunction apply_L_star_inv(const Integrand& g, const FouParams& p) {
    p.validate();
    const Grid& gr = g.grid();

    if (g.kind == Integrand::Kind::indicator) {
        GridFunction out(gr);
        const double v = g.cutoff;
        for (std::size_t i = 0; i < gr.nodes(); ++i) {
            double s = gr.node(i);
            if (i == 0 && p.hurst != 0.5) s = 0.5 * gr.dt();
            out[i] = s < v ? kernel_L_inv(p, v, s) : 0.0;
        }
        return out;
    }

    GridFunction h = apply_K_star_inv(g, p.hurst);
    const double sing = (p.hurst == 0.5) ? 0.0 : 0.5 - p.hurst;
    auto tail = detail::tail_integral(h, sing);
    GridFunction out(gr);
    for (std::size_t i = 0; i < gr.nodes(); ++i)
        out[i] = h[i] / p.sigma + (p.theta / p.sigma) * tail[i];
    return out;
}

inline GridFunction apply_L_star_inv(const Integrand& g, const FouParams& p,
                                     const LStarCache&) {
    return apply_L_star_inv(g, p);
}

// ∫_0^T f^2 dt with power-law end cells: f ~ t^{left_exp} near 0 and
// f ~ (T-t)^{right_exp} near T (exponents of the VALUE, not its square).
inline double l2_norm_sq(const GridFunction& f, double left_exp, double right_exp) {
    const Grid& gr = f.grid;
    const std::size_t n = gr.steps;
    const double dt = gr.dt();
    double acc = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k)
        acc += 0.5 * (f[k] * f[k] + f[k + 1] * f[k + 1]) * dt;
    // first cell
    if (left_exp == 0.0) {
        acc += 0.5 * (f[0] * f[0] + f[1] * f[1]) * dt;
    } else {
        const double e2 = 2.0 * left_exp;
        const double S2 = f[1] * f[1] * std::pow(gr.node(1), -e2);
        acc += S2 * std::pow(dt, e2 + 1.0) / (e2 + 1.0);
    }
    // last cell
    if (right_exp == 0.0) {
        acc += 0.5 * (f[n - 1] * f[n - 1] + f[n] * f[n]) * dt;
    } else {
        const double e2 = 2.0 * right_exp;
        const double S2 = f[n - 1] * f[n - 1] * std::pow(dt, -e2);
        acc += S2 * std::pow(dt, e2 + 1.0) / (e2 + 1.0);
    }
    return acc;
}

}  // namespace fou

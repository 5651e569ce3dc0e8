#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fou/detail/power_quad.hpp"
#include "fou/grid.hpp"
#include "fou/params.hpp"
#include "fou/special.hpp"

namespace fou {

// Normalization tying the Volterra kernel to the fBm covariance
// R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H})/2 through the Gram identity
// ∫_0^{t∧s} K_H(t,u) K_H(s,u) du = R_H(t,s).
inline double c_H(double hurst) {
    check_hurst(hurst);
    return std::sqrt(2.0 * hurst * gamma_fn(1.5 - hurst) /
                     (gamma_fn(hurst + 0.5) * gamma_fn(2.0 - 2.0 * hurst)));
}

inline double fbm_covariance(double hurst, double t, double s) {
    return 0.5 * (std::pow(t, 2.0 * hurst) + std::pow(s, 2.0 * hurst) -
                  std::pow(std::abs(t - s), 2.0 * hurst));
}

namespace detail {

// Effective constant in front of the Gamma-normalized fractional integral;
// equal to c_H * Gamma(H + 1/2) so that all closed forms below satisfy the
// Gram identity with the public c_H.
inline double c_hat(double hurst) { return c_H(hurst) * gamma_fn(hurst + 0.5); }

inline void check_section_args(double t, double s) {
    if (!(s > 0.0)) throw std::domain_error("kernel: evaluation at s <= 0 is singular");
    if (!(t > s)) throw std::domain_error("kernel section: need t > s");
}

// K_H(t_k, s) for every node t_k in `nodes` (increasing, nodes[0] > s > 0).
inline std::vector<double> kernel_K_section(double hurst, double s,
                                            std::span<const double> nodes) {
    const double H = hurst;
    if (H == 0.5) return std::vector<double>(nodes.size(), 1.0);
    const double c = c_H(H);
    if (H > 0.5) {
        auto I = sweep_power_integral(s, nodes, H - 0.5, H - 1.5);
        const double pre = c * (H - 0.5) * std::pow(s, 0.5 - H);
        for (auto& v : I) v *= pre;
        return I;
    }
    auto I = sweep_power_integral(s, nodes, H - 1.5, H - 0.5);
    std::vector<double> out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double t = nodes[k];
        out[k] = c * (std::pow(t / s, H - 0.5) * std::pow(t - s, H - 0.5) -
                      (H - 0.5) * std::pow(s, 0.5 - H) * I[k]);
    }
    return out;
}

// K_H^{-1}(t_k, s), the inverse-transfer kernel sections.
inline std::vector<double> kernel_K_inv_section(double hurst, double s,
                                                std::span<const double> nodes) {
    const double H = hurst;
    if (H == 0.5) return std::vector<double>(nodes.size(), 1.0);
    const double ch = c_hat(H);
    if (H < 0.5) {
        auto I = sweep_power_integral(s, nodes, H - 0.5, -H - 0.5);
        const double pre = std::pow(s, 0.5 - H) / (ch * gamma_fn(0.5 - H));
        for (auto& v : I) v *= pre;
        return I;
    }
    auto I = sweep_power_integral(s, nodes, H - 1.5, 0.5 - H);
    std::vector<double> out(nodes.size());
    const double pre = 1.0 / (ch * gamma_fn(1.5 - H));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double t = nodes[k];
        out[k] = pre * (std::pow(t / s, H - 0.5) * std::pow(t - s, 0.5 - H) -
                        (H - 0.5) * std::pow(s, 0.5 - H) * I[k]);
    }
    return out;
}

// J(t_k, s) = ∫_s^{t_k} K_H(u, s) e^{theta u} du along the node sweep.
// Writes K(u,s) = S(u) (u-s)^{H-1/2} with the slow factor S piecewise linear
// (S(s+) = c_H) and the power integrated exactly per cell.
inline std::vector<double> exp_kernel_integral_section(double hurst, double theta, double s,
                                                       std::span<const double> nodes,
                                                       std::span<const double> ksec) {
    const double H = hurst;
    const double e = H - 0.5;
    std::vector<double> out(nodes.size());
    double w0 = 0.0;
    double f0 = c_H(H) * std::exp(theta * s);
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double w1 = nodes[k] - s;
        const double f1 = ksec[k] * std::pow(w1, -e) * std::exp(theta * nodes[k]);
        acc += cell_power(w0, w1, f0, f1, e);
        out[k] = acc;
        w0 = w1;
        f0 = f1;
    }
    return out;
}

inline std::vector<double> kernel_L_section(const FouParams& p, double s,
                                            std::span<const double> nodes) {
    if (p.hurst == 0.5) {
        std::vector<double> out(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k)
            out[k] = p.sigma * std::exp(-p.theta * (nodes[k] - s));
        return out;
    }
    auto ks = kernel_K_section(p.hurst, s, nodes);
    auto js = exp_kernel_integral_section(p.hurst, p.theta, s, nodes, ks);
    std::vector<double> out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        out[k] = p.sigma * ks[k] - p.theta * p.sigma * std::exp(-p.theta * nodes[k]) * js[k];
    return out;
}

// Two-sided graded partition of [a, b]: dense at both endpoints.
inline std::vector<double> smoothstep_partition(double a, double b, std::size_t m) {
    std::vector<double> out(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(m);
        out[i] = a + (b - a) * x * x * (3.0 - 2.0 * x);
    }
    out.front() = a;
    out.back() = b;
    return out;
}

}  // namespace detail

// --- pointwise kernels ------------------------------------------------------

// Molchan-Golosov kernel K_H(t, s); zero for s >= t, diverging at s = 0 when
// H != 1/2 (a domain error is raised there).
inline double kernel_K(double hurst, double t, double s) {
    check_hurst(hurst);
    if (s >= t) return 0.0;
    if (hurst == 0.5) return 1.0;
    detail::check_section_args(t, s);
    return detail::kernel_K_section(hurst, s, std::span<const double>(&t, 1))[0];
}

inline double kernel_K_inv(double hurst, double t, double s) {
    check_hurst(hurst);
    if (s >= t) return 0.0;
    if (hurst == 0.5) return 1.0;
    detail::check_section_args(t, s);
    return detail::kernel_K_inv_section(hurst, s, std::span<const double>(&t, 1))[0];
}

// Transfer kernel of the mean-reverting process:
//   L(t,s) = sigma K_H(t,s) - theta sigma e^{-theta t} ∫_s^t K_H(u,s) e^{theta u} du.
inline double kernel_L(const FouParams& p, double t, double s) {
    p.validate();
    if (s >= t) return 0.0;
    if (p.hurst == 0.5) return p.sigma * std::exp(-p.theta * (t - s));
    detail::check_section_args(t, s);
    // graded local partition of [s, t] for the exponential integral
    const std::size_t m = 128;
    std::vector<double> nodes(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double r = static_cast<double>(i + 1) / static_cast<double>(m);
        nodes[i] = s + (t - s) * r * std::sqrt(r);
    }
    nodes.back() = t;
    auto ls = detail::kernel_L_section(p, s, nodes);
    return ls.back();
}

// Inverse transfer kernel:
//   L^{-1}(t,s) = (1/sigma) K_H^{-1}(t,s) + (theta/sigma) ∫_s^t K_H^{-1}(t,v) dv.
inline double kernel_L_inv(const FouParams& p, double t, double s) {
    p.validate();
    if (s >= t) return 0.0;
    if (p.hurst == 0.5) return (1.0 + p.theta * (t - s)) / p.sigma;
    detail::check_section_args(t, s);
    const double H = p.hurst;
    const double kinv = kernel_K_inv(H, t, s);
    // ∫_s^t K^{-1}(t, v) dv, integrand ~ (t-v)^{1/2-H} near v = t
    const std::size_t m = 48;
    auto part = detail::smoothstep_partition(s, t, m);
    double q = 0.0;
    double f0 = kinv;
    for (std::size_t k = 0; k + 1 < part.size(); ++k) {
        const double v1 = part[k + 1];
        if (k + 2 == part.size()) {
            // last cell: exact power with the slow factor frozen at the midpoint
            const double vm = 0.5 * (part[k] + v1);
            const double km = kernel_K_inv(H, t, vm);
            const double S = km * std::pow(t - vm, H - 0.5);
            q += S * std::pow(t - part[k], 1.5 - H) / (1.5 - H);
            break;
        }
        const double f1 = kernel_K_inv(H, t, v1);
        q += 0.5 * (f0 + f1) * (v1 - part[k]);
        f0 = f1;
    }
    return kinv / p.sigma + (p.theta / p.sigma) * q;
}

// --- grid discretization ----------------------------------------------------

enum class KernelRole { K, K_inv, L, L_inv };

inline const char* to_string(KernelRole r) {
    switch (r) {
        case KernelRole::K: return "K";
        case KernelRole::K_inv: return "K_inv";
        case KernelRole::L: return "L";
        case KernelRole::L_inv: return "L_inv";
    }
    return "?";
}

// Lower-triangular cell weights: row i applied to increments approximates
// ∫_0^{t_i} k(t_i, s) dX_s.  Interior cells hold the kernel at the cell
// midpoint; the diagonal-adjacent cell averages the leading power law exactly
// over graded subcells.
struct KernelMatrix {
    Grid grid;
    KernelRole role = KernelRole::K;
    double hurst = 0.5;
    std::optional<FouParams> params;  // set for L roles
    std::vector<double> weights;      // (n+1) x n, row major

    double operator()(std::size_t i, std::size_t j) const {
        return weights[i * grid.steps + j];
    }
    double& at(std::size_t i, std::size_t j) { return weights[i * grid.steps + j]; }

    // y_i = sum_{j<i} w[i][j] (x_{j+1} - x_j); y_0 = 0
    std::vector<double> apply_increments(std::span<const double> x) const {
        const std::size_t n = grid.steps;
        if (x.size() != n + 1) throw std::invalid_argument("KernelMatrix: path/grid mismatch");
        std::vector<double> y(n + 1, 0.0);
        for (std::size_t i = 1; i <= n; ++i) {
            double acc = 0.0;
            const double* row = weights.data() + i * n;
            for (std::size_t j = 0; j < i; ++j) acc += row[j] * (x[j + 1] - x[j]);
            y[i] = acc;
        }
        return y;
    }
};

namespace detail {

// Average of k(t_row, s) over s in [t0, t0 + dt] where k ~ S(s) (t_row - s)^e;
// six graded subcells, slow factor frozen at subcell midpoints.
template <typename SectionFn>
inline double diag_cell_average(SectionFn&& point_eval, double t_row, double t0, double dt,
                                double e) {
    const std::size_t q = 6;
    double acc = 0.0;
    for (std::size_t m = 0; m < q; ++m) {
        const double wa = dt * static_cast<double>(q - m) / q;       // t_row - a
        const double wb = dt * static_cast<double>(q - m - 1) / q;   // t_row - b
        const double sm = t_row - 0.5 * (wa + wb);
        const double S = point_eval(sm) * std::pow(t_row - sm, -e);
        acc += S * (std::pow(wa, e + 1.0) - std::pow(wb, e + 1.0)) / (e + 1.0);
    }
    return acc / dt;
}

}  // namespace detail

inline KernelMatrix discretize(KernelRole role, const FouParams& p, const Grid& grid) {
    p.validate();
    const std::size_t n = grid.steps;
    const double dt = grid.dt();
    const double H = p.hurst;
    KernelMatrix M;
    M.grid = grid;
    M.role = role;
    M.hurst = H;
    if (role == KernelRole::L || role == KernelRole::L_inv) M.params = p;
    M.weights.assign((n + 1) * n, 0.0);

    if (role == KernelRole::L_inv) {
        // build from the K_inv weights: L^{-1}(t,s) = K^{-1}(t,s)/sigma
        //   + (theta/sigma) ∫_s^t K^{-1}(t,v) dv  (suffix sums over cells)
        KernelMatrix base = discretize(KernelRole::K_inv, p, grid);
        for (std::size_t i = 1; i <= n; ++i) {
            double suffix = 0.0;
            for (std::size_t j = i; j-- > 0;) {
                const double kinv = base(i, j);
                M.at(i, j) = kinv / p.sigma + (p.theta / p.sigma) * (0.5 * dt * kinv + suffix);
                suffix += dt * kinv;
            }
        }
        return M;
    }

    std::vector<double> nodes;
    nodes.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = grid.cell_mid(j);
        nodes.clear();
        for (std::size_t l = j + 1; l <= n; ++l) nodes.push_back(grid.node(l));

        if (role == KernelRole::K || role == KernelRole::K_inv) {
            const bool inv = role == KernelRole::K_inv;
            auto sec = inv ? detail::kernel_K_inv_section(H, s, nodes)
                           : detail::kernel_K_section(H, s, nodes);
            if (H == 0.5) {
                for (std::size_t l = 0; l < sec.size(); ++l) M.at(j + 1 + l, j) = sec[l];
                continue;
            }
            for (std::size_t l = 1; l < sec.size(); ++l) M.at(j + 1 + l, j) = sec[l];
            const double e = inv ? (0.5 - H) : (H - 0.5);
            auto point = [&](double sm) {
                const double tr = grid.node(j + 1);
                return inv ? kernel_K_inv(H, tr, sm) : kernel_K(H, tr, sm);
            };
            M.at(j + 1, j) = detail::diag_cell_average(point, grid.node(j + 1), grid.node(j), dt, e);
        } else {  // role L
            if (H == 0.5) {
                for (std::size_t l = j + 1; l <= n; ++l)
                    M.at(l, j) = p.sigma * std::exp(-p.theta * (grid.node(l) - s));
                continue;
            }
            auto ks = detail::kernel_K_section(H, s, nodes);
            auto js = detail::exp_kernel_integral_section(H, p.theta, s, nodes, ks);
            for (std::size_t l = 1; l < ks.size(); ++l) {
                const double t = nodes[l];
                M.at(j + 1 + l, j) =
                    p.sigma * ks[l] - p.theta * p.sigma * std::exp(-p.theta * t) * js[l];
            }
            const double e = H - 0.5;
            auto point = [&](double sm) { return kernel_K(H, grid.node(j + 1), sm); };
            const double kavg =
                detail::diag_cell_average(point, grid.node(j + 1), grid.node(j), dt, e);
            M.at(j + 1, j) =
                p.sigma * kavg - p.theta * p.sigma * std::exp(-p.theta * nodes[0]) * js[0];
        }
    }
    return M;
}

// convenience for the pure fBm kernels (theta/sigma play no role)
inline KernelMatrix discretize(KernelRole role, double hurst, const Grid& grid) {
    if (role == KernelRole::L || role == KernelRole::L_inv)
        throw std::invalid_argument("discretize: L roles need full parameters");
    return discretize(role, FouParams(1.0, 1.0, hurst), grid);
}

}  // namespace fou

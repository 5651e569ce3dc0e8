#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Quadrature primitives shared by the kernel and fractional-operator code.
// Convention: integrands are piecewise linear between nodes; power-law
// weights w^beta are integrated in closed form against that interpolant.

namespace fou::detail {

// ∫_{w0}^{w1} (A + B w) w^beta dw where A + B w interpolates (w0,f0)-(w1,f1).
// Requires beta > -1 when w0 == 0 unless f0 == 0 (then only the B-term, which
// needs beta > -2, contributes).
inline double cell_power(double w0, double w1, double f0, double f1, double beta) {
    const double B = (f1 - f0) / (w1 - w0);
    const double A = f0 - B * w0;
    const double p1 = beta + 1.0;
    const double p2 = beta + 2.0;
    double t1 = 0.0;
    if (A != 0.0) {
        const double lo = (w0 > 0.0) ? std::pow(w0, p1) : 0.0;
        t1 = A * (std::pow(w1, p1) - lo) / p1;
    }
    const double lo2 = (w0 > 0.0) ? std::pow(w0, p2) : 0.0;
    const double t2 = B * (std::pow(w1, p2) - lo2) / p2;
    return t1 + t2;
}

// Graded subdivision of one sweep cell [a, b] relative to the singular point s
// (a >= s). Appends interior and right boundaries to `out`, never `a` itself.
inline void append_cell_subnodes(double s, double a, double b, std::vector<double>& out,
                                 std::size_t qmax = 16) {
    const double d0 = a - s;
    const double h = b - a;
    if (d0 <= 0.0) {
        // partial cell starting at the singularity: resolve the u ~ s scale
        // (u-power factors turn over there), then a geometric ladder
        const double W = b - s;
        const double w1 = 0.25 * std::min(s, W);
        for (int i = 1; i <= 4; ++i) {
            const double r = static_cast<double>(i) / 4.0;
            out.push_back(s + w1 * r * r * r);
        }
        double w = w1;
        while (w < W) {
            w = std::min(W, w * 1.2);
            out.push_back(s + w);
        }
        out.back() = b;
        return;
    }
    const double ratio_s = h / d0;
    const double ratio_u = h / a;  // u-power factors are steep near u = 0
    const double r = std::max(ratio_s, ratio_u);
    const auto q = static_cast<std::size_t>(
        std::clamp(std::ceil(4.0 * r), 1.0, static_cast<double>(qmax)));
    for (std::size_t i = 1; i <= q; ++i)
        out.push_back(a + h * static_cast<double>(i) / static_cast<double>(q));
}

// Cumulative F(t_k) = ∫_s^{t_k} u^{upow} (u - s)^{beta} du for every node in
// `nodes` (strictly increasing, nodes[0] > s > 0). beta > -1.
inline std::vector<double> sweep_power_integral(double s, std::span<const double> nodes,
                                                double upow, double beta) {
    std::vector<double> out(nodes.size());
    std::vector<double> sub;
    sub.reserve(64);
    double acc = 0.0;
    double a = s;
    double f0 = std::pow(s, upow);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        sub.clear();
        append_cell_subnodes(s, a, nodes[k], sub);
        double w0 = a - s;
        for (double u : sub) {
            const double w1 = u - s;
            const double f1 = std::pow(u, upow);
            acc += cell_power(w0, w1, f0, f1, beta);
            w0 = w1;
            f0 = f1;
        }
        a = nodes[k];
        out[k] = acc;
    }
    return out;
}

// ∫ f(u) (u - a)^{beta} du with f piecewise linear on (nodes, fvals) and
// nodes[0] >= a. When nodes[0] == a the first cell requires beta > -1 or
// fvals[0] == 0.
inline double pl_power_integral(std::span<const double> nodes, std::span<const double> fvals,
                                double a, double beta) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
        acc += cell_power(nodes[k] - a, nodes[k + 1] - a, fvals[k], fvals[k + 1], beta);
    return acc;
}

}  // namespace fou::detail

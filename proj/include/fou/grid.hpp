#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fou {

// Uniform partition of [0, T] into n cells; nodes t_i = i*T/n, i = 0..n.
struct Grid {
    double horizon = 1.0;
    std::size_t steps = 0;

    Grid() = default;
    Grid(double T, std::size_t n) : horizon(T), steps(n) {
        if (!(T > 0.0)) throw std::invalid_argument("Grid: horizon must be positive");
        if (n < 2) throw std::invalid_argument("Grid: need at least 2 steps");
    }

    double dt() const { return horizon / static_cast<double>(steps); }
    std::size_t nodes() const { return steps + 1; }
    double node(std::size_t i) const { return horizon * static_cast<double>(i) / static_cast<double>(steps); }
    double cell_mid(std::size_t j) const { return (node(j) + node(j + 1)) * 0.5; }

    // nearest node index; throws if t is not grid-aligned within tolerance
    std::size_t index_of(double t, double tol_cells = 1e-9) const {
        const double x = t / dt();
        const auto i = static_cast<long long>(std::llround(x));
        if (i < 0 || static_cast<std::size_t>(i) > steps || std::abs(x - static_cast<double>(i)) > tol_cells)
            throw std::invalid_argument("Grid: time " + std::to_string(t) + " is not grid-aligned");
        return static_cast<std::size_t>(i);
    }

    bool operator==(const Grid& o) const { return horizon == o.horizon && steps == o.steps; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

// Scalar function sampled at the grid nodes (piecewise linear in between).
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0) : grid(g), values(g.nodes(), fill) {}
    GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.nodes())
            throw std::invalid_argument("GridFunction: values length must be n+1");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }

    // piecewise-linear interpolation at x in [0, T]
    double at(double x) const {
        const double dt = grid.dt();
        if (x <= 0.0) return values.front();
        if (x >= grid.horizon) return values.back();
        const auto j = static_cast<std::size_t>(x / dt);
        const double w = (x - grid.node(j)) / dt;
        return values[j] * (1.0 - w) + values[j + 1] * w;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

enum class ProcessKind { brownian, fbm, fou };

inline const char* to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::brownian: return "bm";
        case ProcessKind::fbm: return "fbm";
        case ProcessKind::fou: return "fou";
    }
    return "?";
}

}  // namespace fou

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "fou/grid.hpp"
#include "fou/kernels.hpp"
#include "fou/params.hpp"

namespace fou {

// Deterministic per-path stream: the engine state depends only on
// (master_seed, path_index), so results are independent of scheduling.
struct SeedSpec {
    std::uint64_t master = 42;
    std::uint64_t path_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// mt19937_64 seeded from a splitmix64-mixed (master, index) pair, with
// Box-Muller normals; the output stream is fully pinned by the standard.
class NormalStream {
  public:
    explicit NormalStream(SeedSpec seed)
        : eng_(detail::splitmix64(seed.master ^ detail::splitmix64(seed.path_index))) {}

    double operator()() {
        const double u1 =
            (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

struct Path {
    Grid grid;
    std::vector<double> values;
    ProcessKind kind = ProcessKind::brownian;
    std::optional<FouParams> params;

    Path() = default;
    Path(const Grid& g, std::vector<double> v, ProcessKind k)
        : grid(g), values(std::move(v)), kind(k) {
        if (values.size() != grid.nodes()) throw std::invalid_argument("Path: values length");
    }

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

// Standard Brownian motion: W_0 = 0, independent N(0, dt) increments.
inline Path sample_bm(const Grid& grid, SeedSpec seed) {
    NormalStream z(seed);
    const double sd = std::sqrt(grid.dt());
    std::vector<double> v(grid.nodes());
    v[0] = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + sd * z();
    return Path(grid, std::move(v), ProcessKind::brownian);
}

inline Path apply(const KernelMatrix& M, const Path& x, ProcessKind out_kind) {
    if (x.grid != M.grid) throw std::invalid_argument("apply: path and kernel grid mismatch");
    Path out(x.grid, M.apply_increments(x.values), out_kind);
    if (M.params) out.params = M.params;
    return out;
}

inline void expect_kind(const Path& p, ProcessKind k, const char* who) {
    if (p.kind != k)
        throw std::invalid_argument(std::string(who) + ": unexpected process tag");
}

inline Path fbm_from_bm(const Path& w, double hurst) {
    expect_kind(w, ProcessKind::brownian, "fbm_from_bm");
    return apply(discretize(KernelRole::K, hurst, w.grid), w, ProcessKind::fbm);
}

inline Path bm_from_fbm(const Path& b, double hurst) {
    expect_kind(b, ProcessKind::fbm, "bm_from_fbm");
    return apply(discretize(KernelRole::K_inv, hurst, b.grid), b, ProcessKind::brownian);
}

inline Path fou_from_bm(const Path& w, const FouParams& p) {
    expect_kind(w, ProcessKind::brownian, "fou_from_bm");
    return apply(discretize(KernelRole::L, p, w.grid), w, ProcessKind::fou);
}

inline Path bm_from_fou(const Path& u, const FouParams& p) {
    expect_kind(u, ProcessKind::fou, "bm_from_fou");
    return apply(discretize(KernelRole::L_inv, p, u.grid), u, ProcessKind::brownian);
}

// Langevin solution driven by an fBm path, via integration by parts:
//   U_t = sigma [ B_t - theta e^{-theta t} ∫_0^t B_s e^{theta s} ds ],
// trapezoidal in the Riemann integral.  Exact in the B path up to quadrature,
// no stochastic integral involved.
inline Path fou_from_fbm(const Path& b, const FouParams& p) {
    expect_kind(b, ProcessKind::fbm, "fou_from_fbm");
    const Grid& g = b.grid;
    const double dt = g.dt();
    std::vector<double> out(g.nodes());
    out[0] = 0.0;
    double acc = 0.0;  // ∫_0^{t_i} B e^{theta s} ds
    for (std::size_t i = 1; i < g.nodes(); ++i) {
        const double f0 = b[i - 1] * std::exp(p.theta * g.node(i - 1));
        const double f1 = b[i] * std::exp(p.theta * g.node(i));
        acc += 0.5 * (f0 + f1) * dt;
        out[i] = p.sigma * (b[i] - p.theta * std::exp(-p.theta * g.node(i)) * acc);
    }
    Path u(g, std::move(out), ProcessKind::fou);
    u.params = p;
    return u;
}

struct ExactFbmSampler {
    Grid grid;
    double hurst;
    Eigen::MatrixXd chol;  // Cholesky factor of the node covariance (nodes 1..n)
    bool jittered = false;

    ExactFbmSampler(const Grid& g, double h) : grid(g), hurst(h) {
        check_hurst(h);
        const std::size_t n = g.steps;
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                cov(i, k) = fbm_covariance(h, g.node(i + 1), g.node(k + 1));
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            const double jitter = 1e-12 * cov.diagonal().maxCoeff();
            cov.diagonal().array() += jitter;
            llt.compute(cov);
            jittered = true;
            if (llt.info() != Eigen::Success)
                throw std::runtime_error(
                    "fbm_exact: covariance factorization failed; reduce n or move H away from 1");
        }
        chol = llt.matrixL();
    }

    Path sample(SeedSpec seed) const {
        NormalStream zs(seed);
        const std::size_t n = grid.steps;
        Eigen::VectorXd z(n);
        for (std::size_t i = 0; i < n; ++i) z(i) = zs();
        Eigen::VectorXd x = chol * z;
        std::vector<double> v(n + 1);
        v[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i + 1] = x(i);
        return Path(grid, std::move(v), ProcessKind::fbm);
    }
};

// One-shot exact sample from the fBm covariance (oracle sampler).
inline Path fbm_exact(const Grid& grid, double hurst, SeedSpec seed) {
    return ExactFbmSampler(grid, hurst).sample(seed);
}

// V_t = e^{-theta t} v0 + U_t, the stationary-solution connection for a
// caller-supplied initial value.
inline Path stationary_connection(const Path& u, double v0, const FouParams& p) {
    expect_kind(u, ProcessKind::fou, "stationary_connection");
    std::vector<double> v(u.values);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += v0 * std::exp(-p.theta * u.grid.node(i));
    Path out(u.grid, std::move(v), ProcessKind::fou);
    out.params = p;
    return out;
}

// Static slot-per-index parallel loop; results do not depend on the thread
// count because every index writes only its own slot.
template <typename Fn>
inline void parallel_for_index(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned nt = std::min<unsigned>(threads, std::thread::hardware_concurrency() * 4 + 1);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace fou

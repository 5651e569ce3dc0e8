#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fou/grid.hpp"
#include "fou/kernels.hpp"
#include "fou/params.hpp"
#include "fou/simulation.hpp"
#include "fou/transfer_ops.hpp"

namespace fou {

// Covariance of the mean-reverting process, R(t,s) = ∫_0^{t∧s} L(t,v) L(s,v) dv,
// evaluated through the discretized transfer kernel on an internal grid.
struct FouCovariance {
    FouParams params;
    Grid grid;
    KernelMatrix lmat;

    FouCovariance(const FouParams& p, double horizon, std::size_t resolution = 512)
        : params(p), grid(horizon, resolution), lmat(discretize(KernelRole::L, p, grid)) {}

    // ∫_{lo}^{hi ∧ t ∧ s} L(t,v) L(s,v) dv over whole cells; times snap to nodes.
    double band(double t, double s, double lo, double hi) const {
        const std::size_t it = grid.index_of(std::min(t, grid.horizon), 0.5);
        const std::size_t is = grid.index_of(std::min(s, grid.horizon), 0.5);
        const std::size_t jlo = grid.index_of(lo, 0.5);
        const std::size_t jhi = std::min(grid.index_of(hi, 0.5), std::min(it, is));
        const std::size_t n = grid.steps;
        const double* rt = lmat.weights.data() + it * n;
        const double* rs = lmat.weights.data() + is * n;
        double acc = 0.0;
        for (std::size_t j = jlo; j < jhi; ++j) acc += rt[j] * rs[j];
        return acc * grid.dt();
    }

    double restricted(double t, double s, double lo) const {
        return band(t, s, lo, grid.horizon);
    }

    double operator()(double t, double s) const { return restricted(t, s, 0.0); }
};

inline double fou_covariance(const FouParams& p, double t, double s,
                             std::size_t resolution = 512) {
    if (t <= 0.0 || s <= 0.0) return 0.0;
    return FouCovariance(p, std::max(t, s), resolution)(t, s);
}

// Conditional covariance Cov[U_t, U_s | past up to u] = ∫_u^{t∧s} L(t,v)L(s,v) dv.
inline double conditional_cov(const FouCovariance& cov, double t, double s, double u) {
    if (t < u || s < u) throw std::invalid_argument("conditional_cov: targets must be >= u");
    return cov.restricted(t, s, u);
}

// Equivalent two-term form R(t,s) - ∫_0^u L(t,v)L(s,v) dv, kept as a
// cross-check (subtraction of near-equal quadratures).
inline double conditional_cov_two_term(const FouCovariance& cov, double t, double s, double u) {
    return cov(t, s) - cov.band(t, s, 0.0, u);
}

// Prediction weight function Psi(t, s | u): the horizon-u inverse transfer
// operator applied to the kernel-section difference L(u,·) - L(t,·).  With
// this sign, m̂(t) = U_u - ∫_0^u Psi(t, s | u) dU_s reduces to the classical
// Markov prediction at H = 1/2.
class PsiEvaluator {
  public:
    PsiEvaluator(const FouParams& p, double t, double u, std::size_t resolution = 256)
        : params_(p), t_(t), u_(u) {
        if (!(u > 0.0)) throw std::invalid_argument("psi: empty history (u must be positive)");
        if (!(t >= u)) throw std::invalid_argument("psi: target must satisfy t >= u");
        const Grid gu(u, resolution);
        GridFunction g(gu);
        const double dt = gu.dt();
        const std::size_t nu = gu.steps;
        for (std::size_t l = 0; l <= nu; ++l) {
            double v = gu.node(l);
            if (l == 0) v = 0.5 * dt;
            if (l == nu) {
                // value from the left limit; the divergent part for H < 1/2 is
                // carried by the quadrature, not the node
                const double lu = (p.hurst == 0.5) ? p.sigma : 0.0;
                g[l] = lu - (t > u ? kernel_L(p, t, u) : 0.0);
                continue;
            }
            g[l] = (v < u ? kernel_L(p, u, v) : 0.0) - (t > v ? kernel_L(p, t, v) : 0.0);
        }
        auto integrand = Integrand::from_samples(std::move(g), ProcessKind::fou);
        psi_ = apply_L_star_inv(integrand, p);
        if (t == u) std::fill(psi_.values.begin(), psi_.values.end(), 0.0);
    }

    double at(double s) const {
        if (!(s >= 0.0 && s <= u_)) throw std::invalid_argument("psi: need 0 <= s <= u");
        return psi_.at(s);
    }

    const GridFunction& values() const { return psi_; }

  private:
    FouParams params_;
    double t_, u_;
    GridFunction psi_;
};

inline double psi(const FouParams& p, double t, double s, double u,
                  std::size_t resolution = 256) {
    return PsiEvaluator(p, t, u, resolution).at(s);
}

// Psi cell weights for the conditional mean, reusable across paths:
//   m̂(t_k) = U_u - sum_l w(k, l) (U_{l+1} - U_l),
// obtained by pushing the kernel-section difference L(u,·) - L(t_k,·)
// through the discretized horizon-u inverse transfer (adjoint form).
class ConditionalMeanWeights {
  public:
    ConditionalMeanWeights(const FouParams& p, const Grid& g, double u,
                           std::span<const double> targets)
        : grid_(g), ku_(g.index_of(u, 0.5)) {
        if (ku_ == 0) throw std::invalid_argument("conditional_mean: empty history");
        for (double t : targets) {
            if (t < u) throw std::invalid_argument("conditional_mean: targets must be >= u");
            if (t > g.horizon + 0.5 * g.dt())
                throw std::invalid_argument("conditional_mean: target beyond grid");
        }
        KernelMatrix AL = discretize(KernelRole::L, p, g);
        KernelMatrix ALi = discretize(KernelRole::L_inv, p, g);
        // D[j][l] = increments of the inverse transform restricted to [0, u]
        Eigen::MatrixXd D(ku_, ku_);
        for (std::size_t j = 0; j < ku_; ++j)
            for (std::size_t l = 0; l < ku_; ++l) D(j, l) = ALi(j + 1, l) - ALi(j, l);
        w_.resize(targets.size(), ku_);
        Eigen::VectorXd gsec(ku_);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const std::size_t row = g.index_of(targets[k], 0.5);
            for (std::size_t j = 0; j < ku_; ++j) gsec(j) = AL(ku_, j) - AL(row, j);
            w_.row(static_cast<Eigen::Index>(k)) = (D.transpose() * gsec).transpose();
        }
    }

    std::vector<double> apply(const Path& path) const {
        expect_kind(path, ProcessKind::fou, "conditional_mean");
        if (path.grid != grid_) throw std::invalid_argument("conditional_mean: grid mismatch");
        Eigen::VectorXd dU(ku_);
        for (std::size_t l = 0; l < ku_; ++l) dU(l) = path[l + 1] - path[l];
        const Eigen::VectorXd m = w_ * dU;
        std::vector<double> out(static_cast<std::size_t>(m.size()));
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = path[ku_] - m(static_cast<Eigen::Index>(k));
        return out;
    }

    std::size_t past_steps() const { return ku_; }

  private:
    Grid grid_;
    std::size_t ku_ = 0;
    Eigen::MatrixXd w_;  // targets x ku
};

inline std::vector<double> conditional_mean(const Path& path, double u, const FouParams& p,
                                            std::span<const double> targets) {
    return ConditionalMeanWeights(p, path.grid, u, targets).apply(path);
}

struct ConditioningOracle {
    Eigen::MatrixXd weights;   // (ku) x (targets): m̂ = weights^T U_past
    Eigen::MatrixXd cond_cov;  // targets x targets
    bool jittered = false;
};

// Exact Gaussian conditioning of the discretized process on its full past
// grid, via the Schur complement of the joint covariance.
inline ConditioningOracle gaussian_conditioning_oracle(const FouParams& p, const Grid& g,
                                                       double u,
                                                       std::span<const double> targets) {
    const std::size_t ku = g.index_of(u, 0.5);
    const std::size_t n = g.steps;
    const double dt = g.dt();
    KernelMatrix AL = discretize(KernelRole::L, p, g);
    const auto row = [&](std::size_t i) {
        return Eigen::Map<const Eigen::RowVectorXd>(AL.weights.data() + i * n, n);
    };
    ConditioningOracle out;
    if (ku == 0) {
        // no conditioning: return the unconditional covariance
        out.weights.resize(0, static_cast<Eigen::Index>(targets.size()));
        out.cond_cov.resize(targets.size(), targets.size());
        for (std::size_t a = 0; a < targets.size(); ++a)
            for (std::size_t b = 0; b < targets.size(); ++b) {
                const auto ia = g.index_of(targets[a], 0.5);
                const auto ib = g.index_of(targets[b], 0.5);
                out.cond_cov(a, b) = row(ia).head(std::min(ia, ib)).dot(row(ib).head(std::min(ia, ib))) * dt;
            }
        return out;
    }
    Eigen::MatrixXd spp(ku, ku);
    for (std::size_t i = 0; i < ku; ++i)
        for (std::size_t k = i; k < ku; ++k) {
            const std::size_t m = std::min(i, k) + 1;
            const double v = row(i + 1).head(m).dot(row(k + 1).head(m)) * dt;
            spp(i, k) = v;
            spp(k, i) = v;
        }
    Eigen::MatrixXd spt(ku, targets.size());
    Eigen::MatrixXd stt(targets.size(), targets.size());
    for (std::size_t a = 0; a < targets.size(); ++a) {
        const std::size_t ia = g.index_of(targets[a], 0.5);
        for (std::size_t i = 0; i < ku; ++i) {
            const std::size_t m = std::min(i + 1, ia);
            spt(i, a) = row(i + 1).head(m).dot(row(ia).head(m)) * dt;
        }
        for (std::size_t b = 0; b < targets.size(); ++b) {
            const std::size_t ib = g.index_of(targets[b], 0.5);
            const std::size_t m = std::min(ia, ib);
            stt(a, b) = row(ia).head(m).dot(row(ib).head(m)) * dt;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(spp);
    if (llt.info() != Eigen::Success) {
        spp.diagonal().array() += 1e-10;
        llt.compute(spp);
        out.jittered = true;
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("conditioning oracle: past covariance not factorizable");
    }
    out.weights = llt.solve(spt);
    out.cond_cov = stt - spt.transpose() * out.weights;
    out.cond_cov = 0.5 * (out.cond_cov + out.cond_cov.transpose()).eval();
    return out;
}

struct PredictionResult {
    double base_time = 0.0;
    std::vector<double> targets;
    std::vector<double> mean;
    std::vector<std::vector<double>> covariance;  // targets x targets
    std::size_t resolution = 0;                   // quadrature resolution used
};

inline PredictionResult predict(const Path& path, double u, const FouParams& p,
                                std::span<const double> targets) {
    PredictionResult r;
    r.base_time = u;
    r.targets.assign(targets.begin(), targets.end());
    r.mean = conditional_mean(path, u, p, targets);
    r.resolution = path.grid.steps;
    FouCovariance cov(p, path.grid.horizon, path.grid.steps);
    r.covariance.assign(targets.size(), std::vector<double>(targets.size()));
    for (std::size_t a = 0; a < targets.size(); ++a)
        for (std::size_t b = 0; b < targets.size(); ++b)
            r.covariance[a][b] = conditional_cov(cov, targets[a], targets[b], u);
    return r;
}

}  // namespace fou

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fou/transfer_ops.hpp"
#include "support/oracles.hpp"

using namespace fou;

namespace {

GridFunction smooth_g(const Grid& g) {
    GridFunction out(g);
    for (std::size_t i = 0; i < g.nodes(); ++i) out[i] = 1.0 + std::sin(3.0 * g.node(i));
    return out;
}

double interior_sup_diff(const GridFunction& a, const GridFunction& b) {
    // fixed interior time window; both endpoints carry boundary layers
    const std::size_t lo = a.grid.steps / 16;
    const std::size_t hi = static_cast<std::size_t>(0.75 * a.grid.steps);
    double m = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("K* is the identity at H = 1/2") {
    const Grid g(1.0, 64);
    auto f = Integrand::from_samples(smooth_g(g), ProcessKind::fbm);
    auto fwd = apply_K_star(f, 0.5);
    auto inv = apply_K_star_inv(f, 0.5);
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        CHECK(fwd[i] == f.f[i]);
        CHECK(inv[i] == f.f[i]);
    }
}

TEST_CASE("indicator inputs reproduce kernel sections") {
    const Grid g(1.0, 128);
    const double v = 0.5;
    for (double H : {0.3, 0.7}) {
        auto ind = Integrand::step(g, v, ProcessKind::fbm);
        auto sec = apply_K_star(ind, H);
        auto seci = apply_K_star_inv(ind, H);
        for (std::size_t i = 1; i < g.nodes(); ++i) {
            const double s = g.node(i);
            const double want = s < v ? kernel_K(H, v, s) : 0.0;
            const double wanti = s < v ? kernel_K_inv(H, v, s) : 0.0;
            CHECK(sec[i] == Catch::Approx(want).margin(1e-10));
            CHECK(seci[i] == Catch::Approx(wanti).margin(1e-10));
        }
    }
    SECTION("L* and its inverse on indicators") {
        const FouParams p(1.2, 0.8, 0.3);
        auto ind = Integrand::step(g, v, ProcessKind::fou);
        LStarCache cache(g, p);
        auto sec = apply_L_star(ind, p, cache);
        auto seci = apply_L_star_inv(ind, p);
        for (std::size_t i = 1; i < g.nodes(); ++i) {
            const double s = g.node(i);
            CHECK(sec[i] == Catch::Approx(s < v ? kernel_L(p, v, s) : 0.0).margin(1e-10));
            CHECK(seci[i] == Catch::Approx(s < v ? kernel_L_inv(p, v, s) : 0.0).margin(1e-10));
        }
    }
}

TEST_CASE("constant integrand maps to the horizon kernel section") {
    const Grid g(1.0, 256);
    const double H = 0.7;
    GridFunction one(g, std::vector<double>(g.nodes(), 1.0));
    auto out = apply_K_star(Integrand::from_samples(one, ProcessKind::fbm), H);
    double worst = 0.0;
    for (std::size_t i = 8; i <= g.steps - 8; ++i)
        worst = std::max(worst, std::abs(out[i] - kernel_K(H, g.horizon, g.node(i))));
    CHECK(worst < 5e-3);
}

TEST_CASE("operator linearity is exact") {
    const Grid g(1.0, 96);
    auto g1 = smooth_g(g);
    GridFunction g2(g);
    for (std::size_t i = 0; i < g.nodes(); ++i) g2[i] = g.node(i) * g.node(i) - 0.3;
    const double a = 1.7, b = -2.2;
    GridFunction combo(g);
    for (std::size_t i = 0; i < g.nodes(); ++i) combo[i] = a * g1[i] + b * g2[i];
    const FouParams p(0.8, 1.3, 0.35);
    LStarCache cache(g, p);

    auto wrap = [](const GridFunction& f) {
        return Integrand::from_samples(f, ProcessKind::brownian);
    };
    auto check_lin = [&](auto&& op) {
        auto lhs = op(wrap(combo));
        auto r1 = op(wrap(g1));
        auto r2 = op(wrap(g2));
        for (std::size_t i = 0; i < g.nodes(); ++i)
            CHECK(lhs[i] == Catch::Approx(a * r1[i] + b * r2[i]).margin(1e-10));
    };
    check_lin([&](const Integrand& f) { return apply_K_star(f, p.hurst); });
    check_lin([&](const Integrand& f) { return apply_K_star_inv(f, p.hurst); });
    check_lin([&](const Integrand& f) { return apply_L_star(f, p, cache); });
    check_lin([&](const Integrand& f) { return apply_L_star_inv(f, p); });
}

TEST_CASE("inverse pairs converge on smooth data") {
    for (double H : {0.25, 0.75}) {
        double prev = 0.0;
        for (std::size_t n : {128, 256}) {
            const Grid g(1.0, n);
            auto f = Integrand::from_samples(smooth_g(g), ProcessKind::fbm);
            auto round = apply_K_star_inv(
                Integrand::from_samples(apply_K_star(f, H), ProcessKind::fbm), H);
            const double err = interior_sup_diff(round, f.f);
            if (prev > 0.0) CHECK(prev / err > 1.2);
            prev = err;
        }
        CHECK(prev < 0.02);
    }
    SECTION("L* pair") {
        for (auto [th, sg, H] : {std::tuple{1.0, 1.0, 0.7}, {0.5, 2.0, 0.3}}) {
            const FouParams p(th, sg, H);
            double prev = 0.0;
            for (std::size_t n : {128, 256}) {
                const Grid g(1.0, n);
                LStarCache cache(g, p);
                auto f = Integrand::from_samples(smooth_g(g), ProcessKind::fou);
                auto round = apply_L_star_inv(
                    Integrand::from_samples(apply_L_star(f, p, cache), ProcessKind::brownian), p);
                const double err = interior_sup_diff(round, f.f);
                if (prev > 0.0) CHECK(prev / err > 1.15);
                prev = err;
            }
            CHECK(prev < 0.06);
        }
    }
}

TEST_CASE("L* closed forms and limits") {
    const Grid g(1.0, 128);
    SECTION("H = 1/2, constant integrand") {
        const FouParams p(1.5, 2.0, 0.5);
        LStarCache cache(g, p);
        GridFunction one(g, std::vector<double>(g.nodes(), 1.0));
        auto out = apply_L_star(Integrand::from_samples(one, ProcessKind::fou), p, cache);
        auto outi = apply_L_star_inv(Integrand::from_samples(one, ProcessKind::brownian), p);
        for (std::size_t i = 1; i < g.nodes(); ++i) {  // node 0 uses the half-cell substitute

            const double t = g.node(i);
            CHECK(out[i] ==
                  Catch::Approx(p.sigma * std::exp(-p.theta * (g.horizon - t))).margin(1e-3));
            CHECK(outi[i] ==
                  Catch::Approx(1.0 / p.sigma + p.theta / p.sigma * (g.horizon - t)).margin(1e-12));
        }
    }
    SECTION("theta -> 0 collapses to the fBm operators") {
        const double H = 0.7, sg = 1.4;
        const FouParams p(1e-9, sg, H);
        LStarCache cache(g, p);
        auto f = Integrand::from_samples(smooth_g(g), ProcessKind::fou);
        auto ls = apply_L_star(f, p, cache);
        auto ks = apply_K_star(f, H);
        auto lsi = apply_L_star_inv(f, p);
        auto ksi = apply_K_star_inv(f, H);
        for (std::size_t i = 1; i + 1 < g.nodes(); ++i) {
            CHECK(ls[i] == Catch::Approx(sg * ks[i]).margin(1e-6));
            CHECK(lsi[i] == Catch::Approx(ksi[i] / sg).margin(1e-6));
        }
    }
}

TEST_CASE("single-integral L* agrees with the three-term form") {
    const Grid g(1.0, 192);
    for (auto [th, sg, H] : {std::tuple{1.0, 1.0, 0.7}, {0.8, 1.5, 0.35}}) {
        const FouParams p(th, sg, H);
        LStarCache cache(g, p);
        auto f = smooth_g(g);
        auto out = apply_L_star(Integrand::from_samples(f, ProcessKind::fou), p, cache);
        for (std::size_t i : {16u, 64u, 120u, 170u}) {
            const double literal = testsupport::l_star_literal(f, p, g.node(i));
            CHECK(out[i] == Catch::Approx(literal).epsilon(5e-3));
        }
    }
}

TEST_CASE("isometry against the covariance Gram form") {
    SECTION("fBm side") {
        const Grid g(1.0, 512);
        for (double H : {0.25, 0.75}) {
            for (bool linear : {false, true}) {
                GridFunction f(g);
                for (std::size_t i = 0; i < g.nodes(); ++i) f[i] = linear ? g.node(i) : 1.0;
                auto ks = apply_K_star(Integrand::from_samples(f, ProcessKind::fbm), H);
                const double nrm = l2_norm_sq(ks, -std::abs(H - 0.5), H - 0.5);
                const double gram = testsupport::gram_inner_product(
                    f, [&](double a, double b) { return fbm_covariance(H, a, b); });
                CHECK(nrm == Catch::Approx(gram).epsilon(0.02));
            }
        }
    }
    SECTION("fOU side") {
        const FouParams p(1.0, 1.0, 0.7);
        const Grid gs(1.0, 256);
        LStarCache cache(gs, p);
        auto M = discretize(KernelRole::L, p, gs);
        const double dt = gs.dt();
        auto Rfou = [&](double a, double b) {
            const auto ia = gs.index_of(a), ib = gs.index_of(b);
            double acc = 0.0;
            for (std::size_t j = 0; j < std::min(ia, ib); ++j) acc += M(ia, j) * M(ib, j);
            return acc * dt;
        };
        GridFunction f(gs);
        for (std::size_t i = 0; i < gs.nodes(); ++i) f[i] = gs.node(i);
        auto ls = apply_L_star(Integrand::from_samples(f, ProcessKind::fou), p, cache);
        const double nrm = l2_norm_sq(ls, -std::abs(p.hurst - 0.5), p.hurst - 0.5);
        const double gram = testsupport::gram_inner_product(f, Rfou);
        CHECK(nrm == Catch::Approx(gram).epsilon(0.02));
    }
}

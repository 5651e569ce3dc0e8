#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fou/prediction.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace fou;

TEST_CASE("fou covariance") {
    SECTION("vanishes when either argument is zero") {
        const FouParams p(1.0, 1.0, 0.7);
        CHECK(fou_covariance(p, 0.0, 0.5) == 0.0);
        CHECK(fou_covariance(p, 0.5, 0.0) == 0.0);
    }
    SECTION("classical variance at H = 1/2") {
        const FouParams p(1.3, 1.7, 0.5);
        for (double t : {0.25, 0.5, 1.0}) {
            const double want =
                p.sigma * p.sigma * (1.0 - std::exp(-2.0 * p.theta * t)) / (2.0 * p.theta);
            CHECK(fou_covariance(p, t, t) == Catch::Approx(want).epsilon(1e-4));
        }
    }
    SECTION("theta -> 0 gives sigma^2 R_H") {
        const FouParams p(1e-9, 1.5, 0.75);
        const double got = fou_covariance(p, 1.0, 0.5);
        CHECK(got == Catch::Approx(2.25 * fbm_covariance(0.75, 1.0, 0.5)).epsilon(0.02));
    }
    SECTION("agrees with the quadrature oracle away from H = 1/2") {
        const FouParams p(1.0, 1.0, 0.7);
        const double got = fou_covariance(p, 1.0, 0.5);
        CHECK(got == Catch::Approx(testsupport::fou_covariance_oracle(p, 1.0, 0.5, 1000))
                         .epsilon(0.02));
    }
}

TEST_CASE("conditional covariance") {
    const FouParams p(1.0, 1.0, 0.75);
    FouCovariance cov(p, 1.0, 256);
    SECTION("no conditioning at u = 0") {
        CHECK(conditional_cov(cov, 1.0, 0.5, 0.0) == Catch::Approx(cov(1.0, 0.5)).margin(1e-14));
    }
    SECTION("observed point has zero conditional variance") {
        CHECK(conditional_cov(cov, 0.5, 0.5, 0.5) == 0.0);
    }
    SECTION("one-integral and two-term forms agree") {
        for (double u : {0.25, 0.5})
            for (auto [t, s] : {std::pair{1.0, 1.0}, {1.0, 0.75}, {0.75, 0.75}})
                CHECK(conditional_cov(cov, t, s, u) ==
                      Catch::Approx(conditional_cov_two_term(cov, t, s, u)).margin(1e-10));
    }
    SECTION("classical closed form at H = 1/2") {
        const FouParams ph(0.8, 1.2, 0.5);
        FouCovariance covh(ph, 1.0, 512);
        for (double u : {0.25, 0.5}) {
            const double t = 0.75;
            const double want = ph.sigma * ph.sigma *
                                (1.0 - std::exp(-2.0 * ph.theta * (t - u))) / (2.0 * ph.theta);
            CHECK(conditional_cov(covh, t, t, u) == Catch::Approx(want).epsilon(1e-3));
        }
    }
    SECTION("nonincreasing in the conditioning time") {
        double prev = 1e300;
        for (double u : {0.0, 0.125, 0.25, 0.375, 0.5}) {
            const double v = conditional_cov(cov, 0.75, 0.75, u);
            CHECK(v <= prev + 1e-14);
            prev = v;
        }
    }
}

TEST_CASE("psi weight function") {
    const FouParams p(1.0, 1.0, 0.75);
    SECTION("vanishes at t = u") {
        for (double s : {0.0, 0.2, 0.4}) CHECK(psi(p, 0.5, s, 0.5) == 0.0);
    }
    SECTION("empty history is an error") {
        CHECK_THROWS_AS(psi(p, 0.5, 0.1, 0.0), std::invalid_argument);
    }
    SECTION("H = 1/2 weight is the classical constant") {
        const FouParams ph(1.4, 2.0, 0.5);
        const double u = 0.5;
        for (double t : {0.6, 1.0}) {
            const double want = 1.0 - std::exp(-ph.theta * (t - u));
            for (double s : {0.05, 0.25, 0.45})
                CHECK(psi(ph, t, s, u) == Catch::Approx(want).epsilon(2e-3));
        }
    }
    SECTION("theta -> 0 reduces to the fBm prediction weight") {
        const double H = 0.75, u = 0.5, t = 0.8;
        const FouParams p0(1e-9, 1.0, H);
        const std::size_t nu = 256;
        const Grid gu(u, nu);
        GridFunction gsec(gu);
        for (std::size_t l = 0; l <= nu; ++l) {
            double v = l == 0 ? 0.5 * gu.dt() : gu.node(l);
            const double ku = v < u ? kernel_K(H, u, v) : 0.0;
            gsec[l] = ku - kernel_K(H, t, v);
        }
        auto fbm_weight =
            apply_K_star_inv(Integrand::from_samples(gsec, ProcessKind::fbm), H);
        for (double s : {0.1, 0.25, 0.4})
            CHECK(psi(p0, t, s, u, nu) == Catch::Approx(fbm_weight.at(s)).margin(1e-3));
    }
}

TEST_CASE("conditional mean") {
    const double u = 0.5;
    const std::vector<double> targets{0.6, 0.8, 1.0};
    SECTION("target at the base time returns the last observation") {
        const FouParams p(1.0, 1.0, 0.75);
        const Grid g(1.0, 128);
        auto w = sample_bm(g, {101, 0});
        auto path = fou_from_bm(w, p);
        const std::vector<double> tu{u};
        auto m = conditional_mean(path, u, p, tu);
        CHECK(m[0] == Catch::Approx(path.values[g.index_of(u)]).margin(1e-12));
    }
    SECTION("classical Markov prediction at H = 1/2") {
        const FouParams p(1.2, 1.5, 0.5);
        const Grid g(1.0, 256);
        for (std::size_t k = 0; k < 20; ++k) {
            auto path = fou_from_bm(sample_bm(g, {103, k}), p);
            auto m = conditional_mean(path, u, p, targets);
            const double uu = path.values[g.index_of(u)];
            for (std::size_t a = 0; a < targets.size(); ++a) {
                const double ta = g.node(g.index_of(targets[a], 0.5));
                CHECK(m[a] == Catch::Approx(std::exp(-p.theta * (ta - u)) * uu).margin(1e-9));
            }
        }
    }
    SECTION("matches the Gaussian conditioning oracle") {
        for (double H : {0.25, 0.75}) {
            const FouParams p(1.0, 1.0, H);
            const Grid g(1.0, 256);
            auto oracle = gaussian_conditioning_oracle(p, g, u, targets);
            const auto M = discretize(KernelRole::L, p, g);
            const ConditionalMeanWeights weights(p, g, u, targets);
            const std::size_t ku = g.index_of(u);
            std::vector<double> worst(targets.size(), 0.0), meanerr(targets.size(), 0.0);
            const std::size_t npaths = 100;
            for (std::size_t k = 0; k < npaths; ++k) {
                auto w = sample_bm(g, {105, k});
                Path path(g, M.apply_increments(w.values), ProcessKind::fou);
                auto m = weights.apply(path);
                for (std::size_t a = 0; a < targets.size(); ++a) {
                    double mo = 0.0;
                    for (std::size_t i = 0; i < ku; ++i)
                        mo += oracle.weights(i, a) * path.values[i + 1];
                    const double err =
                        std::abs(m[a] - mo) / std::sqrt(oracle.cond_cov(a, a));
                    worst[a] = std::max(worst[a], err);
                    meanerr[a] += err / npaths;
                }
            }
            for (std::size_t a = 0; a < targets.size(); ++a) {
                INFO("H=" << H << " target " << targets[a] << " worst " << worst[a]);
                CHECK(meanerr[a] < 0.02);
            }
        }
    }
    SECTION("linearity in the observed path") {
        const FouParams p(1.0, 1.0, 0.3);
        const Grid g(1.0, 128);
        auto p1 = fou_from_bm(sample_bm(g, {107, 0}), p);
        auto p2 = fou_from_bm(sample_bm(g, {107, 1}), p);
        Path combo(g, std::vector<double>(g.nodes()), ProcessKind::fou);
        for (std::size_t i = 0; i < g.nodes(); ++i)
            combo.values[i] = 1.5 * p1.values[i] - 0.25 * p2.values[i];
        auto mc = conditional_mean(combo, u, p, targets);
        auto m1 = conditional_mean(p1, u, p, targets);
        auto m2 = conditional_mean(p2, u, p, targets);
        for (std::size_t a = 0; a < targets.size(); ++a)
            CHECK(mc[a] == Catch::Approx(1.5 * m1[a] - 0.25 * m2[a]).margin(1e-10));
    }
    SECTION("error paths") {
        const FouParams p(1.0, 1.0, 0.75);
        const Grid g(1.0, 128);
        auto path = fou_from_bm(sample_bm(g, {109, 0}), p);
        const std::vector<double> bad{0.4};
        CHECK_THROWS_AS(conditional_mean(path, 0.5, p, bad), std::invalid_argument);
        CHECK_THROWS_AS(conditional_mean(path, 0.0, p, targets), std::invalid_argument);
    }
}

TEST_CASE("conditioning oracle properties") {
    const double u = 0.5;
    const std::vector<double> targets{0.6, 0.8, 1.0};
    SECTION("H = 1/2 weights concentrate on the last observation") {
        const FouParams p(1.0, 1.0, 0.5);
        const Grid g(1.0, 128);
        auto oracle = gaussian_conditioning_oracle(p, g, u, targets);
        const std::size_t ku = g.index_of(u);
        for (std::size_t a = 0; a < targets.size(); ++a) {
            const double ta = g.node(g.index_of(targets[a], 0.5));
            CHECK(oracle.weights(ku - 1, a) ==
                  Catch::Approx(std::exp(-p.theta * (ta - u))).margin(1e-8));
            for (std::size_t i = 0; i + 1 < ku; ++i)
                CHECK(std::abs(oracle.weights(i, a)) < 1e-8);
        }
    }
    SECTION("u = 0 returns the unconditional covariance") {
        const FouParams p(1.0, 1.0, 0.7);
        const Grid g(1.0, 128);
        auto oracle = gaussian_conditioning_oracle(p, g, 0.0, targets);
        FouCovariance cov(p, 1.0, 128);
        for (std::size_t a = 0; a < targets.size(); ++a)
            for (std::size_t b = 0; b < targets.size(); ++b)
                CHECK(oracle.cond_cov(a, b) ==
                      Catch::Approx(cov(targets[a], targets[b])).margin(1e-12));
    }
    SECTION("conditional covariance agrees across discretizations") {
        const FouParams p(1.0, 1.0, 0.75);
        const Grid g(1.0, 256);
        // snap once on the coarse grid so both routes see identical times
        std::vector<double> snapped;
        for (double t : targets) snapped.push_back(g.node(g.index_of(t, 0.5)));
        auto oracle = gaussian_conditioning_oracle(p, g, u, snapped);
        FouCovariance cov(p, 1.0, 512);  // different resolution than the oracle
        for (std::size_t a = 0; a < snapped.size(); ++a)
            for (std::size_t b = 0; b < snapped.size(); ++b) {
                const double mine = conditional_cov(cov, snapped[a], snapped[b], u);
                const double scale = std::sqrt(oracle.cond_cov(a, a) * oracle.cond_cov(b, b));
                CHECK(std::abs(mine - oracle.cond_cov(a, b)) < 0.02 * scale);
            }
    }
}

TEST_CASE("prediction moments over Monte Carlo") {
    const FouParams p(1.0, 1.0, 0.7);
    const Grid g(1.0, 128);
    const double u = 0.5;
    const std::vector<double> targets{1.0};
    const auto M = discretize(KernelRole::L, p, g);
    const ConditionalMeanWeights weights(p, g, u, targets);
    const std::size_t N = 10000;
    std::vector<double> ms(N), us(N);
    parallel_for_index(N, 4, [&](std::size_t k) {
        auto w = sample_bm(g, {111, k});
        Path path(g, M.apply_increments(w.values), ProcessKind::fou);
        ms[k] = weights.apply(path)[0];
        us[k] = path.values.back();
    });
    SECTION("tower property: predictions are centered") {
        const double se = std::sqrt(testsupport::variance(ms) / N);
        CHECK(std::abs(testsupport::mean(ms)) < 3.0 * se);
    }
    SECTION("variance decomposition") {
        FouCovariance cov(p, 1.0, 128);
        const double rhat = conditional_cov(cov, 1.0, 1.0, u);
        const double lhs = testsupport::variance(us);
        const double rhs = testsupport::variance(ms) + rhat;
        CHECK(std::abs(lhs - rhs) < 3.0 * lhs * std::sqrt(2.0 / N));
    }
}

// Command-line front end: simulate paths, run transfer round trips, compute
// predictions, and execute the built-in verification suites. All outputs are
// CSV plus a meta.txt sufficient to reproduce the run.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/validation error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fou/csv.hpp"
#include "fou/kernels.hpp"
#include "fou/prediction.hpp"
#include "fou/simulation.hpp"
#include "fou/transfer_ops.hpp"
#include "fou/version.hpp"
#include "fou/wiener.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    double theta = 1.0;
    double sigma = 1.0;
    double hurst = 0.5;
    double horizon = 1.0;
    std::size_t steps = 256;
    std::size_t paths = 1;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    std::string out_dir = "fou_out";
};

int usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return 2;
}

int validate(const RunConfig& c) {
    if (!(c.hurst > 0.0 && c.hurst < 1.0)) return usage_error("--hurst must lie in (0,1)");
    if (!(c.theta > 0.0)) return usage_error("--theta must be positive");
    if (!(c.sigma > 0.0)) return usage_error("--sigma must be positive");
    if (!(c.horizon > 0.0)) return usage_error("--T must be positive");
    if (c.steps < 2) return usage_error("--n must be at least 2");
    if (c.paths < 1) return usage_error("--paths must be at least 1");
    return 0;
}

void add_common(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--theta", c.theta, "mean-reversion rate");
    cmd->add_option("--sigma", c.sigma, "volatility");
    cmd->add_option("--hurst", c.hurst, "Hurst index in (0,1)");
    cmd->add_option("--T", c.horizon, "time horizon");
    cmd->add_option("--n", c.steps, "grid step count");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--threads", c.threads, "worker threads");
    cmd->add_option("--out", c.out_dir, "output directory (env FOU_OUTPUT_DIR)");
}

void write_meta(const RunConfig& c, const std::string& command,
                const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    std::ofstream out(fs::path(c.out_dir) / "meta.txt");
    out << "tool=fou_cli " << fou::kVersion << "\n"
        << "command=" << command << "\n"
        << "theta=" << fou::csv::fmt(c.theta) << "\n"
        << "sigma=" << fou::csv::fmt(c.sigma) << "\n"
        << "hurst=" << fou::csv::fmt(c.hurst) << "\n"
        << "T=" << fou::csv::fmt(c.horizon) << "\n"
        << "n=" << c.steps << "\n"
        << "paths=" << c.paths << "\n"
        << "seed=" << c.seed << "\n"
        << "threads=" << c.threads << "\n"
        << "c_H=" << fou::csv::fmt(fou::c_H(c.hurst)) << "\n";
    for (const auto& [k, v] : extra) out << k << '=' << v << "\n";
}

int prepare_out(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) return usage_error("cannot create output directory " + c.out_dir);
    return 0;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(RunConfig& c, const std::string& process) {
    if (int rc = validate(c)) return rc;
    if (process != "bm" && process != "fbm" && process != "fou")
        return usage_error("--process must be one of bm|fbm|fou");
    if (int rc = prepare_out(c)) return rc;

    const fou::Grid grid(c.horizon, c.steps);
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    std::vector<fou::Path> out(c.paths);
    if (process == "bm") {
        fou::parallel_for_index(c.paths, c.threads, [&](std::size_t k) {
            out[k] = fou::sample_bm(grid, {c.seed, k});
        });
    } else {
        const auto role = process == "fbm" ? fou::KernelRole::K : fou::KernelRole::L;
        const auto M = fou::discretize(role, p, grid);
        fou::parallel_for_index(c.paths, c.threads, [&](std::size_t k) {
            auto w = fou::sample_bm(grid, {c.seed, k});
            out[k] = fou::Path(grid, M.apply_increments(w.values),
                               process == "fbm" ? fou::ProcessKind::fbm : fou::ProcessKind::fou);
        });
    }
    fou::csv::write_paths((fs::path(c.out_dir) / "paths.csv").string(), out);
    write_meta(c, "simulate", {{"process", process}});
    return 0;
}

// --- transfer ---------------------------------------------------------------

int cmd_transfer(RunConfig& c, const std::string& input, const std::string& direction,
                 bool round_trip) {
    static const std::map<std::string, std::pair<fou::ProcessKind, fou::ProcessKind>> dirs = {
        {"bm-fbm", {fou::ProcessKind::brownian, fou::ProcessKind::fbm}},
        {"fbm-bm", {fou::ProcessKind::fbm, fou::ProcessKind::brownian}},
        {"bm-fou", {fou::ProcessKind::brownian, fou::ProcessKind::fou}},
        {"fou-bm", {fou::ProcessKind::fou, fou::ProcessKind::brownian}},
        {"fbm-fou", {fou::ProcessKind::fbm, fou::ProcessKind::fou}},
        {"fou-fbm", {fou::ProcessKind::fou, fou::ProcessKind::fbm}},
    };
    const auto it = dirs.find(direction);
    if (it == dirs.end())
        return usage_error(
            "--direction must be one of bm-fbm|fbm-bm|bm-fou|fou-bm|fbm-fou|fou-fbm");
    if (int rc = validate(c)) return rc;

    fou::csv::ParsedPaths parsed;
    try {
        parsed = fou::csv::read_paths(input);
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }
    if (int rc = prepare_out(c)) return rc;

    const fou::Grid grid = parsed.grid;
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    const auto [from, to] = it->second;

    auto transform_one = [&](const fou::Path& x, fou::ProcessKind src,
                             fou::ProcessKind dst) -> fou::Path {
        fou::Path in(x.grid, x.values, src);
        switch (src) {
            case fou::ProcessKind::brownian:
                return dst == fou::ProcessKind::fbm ? fou::fbm_from_bm(in, p.hurst)
                                                    : fou::fou_from_bm(in, p);
            case fou::ProcessKind::fbm:
                return dst == fou::ProcessKind::brownian ? fou::bm_from_fbm(in, p.hurst)
                                                         : fou::fou_from_fbm(in, p);
            default:
                return dst == fou::ProcessKind::brownian
                           ? fou::bm_from_fou(in, p)
                           : fou::fbm_from_bm(fou::bm_from_fou(in, p), p.hurst);
        }
    };

    std::vector<fou::Path> transformed(parsed.values.size());
    std::vector<double> sup_err(parsed.values.size(), 0.0), rel_err(parsed.values.size(), 0.0);
    fou::parallel_for_index(parsed.values.size(), c.threads, [&](std::size_t k) {
        fou::Path x(grid, parsed.values[k], from);
        transformed[k] = transform_one(x, from, to);
        if (round_trip) {
            auto back = transform_one(transformed[k], to, from);
            double err = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                err = std::max(err, std::abs(back.values[i] - x.values[i]));
                scale = std::max(scale, std::abs(x.values[i]));
            }
            sup_err[k] = err;
            rel_err[k] = scale > 0.0 ? err / scale : 0.0;
        }
    });

    fou::csv::write_paths((fs::path(c.out_dir) / "transformed.csv").string(), transformed);
    if (round_trip) {
        auto out = fou::csv::open_out((fs::path(c.out_dir) / "roundtrip.csv").string());
        out << "path_id,sup_error,rel_error\n";
        for (std::size_t k = 0; k < sup_err.size(); ++k)
            out << k << ',' << fou::csv::fmt(sup_err[k]) << ',' << fou::csv::fmt(rel_err[k])
                << '\n';
    }
    write_meta(c, "transfer",
               {{"direction", direction}, {"input", input},
                {"round_trip", round_trip ? "1" : "0"}});
    return 0;
}

// --- predict ----------------------------------------------------------------

int cmd_predict(RunConfig& c, const std::string& input, double u, std::vector<double> targets,
                bool with_oracle) {
    if (int rc = validate(c)) return rc;
    if (targets.empty()) return usage_error("--targets must name at least one time");
    fou::csv::ParsedPaths parsed;
    try {
        parsed = fou::csv::read_paths(input);
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }
    const fou::Grid grid = parsed.grid;
    if (u <= 0.0) return usage_error("empty history: --u must be positive");
    if (u > grid.horizon) return usage_error("--u lies beyond the observed range");
    for (double t : targets)
        if (t < u) return usage_error("--targets must not precede --u");
    if (int rc = prepare_out(c)) return rc;

    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    fou::Path path(grid, parsed.values[0], fou::ProcessKind::fou);
    // snap requested times to the observation grid
    std::vector<double> snapped;
    for (double t : targets)
        snapped.push_back(grid.node(grid.index_of(std::min(t, grid.horizon), 0.5)));

    auto result = fou::predict(path, u, p, snapped);
    fou::ConditioningOracle oracle;
    if (with_oracle) oracle = fou::gaussian_conditioning_oracle(p, grid, u, snapped);

    {
        auto out = fou::csv::open_out((fs::path(c.out_dir) / "prediction.csv").string());
        out << (with_oracle ? "t,mean,var,mean_oracle,var_oracle\n" : "t,mean,var\n");
        const std::size_t ku = grid.index_of(u, 0.5);
        for (std::size_t a = 0; a < snapped.size(); ++a) {
            out << fou::csv::fmt(snapped[a]) << ',' << fou::csv::fmt(result.mean[a]) << ','
                << fou::csv::fmt(result.covariance[a][a]);
            if (with_oracle) {
                double mo = 0.0;
                for (std::size_t i = 0; i < ku; ++i)
                    mo += oracle.weights(i, a) * path.values[i + 1];
                out << ',' << fou::csv::fmt(mo) << ',' << fou::csv::fmt(oracle.cond_cov(a, a));
            }
            out << '\n';
        }
    }
    {
        auto out = fou::csv::open_out((fs::path(c.out_dir) / "prediction_cov.csv").string());
        out << "t1,t2,value\n";
        for (std::size_t a = 0; a < snapped.size(); ++a)
            for (std::size_t b = 0; b < snapped.size(); ++b)
                out << fou::csv::fmt(snapped[a]) << ',' << fou::csv::fmt(snapped[b]) << ','
                    << fou::csv::fmt(result.covariance[a][b]) << '\n';
    }
    write_meta(c, "predict",
               {{"input", input}, {"u", fou::csv::fmt(u)}, {"oracle", with_oracle ? "1" : "0"}});
    return 0;
}

// --- kernel -----------------------------------------------------------------

int cmd_kernel(RunConfig& c, const std::string& role_name) {
    if (int rc = validate(c)) return rc;
    static const std::map<std::string, fou::KernelRole> roles = {
        {"K", fou::KernelRole::K},
        {"K_inv", fou::KernelRole::K_inv},
        {"L", fou::KernelRole::L},
        {"L_inv", fou::KernelRole::L_inv},
    };
    const auto it = roles.find(role_name);
    if (it == roles.end()) return usage_error("--role must be one of K|K_inv|L|L_inv");
    if (int rc = prepare_out(c)) return rc;
    const fou::Grid grid(c.horizon, c.steps);
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    auto M = fou::discretize(it->second, p, grid);
    fou::csv::write_kernel_matrix((fs::path(c.out_dir) / "kernel.csv").string(), M);
    write_meta(c, "kernel", {{"role", role_name}});
    return 0;
}

// --- verify -----------------------------------------------------------------

struct CheckRow {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

void run_gram(const RunConfig& c, std::vector<CheckRow>& rows, double tol) {
    const fou::Grid grid(c.horizon, c.steps);
    auto M = fou::discretize(fou::KernelRole::K, c.hurst, grid);
    const double dt = grid.dt();
    double worst = 0.0;
    for (std::size_t i = 0; i <= grid.steps; ++i)
        for (std::size_t k = 0; k <= i; ++k) {
            double acc = 0.0;
            const double* ri = M.weights.data() + i * grid.steps;
            const double* rk = M.weights.data() + k * grid.steps;
            for (std::size_t j = 0; j < k; ++j) acc += ri[j] * rk[j];
            worst = std::max(
                std::abs(acc * dt - fou::fbm_covariance(c.hurst, grid.node(i), grid.node(k))),
                worst);
        }
    const double rel = worst / fou::fbm_covariance(c.hurst, c.horizon, c.horizon);
    rows.push_back({"gram_K_max_rel_err", rel, tol, rel <= tol});
}

void run_roundtrip(const RunConfig& c, std::vector<CheckRow>& rows, double tol) {
    const fou::Grid grid(c.horizon, c.steps);
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    const auto L = fou::discretize(fou::KernelRole::L, p, grid);
    const auto Li = fou::discretize(fou::KernelRole::L_inv, p, grid);
    double worstW = 0.0, worstU = 0.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(c.paths, 3); ++k) {
        auto w = fou::sample_bm(grid, {c.seed, k});
        auto u = L.apply_increments(w.values);
        auto wh = Li.apply_increments(u);
        auto uh = L.apply_increments(wh);
        double eW = 0.0, sW = 0.0, eU = 0.0, sU = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            eW = std::max(eW, std::abs(wh[i] - w.values[i]));
            sW = std::max(sW, std::abs(w.values[i]));
            eU = std::max(eU, std::abs(uh[i] - u[i]));
            sU = std::max(sU, std::abs(u[i]));
        }
        worstW = std::max(worstW, eW / sW);
        worstU = std::max(worstU, eU / sU);
    }
    rows.push_back({"roundtrip_bm_fou_bm", worstW, tol, worstW <= tol});
    rows.push_back({"roundtrip_fou_bm_fou", worstU, tol, worstU <= tol});
}

void run_isometry(const RunConfig& c, std::vector<CheckRow>& rows, double tol) {
    const fou::Grid grid(c.horizon, c.steps);
    for (bool linear : {false, true}) {
        fou::GridFunction f(grid);
        for (std::size_t i = 0; i < grid.nodes(); ++i) f[i] = linear ? grid.node(i) : 1.0;
        auto ks =
            fou::apply_K_star(fou::Integrand::from_samples(f, fou::ProcessKind::fbm), c.hurst);
        const double nrm =
            fou::l2_norm_sq(ks, c.hurst == 0.5 ? 0.0 : -std::abs(c.hurst - 0.5),
                            c.hurst == 0.5 ? 0.0 : c.hurst - 0.5);
        double gram = 0.0;
        for (std::size_t j = 0; j < grid.steps; ++j)
            for (std::size_t k = 0; k < grid.steps; ++k) {
                const double d2 =
                    fou::fbm_covariance(c.hurst, grid.node(j + 1), grid.node(k + 1)) -
                    fou::fbm_covariance(c.hurst, grid.node(j + 1), grid.node(k)) -
                    fou::fbm_covariance(c.hurst, grid.node(j), grid.node(k + 1)) +
                    fou::fbm_covariance(c.hurst, grid.node(j), grid.node(k));
                gram += f[j] * f[k] * d2;
            }
        const double rel = std::abs(nrm - gram) / gram;
        rows.push_back(
            {std::string("isometry_Kstar_") + (linear ? "t" : "1"), rel, tol, rel <= tol});
    }
}

void run_transfer_integral(const RunConfig& c, std::vector<CheckRow>& rows, double tol) {
    const fou::Grid grid(c.horizon, c.steps);
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    fou::LStarCache cache(grid, p);
    const auto L = fou::discretize(fou::KernelRole::L, p, grid);
    auto w = fou::sample_bm(grid, {c.seed, 0});
    fou::Path u(grid, L.apply_increments(w.values), fou::ProcessKind::fou);
    const char* names[] = {"1", "t", "sin", "step"};
    for (int which = 0; which < 4; ++which) {
        fou::Integrand g = [&] {
            if (which == 3)
                return fou::Integrand::step(grid, c.horizon / 2.0, fou::ProcessKind::fou);
            fou::GridFunction f(grid);
            for (std::size_t i = 0; i < grid.nodes(); ++i) {
                const double t = grid.node(i);
                f[i] = which == 0 ? 1.0 : which == 1 ? t : std::sin(t);
            }
            return fou::Integrand::from_samples(f, fou::ProcessKind::fou);
        }();
        const double lhs = fou::integrate(g, u).value;
        const double rhs = fou::transfer_integral_to_bm(g, p, w, cache).value;
        const double err = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
        rows.push_back(
            {std::string("transfer_integral_g_") + names[which], err, tol, err <= tol});
    }
}

void run_prediction(const RunConfig& c, std::vector<CheckRow>& rows, double tol) {
    const fou::Grid grid(c.horizon, c.steps);
    const fou::FouParams p(c.theta, c.sigma, c.hurst);
    const double u = c.horizon / 2.0;
    std::vector<double> targets;
    for (double f : {0.6, 0.8, 1.0})
        targets.push_back(grid.node(grid.index_of(f * c.horizon, 0.5)));
    auto oracle = fou::gaussian_conditioning_oracle(p, grid, u, targets);
    const auto M = fou::discretize(fou::KernelRole::L, p, grid);
    const std::size_t ku = grid.index_of(u, 0.5);
    const std::size_t npaths = 20;
    std::vector<double> meanerr(targets.size(), 0.0);
    for (std::size_t k = 0; k < npaths; ++k) {
        auto w = fou::sample_bm(grid, {c.seed, k});
        fou::Path path(grid, M.apply_increments(w.values), fou::ProcessKind::fou);
        auto m = fou::conditional_mean(path, u, p, targets);
        for (std::size_t a = 0; a < targets.size(); ++a) {
            double mo = 0.0;
            for (std::size_t i = 0; i < ku; ++i)
                mo += oracle.weights(i, a) * path.values[i + 1];
            meanerr[a] += std::abs(m[a] - mo) / std::sqrt(oracle.cond_cov(a, a)) / npaths;
        }
    }
    for (std::size_t a = 0; a < targets.size(); ++a)
        rows.push_back(
            {"prediction_vs_oracle_t" + std::to_string(a), meanerr[a], tol, meanerr[a] <= tol});
}

int cmd_verify(RunConfig& c, const std::string& suite, double gram_tol, double rt_tol,
               double iso_tol, double ti_tol, double pred_tol) {
    if (int rc = validate(c)) return rc;
    const bool all = suite == "all";
    if (!all && suite != "gram" && suite != "roundtrip" && suite != "isometry" &&
        suite != "transfer-integral" && suite != "prediction")
        return usage_error("unknown suite '" + suite + "'");
    if (int rc = prepare_out(c)) return rc;

    std::vector<CheckRow> rows;
    if (all || suite == "gram") run_gram(c, rows, gram_tol);
    if (all || suite == "roundtrip") run_roundtrip(c, rows, rt_tol);
    if (all || suite == "isometry") run_isometry(c, rows, iso_tol);
    if (all || suite == "transfer-integral") run_transfer_integral(c, rows, ti_tol);
    if (all || suite == "prediction") run_prediction(c, rows, pred_tol);

    auto out = fou::csv::open_out((fs::path(c.out_dir) / "verify_report.csv").string());
    out << "check_name,value,tolerance,pass\n";
    bool ok = true;
    for (const auto& r : rows) {
        out << r.name << ',' << fou::csv::fmt(r.value) << ',' << fou::csv::fmt(r.tolerance)
            << ',' << (r.pass ? 1 : 0) << '\n';
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " value=" << r.value
                  << " tol=" << r.tolerance << "\n";
        ok = ok && r.pass;
    }
    write_meta(c, "verify", {{"suite", suite}});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional Ornstein-Uhlenbeck transfer toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    if (const char* env = std::getenv("FOU_OUTPUT_DIR")) cfg.out_dir = env;

    std::string process = "fou";
    auto* sim = app.add_subcommand("simulate", "sample process paths");
    add_common(sim, cfg);
    sim->add_option("--paths", cfg.paths, "number of paths");
    sim->add_option("--process", process, "bm | fbm | fou");

    std::string input, direction;
    bool round_trip = false;
    auto* tr = app.add_subcommand("transfer", "apply a path transform");
    add_common(tr, cfg);
    tr->add_option("--input", input, "input paths CSV")->required();
    tr->add_option("--direction", direction, "bm-fbm|fbm-bm|bm-fou|fou-bm|fbm-fou|fou-fbm")
        ->required();
    tr->add_flag("--round-trip", round_trip, "also report reconstruction error");

    double base_u = 0.0;
    std::vector<double> targets;
    bool with_oracle = false;
    std::string pred_input;
    auto* pr = app.add_subcommand("predict", "conditional law given the past");
    add_common(pr, cfg);
    pr->add_option("--input", pred_input, "observed path CSV")->required();
    pr->add_option("--u", base_u, "conditioning time")->required();
    pr->add_option("--targets", targets, "prediction times")->required()->delimiter(',');
    pr->add_flag("--oracle", with_oracle, "also run the Gaussian conditioning oracle");

    std::string role_name = "K";
    auto* kn = app.add_subcommand("kernel", "export a discretized kernel matrix as CSV");
    add_common(kn, cfg);
    kn->add_option("--role", role_name, "K | K_inv | L | L_inv");

    std::string suite = "all";
    double gram_tol = 0.01, rt_tol = 0.05, iso_tol = 0.02, ti_tol = 0.05, pred_tol = 0.02;
    auto* vf = app.add_subcommand("verify", "run a verification suite");
    add_common(vf, cfg);
    vf->add_option("--paths", cfg.paths, "sample paths for path-based checks");
    vf->add_option("--suite", suite, "gram|roundtrip|isometry|transfer-integral|prediction|all");
    vf->add_option("--gram-tol", gram_tol, "Gram identity tolerance");
    vf->add_option("--roundtrip-tol", rt_tol, "round-trip tolerance");
    vf->add_option("--isometry-tol", iso_tol, "isometry tolerance");
    vf->add_option("--transfer-tol", ti_tol, "transfer-integral tolerance");
    vf->add_option("--prediction-tol", pred_tol, "prediction tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(cfg, process);
        if (tr->parsed()) return cmd_transfer(cfg, input, direction, round_trip);
        if (pr->parsed()) return cmd_predict(cfg, pred_input, base_u, targets, with_oracle);
        if (kn->parsed()) return cmd_kernel(cfg, role_name);
        if (vf->parsed()) return cmd_verify(cfg, suite, gram_tol, rt_tol, iso_tol, ti_tol, pred_tol);
    } catch (const std::invalid_argument& e) {
        return usage_error(e.what());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

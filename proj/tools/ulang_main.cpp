// Command-line front end: run experiment suites from a config file, validate
// configs, list built-in potentials, and fit log-log slopes on result CSVs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ulang/experiment.hpp"
#include "ulang/mixture.hpp"
#include "ulang/potential.hpp"
#include "ulang/version.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, long long seed,
            int threads, bool override_guard, bool serial) {
    ulang::SuiteConfig cfg = ulang::load_suite_config(config_path);
    if (seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed);
        for (auto& p : cfg.plans) p.seed = cfg.seed ^ ulang::fnv1a(p.name.c_str());
    }
    if (override_guard) cfg.override_stepsize_guard = true;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    ulang::RunContext ctx;
    ctx.mode = serial ? ulang::ExecMode::Serial : ulang::ExecMode::Parallel;
    ctx.out_dir = cfg.out_dir;

    const auto result = ulang::run_suite(cfg, ctx);
    std::printf("%-28s %-20s %s\n", "experiment", "kind", "verdict");
    for (const auto& rep : result.reports) {
        std::printf("%-28s %-20s %s", rep.name.c_str(), ulang::kind_name(rep.kind).c_str(),
                    rep.verdict.pass ? "pass" : "FAIL");
        if (rep.slope) std::printf("  (slope %.4f)", rep.slope->slope);
        if (!rep.verdict.note.empty()) std::printf("  [%s]", rep.verdict.note.c_str());
        std::printf("\n");
    }
    std::printf("results written to %s\n", ctx.out_dir.string().c_str());
    return result.exit_code;
}

int cmd_validate(const std::string& config_path) {
    ulang::SuiteConfig cfg = ulang::load_suite_config(config_path);
    ulang::validate_suite(cfg);
    std::printf("%s: %zu potential(s), %zu experiment(s), ok\n", config_path.c_str(),
                cfg.potentials.size(), cfg.plans.size());
    return 0;
}

int cmd_list_potentials() {
    std::printf("built-in potential kinds:\n");
    std::printf("  quadratic            U(x) = |x|^2/2; fields: dimension, beta\n");
    std::printf("  laplace_gaussian_1d  l1 data terms + gaussian prior on the line;\n");
    std::printf("                       fields: observations[], scale_b, prior_mean, prior_sd,\n");
    std::printf("                       beta, ell1_coeff (default 2/scale_b)\n");
    std::printf("  laplace_gaussian_nd  l1 data terms + gaussian prior in R^d;\n");
    std::printf("                       fields: dimension, observations[][], scale_b,\n");
    std::printf("                       prior_mean[], prior_sd, beta, precision[][] (A^-1,\n");
    std::printf("                       SPD with smallest eigenvalue 1), ell1_coeff\n");

    const ulang::Potential demo = ulang::LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0);
    std::printf("\nexample (laplace_gaussian_1d, observations -1,1):\n%s\n",
                ulang::describe_potential_json(demo).c_str());
    return 0;
}

int cmd_slope(const std::string& csv_path, const std::string& x_col, const std::string& y_col) {
    std::ifstream is(csv_path);
    if (!is) {
        std::fprintf(stderr, "cannot read %s\n", csv_path.c_str());
        return 2;
    }
    // Long format: x values in the "gamma" column, series keyed by metric_name.
    std::string header;
    std::getline(is, header);
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string id, gamma, metric, value;
        std::getline(ss, id, ',');
        std::getline(ss, gamma, ',');
        std::getline(ss, metric, ',');
        std::getline(ss, value, ',');
        if (metric != y_col) continue;
        xs.push_back(std::stod(gamma));
        ys.push_back(std::stod(value));
    }
    if (xs.size() < 4) {
        std::fprintf(stderr, "found %zu rows with metric \"%s\" in %s; need >= 4\n", xs.size(),
                     y_col.c_str(), csv_path.c_str());
        return 2;
    }
    const auto fit = ulang::fit_loglog_slope(xs, ys, 1000, 12345);
    std::printf("%s vs %s: slope %.6f  (95%% CI [%.6f, %.6f], %d points)\n", y_col.c_str(),
                x_col.c_str(), fit.slope, fit.ci_lo, fit.ci_hi, fit.n_points);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unadjusted Langevin sampling experiments"};
    app.set_version_flag("--version", std::string(ulang::version()));
    app.require_subcommand(1);

    std::string config_path, out_dir, csv_path;
    std::string x_col = "gamma", y_col = "w1";
    long long seed = -1;
    int threads = 0;
    bool override_guard = false, serial = false;

    auto* run = app.add_subcommand("run", "run an experiment suite from a config file");
    run->add_option("config", config_path, "config file (JSON)")->required();
    run->add_option("--out-dir", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed, "master seed (overrides config)");
    run->add_option("--threads", threads, "OpenMP thread count (0 = default)");
    run->add_flag("--override-stepsize-guard", override_guard,
                  "run even when a gamma is at or above mu/(2 L^2)");
    run->add_flag("--serial", serial, "use the serial reference driver");

    auto* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("config", config_path, "config file (JSON)")->required();

    app.add_subcommand("list-potentials", "describe the built-in potential kinds");

    auto* slope = app.add_subcommand("slope", "fit a log-log slope on a results CSV");
    slope->add_option("csv", csv_path, "metrics CSV")->required();
    slope->add_option("--x", x_col, "x column (default gamma)");
    slope->add_option("--y", y_col, "metric name (default w1)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run"))
            return cmd_run(config_path, out_dir, seed, threads, override_guard, serial);
        if (app.got_subcommand("validate")) return cmd_validate(config_path);
        if (app.got_subcommand("list-potentials")) return cmd_list_potentials();
        if (app.got_subcommand("slope")) return cmd_slope(csv_path, x_col, y_col);
    } catch (const ulang::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

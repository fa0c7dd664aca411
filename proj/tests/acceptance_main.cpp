// Acceptance suite: full-scale measurement runs, one pass/fail line per
// criterion. Run all criteria with no arguments, or a single one with
// --criterion N (the ctest entries do the latter).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ulang/experiment.hpp"
#include "ulang/metrics.hpp"
#include "ulang/mixture.hpp"
#include "ulang/potential_io.hpp"
#include "ulang/rng.hpp"
#include "ulang/sampler.hpp"

using namespace ulang;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 71;

Potential posterior_1d() { return LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0, 1.0); }

Potential posterior_2d() {
    return LaplaceGaussianNd(2, {{1.0, 0.0}, {-0.5, 0.8}, {0.0, -1.0}}, 1.0, {0.0, 0.0}, 1.0, 1.0);
}

RunContext scratch_ctx(const char* tag) {
    RunContext ctx;
    ctx.mode = ExecMode::Parallel;
    ctx.out_dir = fs::temp_directory_path() / (std::string("ulang_acceptance_") + tag);
    fs::create_directories(ctx.out_dir);
    return ctx;
}

void print_rows(const ExperimentReport& rep, const std::string& metric) {
    for (const auto& r : rep.rows)
        if (r.metric == metric)
            std::printf("    x=%-12.6g %s=%.6g  (se %.2g)\n", r.gamma, metric.c_str(), r.value,
                        r.stderr_);
}

// --- criterion 1: stepsize-bias rate for the 1d piecewise-Lipschitz posterior
bool criterion1() {
    ExperimentPlan plan;
    plan.name = "acc1_bias_1d";
    plan.kind = ExperimentKind::BiasSweep;
    plan.gammas = geometric_grid(1e-2, 1e-4, 6);
    plan.ensemble = 100000;
    plan.init = InitPolicy::Stationary;
    plan.seed = kSeed;
    plan.bootstrap = 400;
    plan.slope_threshold = 0.45;
    plan.ci_exclude_below = 0.25;
    plan.wasserstein_orders = {1};
    const Potential pot = posterior_1d();
    auto ctx = scratch_ctx("c1");
    auto rep = run_bias_sweep(plan, pot, ctx);
    write_metric_csv(ctx.out_dir / "criterion1.csv", rep.rows);
    print_rows(rep, "w1");
    print_rows(rep, "w1_floor");
    std::printf("    slope %.4f  95%% CI [%.4f, %.4f]  (need slope >= 0.45, CI > 0.25)\n",
                rep.slope->slope, rep.slope->ci_lo, rep.slope->ci_hi);
    return rep.verdict.pass;
}

// --- criterion 2: growth-only d=2 strong-error sweep with reference self-check
bool criterion2() {
    ExperimentPlan plan;
    plan.name = "acc2_strong_2d";
    plan.kind = ExperimentKind::StrongErrorSweep;
    plan.gammas = geometric_grid(1e-2, 1e-4, 6);
    plan.ensemble = 160;
    plan.refinement = 64;
    plan.horizon = 6.0;
    plan.seed = kSeed + 2;
    plan.bootstrap = 400;
    plan.slope_threshold = 0.2;
    plan.self_check_gamma = 1e-3;
    plan.self_check_refinement = 256;
    plan.self_check_max_ratio = 0.1;
    plan.init_point = {0.3, 0.2};
    const Potential pot = posterior_2d();
    auto ctx = scratch_ctx("c2");
    auto rep = run_strong_error_sweep(plan, pot, ctx);
    write_metric_csv(ctx.out_dir / "criterion2.csv", rep.rows);
    print_rows(rep, "sup_rms_error");
    print_rows(rep, "self_consistency_ratio");
    std::printf("    slope %.4f  (need >= 0.2); self-consistency ratio %.4f (need <= 0.1)\n",
                rep.slope->slope, rep.verdict.measured["self_consistency_ratio"].get<double>());
    return rep.verdict.pass;
}

// --- criterion 3: 1d strong-error sweep, same grid as criterion 1
bool criterion3() {
    ExperimentPlan plan;
    plan.name = "acc3_strong_1d";
    plan.kind = ExperimentKind::StrongErrorSweep;
    plan.gammas = geometric_grid(1e-2, 1e-4, 6);
    plan.ensemble = 200;
    plan.refinement = 64;
    plan.horizon = 8.0;
    plan.seed = kSeed + 3;
    plan.bootstrap = 400;
    plan.slope_threshold = 0.45;
    plan.self_check_gamma = 1e-3;
    plan.self_check_refinement = 256;
    plan.self_check_max_ratio = 0.1;
    plan.init_point = {0.5};
    const Potential pot = posterior_1d();
    auto ctx = scratch_ctx("c3");
    auto rep = run_strong_error_sweep(plan, pot, ctx);
    write_metric_csv(ctx.out_dir / "criterion3.csv", rep.rows);
    print_rows(rep, "sup_rms_error");
    std::printf("    slope %.4f  (need >= 0.45)\n", rep.slope->slope);
    return rep.verdict.pass;
}

// --- criterion 4: ergodic contraction, exact and statistical
bool criterion4() {
    auto ctx = scratch_ctx("c4");
    bool pass = true;

    ExperimentPlan quad_plan;
    quad_plan.name = "acc4_contraction_quadratic";
    quad_plan.kind = ExperimentKind::Contraction;
    quad_plan.gamma = 0.1;
    quad_plan.n_steps = 80;
    quad_plan.init_point = {1.0};
    quad_plan.init_point_b = {0.0};
    quad_plan.exact_rate_rel_tol = 1e-10;
    quad_plan.seed = kSeed + 4;
    const Potential quad = QuadraticPotential(1);
    auto qrep = run_contraction(quad_plan, quad, ctx);
    write_metric_csv(ctx.out_dir / "criterion4_quadratic.csv", qrep.rows);
    std::printf("    quadratic: slope %.12f vs log(1-gamma*mu) %.12f, rel err %.3g (tol 1e-10)\n",
                qrep.verdict.measured["log_distance_slope"].get<double>(),
                qrep.verdict.measured["expected"].get<double>(),
                qrep.verdict.measured["relative_error"].get<double>());
    pass = pass && qrep.verdict.pass;

    ExperimentPlan post_plan;
    post_plan.name = "acc4_contraction_1d";
    post_plan.kind = ExperimentKind::Contraction;
    post_plan.gamma = 0.01;
    post_plan.n_steps = 400;
    post_plan.ensemble = 1000;
    post_plan.init_point = {2.0};
    post_plan.init_point_b = {-2.0};
    post_plan.min_rate_factor = 0.9;
    post_plan.seed = kSeed + 40;
    auto prep = run_contraction(post_plan, posterior_1d(), ctx);
    write_metric_csv(ctx.out_dir / "criterion4_posterior.csv", prep.rows);
    std::printf("    1d posterior: rate/step %.5f  (need >= %.5f over 1000 paths)\n",
                prep.verdict.measured["rate_per_step"].get<double>(),
                prep.verdict.measured["required_rate"].get<double>());
    return pass && prep.verdict.pass;
}

// --- criterion 5: increment scaling, slope 1.0 +- 0.15
bool criterion5() {
    ExperimentPlan plan;
    plan.name = "acc5_increment";
    plan.kind = ExperimentKind::IncrementScaling;
    plan.gamma = 1e-3;
    plan.ensemble = 4000;
    plan.init = InitPolicy::Stationary;
    plan.l_multipliers = {1, 2, 4, 8, 16};
    plan.slope_band = {0.85, 1.15};
    plan.seed = kSeed + 5;
    plan.bootstrap = 400;
    auto ctx = scratch_ctx("c5");
    auto rep = run_increment_scaling(plan, posterior_1d(), ctx);
    write_metric_csv(ctx.out_dir / "criterion5.csv", rep.rows);
    print_rows(rep, "sup_sq_increment");
    std::printf("    slope %.4f  (need within [0.85, 1.15])\n", rep.slope->slope);
    return rep.verdict.pass;
}

// --- criterion 6: second-moment stability for every shipped potential
bool criterion6() {
    auto ctx = scratch_ctx("c6");
    struct Item {
        const char* name;
        Potential pot;
        std::vector<double> init;
    };
    std::vector<Item> items;
    items.push_back({"quadratic_d2", QuadraticPotential(2), {1.5, -1.0}});
    items.push_back({"laplace_gaussian_1d", posterior_1d(), {1.5}});
    items.push_back({"laplace_gaussian_2d", posterior_2d(), {1.5, -1.0}});
    bool pass = true;
    for (auto& item : items) {
        ExperimentPlan plan;
        plan.name = std::string("acc6_moment_") + item.name;
        plan.kind = ExperimentKind::MomentStability;
        plan.gamma = 0.01;
        plan.ensemble = 1000;
        plan.init_point = item.init;
        plan.horizon_multiple = 10;
        plan.n_windows = 24;
        plan.seed = kSeed + 6;
        auto rep = run_moment_stability(plan, item.pot, ctx);
        write_metric_csv(ctx.out_dir / (plan.name + ".csv"), rep.rows);
        std::printf("    %-22s trend slope %.3g (se %.3g): %s\n", item.name,
                    rep.verdict.measured["trend_slope"].get<double>(),
                    rep.verdict.measured["trend_slope_stderr"].get<double>(),
                    rep.verdict.pass ? "no upward trend" : "UPWARD TREND");
        pass = pass && rep.verdict.pass;
    }
    return pass;
}

// --- criterion 7: crossing-occupation scaling over 1.5 decades
bool criterion7() {
    ExperimentPlan plan;
    plan.name = "acc7_crossing";
    plan.kind = ExperimentKind::CrossingScaling;
    plan.gammas = geometric_grid(1e-2, 3.16e-4, 6);
    plan.ensemble = 2000;
    plan.init = InitPolicy::Stationary;
    plan.window = 1.0;
    plan.sub_level = 3;
    plan.slope_band = {0.4, 0.75};
    plan.seed = kSeed + 7;
    plan.bootstrap = 400;
    auto ctx = scratch_ctx("c7");
    auto rep = run_crossing_scaling(plan, posterior_1d(), ctx);
    write_metric_csv(ctx.out_dir / "criterion7.csv", rep.rows);
    print_rows(rep, "crossing_fraction");
    std::printf("    slope %.4f  (need within [0.4, 0.75])\n", rep.slope->slope);
    return rep.verdict.pass;
}

// --- criterion 8: oracle equivalences
bool criterion8() {
    bool pass = true;

    // wasserstein_1d == brute-force permutation minimum, 1000 instances, n <= 6
    {
        UniformStream u(kSeed + 8, 0, 0);
        std::uint64_t k = 0;
        int failures = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 1 + static_cast<int>(u(k++) * 6);
            std::vector<double> a(n), b(n);
            for (auto& v : a) v = -2.0 + 4.0 * u(k++);
            for (auto& v : b) v = -2.0 + 4.0 * u(k++);
            const double p = (trial % 2) ? 1.0 : 2.0;
            const double fast =
                wasserstein_1d(EmpiricalMeasure::from_1d(a), EmpiricalMeasure::from_1d(b), p);
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            do {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) acc += std::pow(std::fabs(a[i] - b[idx[i]]), p);
                best = std::min(best, acc);
            } while (std::next_permutation(idx.begin(), idx.end()));
            const double brute = std::pow(best / n, 1.0 / p);
            if (std::fabs(fast - brute) > 1e-12 * std::max(1.0, brute)) ++failures;
        }
        std::printf("    wasserstein_1d vs permutation minimum: %d/1000 mismatches\n", failures);
        pass = pass && failures == 0;
    }

    // mixture normalization vs quadrature
    {
        const auto post = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0);
        auto mix = build_mixture(post, 1.0);
        auto f = [&](double t) {
            std::vector<double> x{t};
            return std::exp(-post.value(x));
        };
        const double z_quad = integrate_gk_segmented(f, -14.0, 14.0, post.observations(), 1e-13);
        const double z_mix = std::exp(mix.log_normalizer());
        const double rel = std::fabs(z_mix - z_quad) / z_quad;
        std::printf("    mixture normalizer vs quadrature: rel err %.3g (need <= 1e-8)\n", rel);
        pass = pass && rel <= 1e-8;
    }

    // monotonicity and growth on 1e5 samples per shipped potential
    {
        struct Item {
            const char* name;
            Potential pot;
        };
        std::vector<Item> items;
        items.push_back({"quadratic_d2", QuadraticPotential(2)});
        items.push_back({"laplace_gaussian_1d", posterior_1d()});
        items.push_back({"laplace_gaussian_2d", posterior_2d()});
        for (auto& item : items) {
            const auto mono = check_strong_monotonicity(item.pot, 100000, kSeed + 81);
            const auto grow = check_growth(item.pot, 100000, 100.0, kSeed + 82);
            std::printf("    %-22s monotonicity min ratio %.6f (mu %.3f) %s; growth %s\n",
                        item.name, mono.min_ratio, mono.declared_mu, mono.pass ? "ok" : "FAIL",
                        grow.pass ? "ok" : "FAIL");
            pass = pass && mono.pass && grow.pass;
        }
    }
    return pass;
}

// --- criterion 9: byte-identical default suite re-run
bool criterion9() {
#ifndef ULANG_SOURCE_DIR
    std::printf("    source dir not configured\n");
    return false;
#else
    const fs::path config = fs::path(ULANG_SOURCE_DIR) / "configs" / "default.json";
    auto cfg = load_suite_config(config);
    const fs::path dir1 = fs::temp_directory_path() / "ulang_acceptance_c9_run1";
    const fs::path dir2 = fs::temp_directory_path() / "ulang_acceptance_c9_run2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    RunContext ctx1{ExecMode::Parallel, dir1};
    RunContext ctx2{ExecMode::Parallel, dir2};
    run_suite(cfg, ctx1);
    run_suite(cfg, ctx2);

    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    bool pass = true;
    int compared = 0;
    for (const auto& e : fs::directory_iterator(dir1)) {
        const auto name = e.path().filename().string();
        if (name == "run_meta.json") continue;  // carries wall-clock times
        const bool same = slurp(e.path()) == slurp(dir2 / name);
        if (!same) std::printf("    MISMATCH in %s\n", name.c_str());
        pass = pass && same;
        ++compared;
    }
    std::printf("    %d output files byte-compared across two runs\n", compared);
    return pass && compared > 0;
#endif
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    const std::vector<Criterion> criteria{
        {1, "1d bias rate (W1 vs exact mixture, slope >= 0.45, CI excludes 0.25)", criterion1},
        {2, "d=2 growth-only strong-error rate (slope >= 0.2, self-consistency <= 10%)", criterion2},
        {3, "1d strong-error rate (sup-over-grid L2, slope >= 0.45)", criterion3},
        {4, "ergodic contraction (quadratic exact to 1e-10; posterior rate >= 0.9 mu gamma)",
         criterion4},
        {5, "increment scaling (slope 1.0 +- 0.15)", criterion5},
        {6, "second-moment stability (no upward trend, every shipped potential)", criterion6},
        {7, "crossing-occupation scaling (slope in [0.4, 0.75])", criterion7},
        {8, "oracle equivalences (permutation W1, quadrature, assumption checks)", criterion8},
        {9, "determinism (default suite re-run is byte-identical)", criterion9},
    };

    bool all_pass = true;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::printf("criterion %d: %s\n", c.id, c.title);
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            std::printf("    exception: %s\n", e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d  (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, secs);
        all_pass = all_pass && ok;
    }
    return all_pass ? 0 : 1;
}

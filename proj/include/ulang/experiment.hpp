#pragma once

// Config-driven experiment harness: stepsize-bias sweeps, strong-error
// sweeps against a refined reference chain, synchronous-coupling contraction
// tests, crossing / occupation / increment / moment scaling studies. Each
// runner emits rows for a long-format CSV (experiment_id, gamma,
// metric_name, value, stderr, n_samples) and a verdict.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ulang/potential.hpp"
#include "ulang/sampler.hpp"
#include "ulang/stats.hpp"

namespace ulang {

enum class ExperimentKind {
    BiasSweep,
    StrongErrorSweep,
    Contraction,
    CrossingScaling,
    IncrementScaling,
    MomentStability,
};

std::string kind_name(ExperimentKind k);

struct BurnInPolicy {
    double attenuation = 1e4;        // transient must decay to 1/attenuation of the bias scale
    std::optional<double> d0;        // a-priori initial-distance estimate; default depends on init
    std::optional<std::int64_t> fixed_steps;  // overrides the formula; validated against it

    // n = ceil(log(attenuation * d0 / bias_scale) / (mu * gamma))
    std::int64_t steps(double mu, double gamma, double d0_value, double bias_scale) const;
};

enum class InitPolicy { Point, Stationary };

struct ExperimentPlan {
    std::string name;
    ExperimentKind kind = ExperimentKind::BiasSweep;
    std::string potential_ref;  // key into the config's potential table
    std::vector<double> gammas;  // strictly decreasing where used as a grid
    double gamma = 0.01;         // single-gamma experiments
    std::int64_t ensemble = 1000;
    BurnInPolicy burn_in;
    InitPolicy init = InitPolicy::Point;
    std::vector<double> init_point;  // default: 0.5 * ones
    std::vector<double> init_point_b;  // contraction second start
    std::uint64_t seed = 1;  // filled from config seed ^ hash(name) unless set
    bool override_stepsize_guard = false;

    // bias sweep
    double slope_threshold = 0.45;
    double ci_exclude_below = 0.25;
    int bootstrap = 200;
    std::vector<int> wasserstein_orders{1, 2};
    // d > 1 approximate reference (fine-stepsize run)
    bool allow_approximate_reference = false;
    double reference_gamma_divisor = 16.0;
    double reference_sample_factor = 10.0;
    int sliced_projections = 128;

    // strong error sweep
    int refinement = 64;
    double horizon = 8.0;
    std::optional<double> self_check_gamma;  // default: geometric middle of the grid
    int self_check_refinement = 256;
    double self_check_max_ratio = 0.1;

    // contraction
    std::int64_t n_steps = 400;
    double exact_rate_rel_tol = 1e-10;
    double min_rate_factor = 0.9;

    // crossing / occupation
    double window = 1.0;
    int sub_level = 3;
    std::array<double, 2> slope_band{0.4, 0.75};

    // increment scaling
    std::vector<int> l_multipliers{1, 2, 4, 8, 16};

    // moment stability
    int horizon_multiple = 10;
    int n_windows = 24;
    double trend_z = 2.576;  // one-sided 99%

    // optional trajectory dump (first `dump_chains` chains, every step)
    int dump_chains = 0;
};

struct MetricRow {
    std::string experiment_id;
    double gamma = 0.0;  // the x-value of the row (gamma, l, or n as applicable)
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t n_samples = 0;
};

struct Verdict {
    std::string name;
    std::string kind;
    bool pass = false;
    std::string note;
    nlohmann::json measured;  // numbers backing the verdict
};

struct ExperimentReport {
    std::string name;
    ExperimentKind kind;
    std::vector<MetricRow> rows;
    std::optional<SlopeFit> slope;
    Verdict verdict;
    nlohmann::json provenance;  // seeds, ensemble, commit, wall time
};

struct RunContext {
    ExecMode mode = ExecMode::Parallel;
    std::filesystem::path out_dir;
};

ExperimentReport run_bias_sweep(const ExperimentPlan& plan, const Potential& pot,
                                const RunContext& ctx);
ExperimentReport run_strong_error_sweep(const ExperimentPlan& plan, const Potential& pot,
                                        const RunContext& ctx);
ExperimentReport run_contraction(const ExperimentPlan& plan, const Potential& pot,
                                 const RunContext& ctx);
ExperimentReport run_crossing_scaling(const ExperimentPlan& plan, const Potential& pot,
                                      const RunContext& ctx);
ExperimentReport run_increment_scaling(const ExperimentPlan& plan, const Potential& pot,
                                       const RunContext& ctx);
ExperimentReport run_moment_stability(const ExperimentPlan& plan, const Potential& pot,
                                      const RunContext& ctx);
ExperimentReport run_experiment(const ExperimentPlan& plan, const Potential& pot,
                                const RunContext& ctx);

struct SuiteConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "results";
    bool override_stepsize_guard = false;
    std::map<std::string, nlohmann::json> potentials;
    std::vector<ExperimentPlan> plans;
};

// Parses a config file; throws ConfigError with line/column diagnostics.
SuiteConfig load_suite_config(const std::filesystem::path& path);
SuiteConfig parse_suite_config(const std::string& text, const std::string& origin = "<config>");

// Validates plans against guards and potential availability without running.
void validate_suite(const SuiteConfig& cfg);

struct SuiteResult {
    std::vector<ExperimentReport> reports;
    int exit_code = 0;  // 0 iff every verdict passed
};

// Executes every plan, writes per-experiment CSVs, summary.csv,
// verdicts.json and run_meta.json under out_dir.
SuiteResult run_suite(const SuiteConfig& cfg, const RunContext& ctx);

// Geometric grid, descending from max to min with per_decade points per decade.
std::vector<double> geometric_grid(double max_gamma, double min_gamma, int per_decade);

void write_metric_csv(const std::filesystem::path& file, const std::vector<MetricRow>& rows);
std::string format_double(double v);  // "%.17g", shared by all writers

}  // namespace ulang

#include "ulang/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ulang/metrics.hpp"
#include "ulang/mixture.hpp"
#include "ulang/potential_io.hpp"
#include "ulang/rng.hpp"
#include "ulang/version.hpp"

namespace ulang {

namespace {

double vec_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> default_init_point(const Potential& pot) {
    const auto& inf = potential_info(pot);
    std::vector<double> x(inf.dimension, 0.5);
    const bool on_surface = std::visit([&](const auto& q) { return q.on_discontinuity(x); }, pot);
    if (on_surface)
        for (auto& v : x) v = 0.4817;
    return x;
}

const LaplaceGaussian1d* as_1d_posterior(const Potential& pot) {
    return std::get_if<LaplaceGaussian1d>(&pot);
}

struct InitSource {
    InitPolicy policy;
    std::vector<double> point;
    const PiecewiseGaussianMixture* mixture = nullptr;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::vector<double> operator()(std::int64_t chain) const {
        if (policy == InitPolicy::Point) return point;
        UniformStream u(seed, chan::init | stream, 0);
        return {mixture->quantile(u(static_cast<std::uint64_t>(chain)))};
    }
};

double bias_scale_for(double gamma) { return std::sqrt(gamma); }

// Runs fn(chain) in fixed-size chunks: chains within a chunk may run in
// parallel, chunks are merged serially in order, so reductions are
// independent of thread count.
template <class ChainFn, class MergeFn>
void chunked_chains(std::int64_t n_chains, ExecMode mode, std::int64_t chunk, ChainFn&& fn,
                    MergeFn&& merge) {
    for (std::int64_t base = 0; base < n_chains; base += chunk) {
        const std::int64_t count = std::min(chunk, n_chains - base);
        for_each_chain(count, mode, [&](std::int64_t i) { fn(base + i, i); });
        for (std::int64_t i = 0; i < count; ++i) merge(base + i, i);
    }
}

MetricRow row(const std::string& id, double x, const std::string& metric, double value,
              double se = 0.0, std::int64_t n = 0) {
    return MetricRow{id, x, metric, value, se, n};
}

nlohmann::json base_provenance(const ExperimentPlan& plan) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["ensemble"] = plan.ensemble;
    j["commit"] = build_revision();
    return j;
}

}  // namespace

std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::BiasSweep: return "bias_sweep";
        case ExperimentKind::StrongErrorSweep: return "strong_error_sweep";
        case ExperimentKind::Contraction: return "contraction";
        case ExperimentKind::CrossingScaling: return "crossing_scaling";
        case ExperimentKind::IncrementScaling: return "increment_scaling";
        case ExperimentKind::MomentStability: return "moment_stability";
    }
    return "unknown";
}

std::int64_t BurnInPolicy::steps(double mu, double gamma, double d0_value,
                                 double bias_scale) const {
    const double needed =
        std::log(attenuation * std::max(d0_value, bias_scale) / bias_scale) / (mu * gamma);
    const auto formula = static_cast<std::int64_t>(std::ceil(std::max(needed, 1.0)));
    if (fixed_steps) {
        if (*fixed_steps < formula)
            throw InsufficientBurnIn("burn-in " + std::to_string(*fixed_steps) +
                                     " steps is below the policy minimum " +
                                     std::to_string(formula));
        return *fixed_steps;
    }
    return formula;
}

std::vector<double> geometric_grid(double max_gamma, double min_gamma, int per_decade) {
    if (!(max_gamma > min_gamma) || !(min_gamma > 0.0))
        throw ConfigError("geometric_grid: need max > min > 0");
    if (per_decade < 1) throw ConfigError("geometric_grid: per_decade must be >= 1");
    std::vector<double> g;
    for (int j = 0;; ++j) {
        const double v = max_gamma * std::pow(10.0, -static_cast<double>(j) / per_decade);
        if (v < min_gamma * (1.0 - 1e-9)) break;
        g.push_back(v);
    }
    return g;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_metric_csv(const std::filesystem::path& file, const std::vector<MetricRow>& rows) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot open " + file.string() + " for writing");
    os << "experiment_id,gamma,metric_name,value,stderr,n_samples\n";
    for (const auto& r : rows) {
        os << r.experiment_id << ',' << format_double(r.gamma) << ',' << r.metric << ','
           << format_double(r.value) << ',' << format_double(r.stderr_) << ',' << r.n_samples
           << '\n';
    }
}

// ---------------------------------------------------------------------------
// bias sweep

ExperimentReport run_bias_sweep(const ExperimentPlan& plan, const Potential& pot,
                                const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    const int d = inf.dimension;
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;

    const auto* post1d = as_1d_posterior(pot);
    std::optional<PiecewiseGaussianMixture> mixture;
    const bool quadratic_1d = std::holds_alternative<QuadraticPotential>(pot) && d == 1;
    if (post1d) mixture = build_mixture(*post1d, inf.beta);

    // Reference side of the distance.
    std::optional<PiecewiseGaussianMixture> quad_mix;  // quadratic has a 1-interval exact law
    if (quadratic_1d) {
        LaplaceGaussian1d pure_prior({}, 1.0, 0.0, 1.0, inf.beta);
        quad_mix = build_mixture(pure_prior, inf.beta);
    }
    const PiecewiseGaussianMixture* exact = mixture ? &*mixture : (quad_mix ? &*quad_mix : nullptr);

    EmpiricalMeasure approx_reference;
    if (!exact) {
        if (d == 1 || !plan.allow_approximate_reference)
            throw ReferenceUnavailable(
                "bias_sweep: no exact reference for this potential; enable "
                "allow_approximate_reference to compare against a fine-stepsize run");
        // Fine-stepsize pooled ensemble as the documented approximate reference.
        const double gamma_ref = plan.gammas.back() / plan.reference_gamma_divisor;
        const auto n_ref = static_cast<std::int64_t>(
            std::llround(plan.reference_sample_factor * static_cast<double>(plan.ensemble)));
        SamplerConfig cfg;
        cfg.gamma = gamma_ref;
        cfg.beta = inf.beta;
        cfg.seed = plan.seed;
        const std::vector<double> x0 =
            plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
        cfg.n_steps = plan.burn_in.steps(inf.mu, gamma_ref, 1.0 + vec_norm(x0),
                                         bias_scale_for(gamma_ref));
        std::vector<double> terminals(static_cast<std::size_t>(n_ref) * d);
        for_each_chain(n_ref, ctx.mode, [&](std::int64_t c) {
            SamplerConfig cc = cfg;
            cc.chain_id = chan::reference | static_cast<std::uint64_t>(c);
            std::vector<double> x(x0);
            BrownianPath path(cc.seed, cc.chain_id, d, cc.gamma);
            advance_chain(pot, cc, path, x, 0, cc.n_steps);
            std::copy(x.begin(), x.end(), terminals.begin() + static_cast<std::size_t>(c) * d);
        });
        approx_reference = EmpiricalMeasure::from_rows(std::move(terminals), d);
    }

    InitSource init;
    init.policy = plan.init;
    init.point = plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
    init.seed = plan.seed;
    if (init.policy == InitPolicy::Stationary) {
        if (!exact)
            throw ReferenceUnavailable("bias_sweep: stationary init needs an exact 1d reference");
        init.mixture = exact;
    }

    std::vector<double> w1_values;
    const std::int64_t n_chains = plan.ensemble;
    for (std::size_t gi = 0; gi < plan.gammas.size(); ++gi) {
        const double gamma = plan.gammas[gi];
        SamplerConfig cfg;
        cfg.gamma = gamma;
        cfg.beta = inf.beta;
        cfg.seed = plan.seed;
        const double d0 = plan.burn_in.d0.value_or(
            init.policy == InitPolicy::Stationary ? bias_scale_for(gamma)
                                                  : 1.0 + vec_norm(init.point));
        cfg.n_steps = plan.burn_in.steps(inf.mu, gamma, d0, bias_scale_for(gamma));

        InitSource ginit = init;
        ginit.stream = static_cast<std::uint64_t>(gi) << 32;

        std::vector<double> terminals(static_cast<std::size_t>(n_chains) * d);
        for_each_chain(n_chains, ctx.mode, [&](std::int64_t c) {
            SamplerConfig cc = cfg;
            cc.chain_id = chan::paths | (static_cast<std::uint64_t>(gi) << 32) |
                          static_cast<std::uint64_t>(c);
            std::vector<double> x = ginit(c);
            BrownianPath path(cc.seed, cc.chain_id, d, cc.gamma);
            advance_chain(pot, cc, path, x, 0, cc.n_steps);
            std::copy(x.begin(), x.end(), terminals.begin() + static_cast<std::size_t>(c) * d);
        });

        if (exact) {
            // W1 as the exact area between the empirical CDF and the law.
            const double w1 = w1_empirical_to_mixture(terminals, *exact);
            // Bootstrap stderr over the terminal sample.
            constexpr int kB = 32;
            UniformStream bu(plan.seed, chan::bootstrap | (static_cast<std::uint64_t>(gi) << 32), 0);
            std::vector<double> reps(kB);
            std::vector<double> resample(terminals.size());
            std::uint64_t bctr = 0;
            for (int b = 0; b < kB; ++b) {
                for (std::size_t i = 0; i < terminals.size(); ++i) {
                    const auto j = static_cast<std::size_t>(bu(bctr++) * terminals.size());
                    resample[i] = terminals[std::min(j, terminals.size() - 1)];
                }
                reps[b] = w1_empirical_to_mixture(resample, *exact);
            }
            const double se = std::sqrt(variance(reps));
            rep.rows.push_back(row(plan.name, gamma, "w1", w1, se, n_chains));
            w1_values.push_back(w1);

            // Estimator noise floor at this sample size (exact draws vs law).
            std::vector<double> floor_sample(n_chains);
            for (std::int64_t i = 0; i < n_chains; ++i)
                floor_sample[i] = exact->sample_at(
                    plan.seed ^ 0xf100f100f100f100ull ^ static_cast<std::uint64_t>(gi),
                    static_cast<std::uint64_t>(i));
            rep.rows.push_back(row(plan.name, gamma, "w1_floor",
                                   w1_empirical_to_mixture(floor_sample, *exact), 0.0, n_chains));

            for (int p : plan.wasserstein_orders) {
                if (p == 1) continue;
                auto ref_sample = exact->sample(static_cast<std::size_t>(n_chains),
                                                plan.seed ^ (0xabcd0000ull + gi));
                const double wp =
                    wasserstein_1d(EmpiricalMeasure::from_1d(terminals),
                                   EmpiricalMeasure::from_1d(std::move(ref_sample)),
                                   static_cast<double>(p));
                rep.rows.push_back(
                    row(plan.name, gamma, "w" + std::to_string(p), wp, 0.0, n_chains));
            }
        } else {
            const auto chain_measure = EmpiricalMeasure::from_rows(terminals, d);
            for (int p : plan.wasserstein_orders) {
                const double wp = wasserstein_sliced(chain_measure, approx_reference,
                                                     static_cast<double>(p),
                                                     plan.sliced_projections, plan.seed);
                rep.rows.push_back(
                    row(plan.name, gamma, "w" + std::to_string(p) + "_sliced", wp, 0.0, n_chains));
                if (p == 1 || w1_values.size() < gi + 1) {
                    if (w1_values.size() < gi + 1) w1_values.push_back(wp);
                }
            }
        }
        rep.rows.push_back(row(plan.name, gamma, "burn_in_steps",
                               static_cast<double>(cfg.n_steps), 0.0, n_chains));
    }

    rep.slope = fit_loglog_slope(plan.gammas, w1_values, plan.bootstrap, plan.seed);
    rep.rows.push_back(row(plan.name, 0.0, "slope", rep.slope->slope));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_lo", rep.slope->ci_lo));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_hi", rep.slope->ci_hi));

    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);
    rep.verdict.pass =
        rep.slope->slope >= plan.slope_threshold && rep.slope->ci_lo > plan.ci_exclude_below;
    rep.verdict.measured["slope"] = rep.slope->slope;
    rep.verdict.measured["ci_lo"] = rep.slope->ci_lo;
    rep.verdict.measured["ci_hi"] = rep.slope->ci_hi;
    rep.verdict.measured["slope_threshold"] = plan.slope_threshold;
    rep.verdict.measured["ci_exclude_below"] = plan.ci_exclude_below;
    rep.provenance = base_provenance(plan);
    return rep;
}

// ---------------------------------------------------------------------------
// strong error sweep

namespace {

struct StrongErrorAccum {
    std::vector<double> sum_e2;      // per observation time
    std::vector<double> chain_max;   // per chain
    std::int64_t n_obs = 0;
};

// Streams one coupled (coarse gamma, fine gamma/m) chain; returns the error
// rows at strided observation times plus the chain's max error.
void coupled_stream(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init,
                    int m, std::int64_t stride, std::span<double> e2_out, double& max_e) {
    const int d = potential_dim(pot);
    const double nc = cfg.noise_coeff();
    const double hf = cfg.gamma / m;
    std::vector<double> xc(init.begin(), init.end()), xf(init.begin(), init.end());
    std::vector<double> sub, g(d), inc(d);
    BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
    max_e = 0.0;
    std::size_t oi = 0;
    std::visit(
        [&](const auto& q) {
            for (std::int64_t n = 0; n < cfg.n_steps; ++n) {
                path.subincrements(static_cast<std::uint64_t>(n), m, sub);
                for (int j = 0; j < m; ++j) {
                    q.gradient(xf, g);
                    const double* dw = sub.data() + static_cast<std::size_t>(j) * d;
                    bool ok = true;
                    for (int c = 0; c < d; ++c) {
                        xf[c] = xf[c] - hf * g[c] + nc * dw[c];
                        ok &= std::isfinite(xf[c]);
                    }
                    if (!ok)
                        throw NonFinite("fine chain became non-finite", n * m + j + 1, cfg.chain_id);
                }
                path.increment(static_cast<std::uint64_t>(n), inc);
                q.gradient(xc, g);
                bool ok = true;
                double e2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    xc[c] = xc[c] - cfg.gamma * g[c] + nc * inc[c];
                    ok &= std::isfinite(xc[c]);
                    e2 += (xf[c] - xc[c]) * (xf[c] - xc[c]);
                }
                if (!ok) throw NonFinite("coarse chain became non-finite", n + 1, cfg.chain_id);
                max_e = std::max(max_e, std::sqrt(e2));
                if ((n + 1) % stride == 0 && oi < e2_out.size()) e2_out[oi++] = e2;
            }
        },
        pot);
}

// Two refined chains at gamma/ma and gamma/mb (ma | mb, both powers of two)
// driven by the same path; records |a-b|^2 at strided coarse grid times.
void refined_pair_stream(const Potential& pot, const SamplerConfig& cfg,
                         std::span<const double> init, int ma, int mb, std::int64_t stride,
                         std::span<double> e2_out, double& max_e) {
    const int d = potential_dim(pot);
    const double nc = cfg.noise_coeff();
    const double ha = cfg.gamma / ma, hb = cfg.gamma / mb;
    const int level_a = BrownianPath::levels_for(ma), level_b = BrownianPath::levels_for(mb);
    if ((1 << level_a) != ma || (1 << level_b) != mb)
        throw OutOfRange("refined_pair_stream: refinements must be powers of two");
    std::vector<double> xa(init.begin(), init.end()), xb(init.begin(), init.end());
    std::vector<double> sub_a, sub_b, g(d);
    BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
    max_e = 0.0;
    std::size_t oi = 0;
    std::visit(
        [&](const auto& q) {
            for (std::int64_t n = 0; n < cfg.n_steps; ++n) {
                path.subincrements_pair(static_cast<std::uint64_t>(n), level_a, level_b, sub_a,
                                        sub_b);
                for (int j = 0; j < mb; ++j) {
                    q.gradient(xb, g);
                    const double* dw = sub_b.data() + static_cast<std::size_t>(j) * d;
                    for (int c = 0; c < d; ++c) xb[c] = xb[c] - hb * g[c] + nc * dw[c];
                }
                for (int j = 0; j < ma; ++j) {
                    q.gradient(xa, g);
                    const double* dw = sub_a.data() + static_cast<std::size_t>(j) * d;
                    for (int c = 0; c < d; ++c) xa[c] = xa[c] - ha * g[c] + nc * dw[c];
                }
                double e2 = 0.0;
                bool ok = true;
                for (int c = 0; c < d; ++c) {
                    e2 += (xa[c] - xb[c]) * (xa[c] - xb[c]);
                    ok &= std::isfinite(xa[c]) && std::isfinite(xb[c]);
                }
                if (!ok) throw NonFinite("refined pair became non-finite", n + 1, cfg.chain_id);
                max_e = std::max(max_e, std::sqrt(e2));
                if ((n + 1) % stride == 0 && oi < e2_out.size()) e2_out[oi++] = e2;
            }
        },
        pot);
}

struct StrongErrorPoint {
    double sup_rms = 0.0;
    double sup_rms_se = 0.0;
    double mean_max = 0.0;
    double mean_max_se = 0.0;
};

template <class Stream>
StrongErrorPoint strong_error_point(std::int64_t ensemble, ExecMode mode, std::int64_t n_steps,
                                    std::int64_t stride, Stream&& stream) {
    const auto n_obs = n_steps / stride;
    constexpr std::int64_t kChunk = 128;
    std::vector<double> sum_e2(n_obs, 0.0), sum2_e2(n_obs, 0.0);
    std::vector<double> chain_max(ensemble);
    std::vector<double> chunk_rows(static_cast<std::size_t>(kChunk) * n_obs);
    chunked_chains(
        ensemble, mode, kChunk,
        [&](std::int64_t c, std::int64_t slot) {
            stream(c, std::span<double>{chunk_rows.data() + static_cast<std::size_t>(slot) * n_obs,
                                        static_cast<std::size_t>(n_obs)},
                   chain_max[c]);
        },
        [&](std::int64_t, std::int64_t slot) {
            const double* r = chunk_rows.data() + static_cast<std::size_t>(slot) * n_obs;
            for (std::int64_t t = 0; t < n_obs; ++t) {
                sum_e2[t] += r[t];
                sum2_e2[t] += r[t] * r[t];
            }
        });
    StrongErrorPoint out;
    std::int64_t t_star = 0;
    double best = -1.0;
    for (std::int64_t t = 0; t < n_obs; ++t)
        if (sum_e2[t] > best) {
            best = sum_e2[t];
            t_star = t;
        }
    const double n = static_cast<double>(ensemble);
    const double m2 = sum_e2[t_star] / n;
    out.sup_rms = std::sqrt(m2);
    const double var_e2 = std::max(0.0, sum2_e2[t_star] / n - m2 * m2);
    out.sup_rms_se = out.sup_rms > 0.0 ? std::sqrt(var_e2 / n) / (2.0 * out.sup_rms) : 0.0;
    out.mean_max = mean(chain_max);
    out.mean_max_se = std::sqrt(variance(chain_max) / n);
    return out;
}

}  // namespace

ExperimentReport run_strong_error_sweep(const ExperimentPlan& plan, const Potential& pot,
                                        const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;

    const std::vector<double> x0 =
        plan.init_point.empty() ? default_init_point(pot) : plan.init_point;

    std::vector<double> sup_values;
    double sup_at_self_gamma = 0.0;
    const double self_gamma = plan.self_check_gamma.value_or(
        plan.gammas[plan.gammas.size() / 2]);

    for (std::size_t gi = 0; gi < plan.gammas.size(); ++gi) {
        const double gamma = plan.gammas[gi];
        SamplerConfig cfg;
        cfg.gamma = gamma;
        cfg.beta = inf.beta;
        cfg.seed = plan.seed;
        cfg.n_steps = static_cast<std::int64_t>(std::ceil(plan.horizon / gamma));
        const std::int64_t stride = std::max<std::int64_t>(1, cfg.n_steps / 2000);

        const auto pt = strong_error_point(
            plan.ensemble, ctx.mode, cfg.n_steps, stride,
            [&](std::int64_t c, std::span<double> e2_row, double& mx) {
                SamplerConfig cc = cfg;
                cc.chain_id = chan::paths | (static_cast<std::uint64_t>(gi) << 32) |
                              static_cast<std::uint64_t>(c);
                coupled_stream(pot, cc, x0, plan.refinement, stride, e2_row, mx);
            });
        rep.rows.push_back(row(plan.name, gamma, "sup_rms_error", pt.sup_rms, pt.sup_rms_se,
                               plan.ensemble));
        rep.rows.push_back(row(plan.name, gamma, "mean_max_error", pt.mean_max, pt.mean_max_se,
                               plan.ensemble));
        sup_values.push_back(pt.sup_rms);
        if (std::fabs(gamma - self_gamma) < 1e-12 * self_gamma) sup_at_self_gamma = pt.sup_rms;
    }

    // Reference self-consistency: refinement vs self_check_refinement at one gamma.
    double self_ratio = 0.0;
    {
        const double gamma = self_gamma;
        SamplerConfig cfg;
        cfg.gamma = gamma;
        cfg.beta = inf.beta;
        cfg.seed = plan.seed;
        cfg.n_steps = static_cast<std::int64_t>(std::ceil(plan.horizon / gamma));
        const std::int64_t stride = std::max<std::int64_t>(1, cfg.n_steps / 2000);
        if (sup_at_self_gamma == 0.0) {
            const auto pt = strong_error_point(
                plan.ensemble, ctx.mode, cfg.n_steps, stride,
                [&](std::int64_t c, std::span<double> e2_row, double& mx) {
                    SamplerConfig cc = cfg;
                    cc.chain_id = chan::paths | (0xfeull << 40) | static_cast<std::uint64_t>(c);
                    coupled_stream(pot, cc, x0, plan.refinement, stride, e2_row, mx);
                });
            sup_at_self_gamma = pt.sup_rms;
        }
        const auto ref = strong_error_point(
            plan.ensemble, ctx.mode, cfg.n_steps, stride,
            [&](std::int64_t c, std::span<double> e2_row, double& mx) {
                SamplerConfig cc = cfg;
                cc.chain_id = chan::paths | (0xffull << 40) | static_cast<std::uint64_t>(c);
                refined_pair_stream(pot, cc, x0, plan.refinement, plan.self_check_refinement,
                                    stride, e2_row, mx);
            });
        self_ratio = sup_at_self_gamma > 0.0 ? ref.sup_rms / sup_at_self_gamma : 0.0;
        rep.rows.push_back(row(plan.name, gamma, "self_consistency_error", ref.sup_rms, 0.0,
                               plan.ensemble));
        rep.rows.push_back(
            row(plan.name, gamma, "self_consistency_ratio", self_ratio, 0.0, plan.ensemble));
    }

    rep.slope = fit_loglog_slope(plan.gammas, sup_values, plan.bootstrap, plan.seed);
    rep.rows.push_back(row(plan.name, 0.0, "slope", rep.slope->slope));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_lo", rep.slope->ci_lo));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_hi", rep.slope->ci_hi));

    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);
    const bool self_ok = self_ratio <= plan.self_check_max_ratio;
    rep.verdict.pass = rep.slope->slope >= plan.slope_threshold && self_ok;
    if (!self_ok)
        rep.verdict.note = "reference self-consistency ratio " + format_double(self_ratio) +
                           " exceeds " + format_double(plan.self_check_max_ratio);
    rep.verdict.measured["slope"] = rep.slope->slope;
    rep.verdict.measured["ci_lo"] = rep.slope->ci_lo;
    rep.verdict.measured["slope_threshold"] = plan.slope_threshold;
    rep.verdict.measured["self_consistency_ratio"] = self_ratio;
    rep.provenance = base_provenance(plan);
    return rep;
}

// ---------------------------------------------------------------------------
// contraction

ExperimentReport run_contraction(const ExperimentPlan& plan, const Potential& pot,
                                 const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    const int d = inf.dimension;
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;
    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);

    std::vector<double> ia = plan.init_point.empty() ? std::vector<double>(d, 1.0) : plan.init_point;
    std::vector<double> ib =
        plan.init_point_b.empty() ? std::vector<double>(d, 0.0) : plan.init_point_b;
    const double gamma = plan.gamma;

    if (ia == ib) {
        // Distances are identically zero; nothing to fit.
        SamplerConfig cfg{gamma, plan.n_steps, inf.beta, plan.seed, chan::paths};
        auto pair = run_synchronous_pair(pot, cfg, ia, ib);
        const double max_dist = *std::max_element(pair.distance.begin(), pair.distance.end());
        rep.verdict.pass = max_dist == 0.0;
        rep.verdict.note = "identical initial conditions: distances identically zero, rate fit skipped";
        rep.verdict.measured["max_distance"] = max_dist;
        rep.rows.push_back(row(plan.name, gamma, "max_distance", max_dist, 0.0, plan.n_steps));
        rep.provenance = base_provenance(plan);
        return rep;
    }

    const bool exact_mode = std::holds_alternative<QuadraticPotential>(pot);
    if (exact_mode) {
        // Noise cancels for a linear gradient: distance_n = (1-gamma*mu)^n d_0.
        SamplerConfig cfg{gamma, plan.n_steps, inf.beta, plan.seed, chan::paths};
        auto pair = run_synchronous_pair(pot, cfg, ia, ib);
        std::vector<double> steps(plan.n_steps + 1), logd(plan.n_steps + 1);
        for (std::int64_t n = 0; n <= plan.n_steps; ++n) {
            steps[n] = static_cast<double>(n);
            logd[n] = std::log(pair.distance[n]);
        }
        const LineFit fit = fit_line(steps, logd);
        const double expected = std::log(1.0 - gamma * inf.mu);
        const double rel_err = std::fabs(fit.slope - expected) / std::fabs(expected);
        rep.rows.push_back(row(plan.name, gamma, "log_distance_slope", fit.slope, 0.0, plan.n_steps));
        rep.rows.push_back(row(plan.name, gamma, "expected_log_slope", expected));
        rep.rows.push_back(row(plan.name, gamma, "relative_error", rel_err));
        rep.verdict.pass = rel_err <= plan.exact_rate_rel_tol;
        rep.verdict.measured["log_distance_slope"] = fit.slope;
        rep.verdict.measured["expected"] = expected;
        rep.verdict.measured["relative_error"] = rel_err;
        rep.verdict.measured["tolerance"] = plan.exact_rate_rel_tol;
    } else {
        // Ensemble of synchronous pairs; fit the decay of the mean distance.
        const std::int64_t n = plan.n_steps;
        std::vector<double> sum_dist(n + 1, 0.0);
        constexpr std::int64_t kChunk = 128;
        std::vector<double> chunk_rows(static_cast<std::size_t>(kChunk) * (n + 1));
        chunked_chains(
            plan.ensemble, ctx.mode, kChunk,
            [&](std::int64_t c, std::int64_t slot) {
                SamplerConfig cfg{gamma, n, inf.beta, plan.seed,
                                  chan::paths | static_cast<std::uint64_t>(c)};
                auto pair = run_synchronous_pair(pot, cfg, ia, ib);
                std::copy(pair.distance.begin(), pair.distance.end(),
                          chunk_rows.begin() + static_cast<std::size_t>(slot) * (n + 1));
            },
            [&](std::int64_t, std::int64_t slot) {
                const double* r = chunk_rows.data() + static_cast<std::size_t>(slot) * (n + 1);
                for (std::int64_t t = 0; t <= n; ++t) sum_dist[t] += r[t];
            });
        std::vector<double> steps(n + 1), logd(n + 1);
        for (std::int64_t t = 0; t <= n; ++t) {
            steps[t] = static_cast<double>(t);
            logd[t] = std::log(sum_dist[t] / static_cast<double>(plan.ensemble));
        }
        const LineFit fit = fit_line(steps, logd);
        const double rate = -fit.slope;
        const double required = plan.min_rate_factor * inf.mu * gamma;
        rep.rows.push_back(row(plan.name, gamma, "rate_per_step", rate, fit.slope_stderr,
                               plan.ensemble));
        rep.rows.push_back(row(plan.name, gamma, "required_rate", required));
        for (std::int64_t t = 0; t <= n; t += std::max<std::int64_t>(1, n / 50))
            rep.rows.push_back(row(plan.name, static_cast<double>(t), "mean_distance",
                                   sum_dist[t] / static_cast<double>(plan.ensemble), 0.0,
                                   plan.ensemble));
        rep.verdict.pass = rate >= required;
        rep.verdict.measured["rate_per_step"] = rate;
        rep.verdict.measured["required_rate"] = required;
    }
    rep.provenance = base_provenance(plan);
    return rep;
}

// ---------------------------------------------------------------------------
// crossing scaling

ExperimentReport run_crossing_scaling(const ExperimentPlan& plan, const Potential& pot,
                                      const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    const RegionGeometry* geom_ptr = region_geometry(pot);
    if (!geom_ptr) throw ConfigError("crossing_scaling: potential has no region geometry");
    if (plan.sub_level < 3)
        throw MissingCheckpoints("crossing_scaling: sub_level must be >= 3 (resolution gamma/8)");
    const RegionGeometry& geom = *geom_ptr;
    const int d = inf.dimension;
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;

    const auto* post1d = as_1d_posterior(pot);
    std::optional<PiecewiseGaussianMixture> mixture;
    if (post1d) mixture = build_mixture(*post1d, inf.beta);

    InitSource init;
    init.policy = mixture ? plan.init : InitPolicy::Point;
    init.point = plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
    init.seed = plan.seed;
    if (init.policy == InitPolicy::Stationary) init.mixture = &*mixture;

    std::vector<double> fractions;
    for (std::size_t gi = 0; gi < plan.gammas.size(); ++gi) {
        const double gamma = plan.gammas[gi];
        SamplerConfig cfg;
        cfg.gamma = gamma;
        cfg.beta = inf.beta;
        cfg.seed = plan.seed;
        const double d0 = init.policy == InitPolicy::Stationary ? bias_scale_for(gamma)
                                                                : 1.0 + vec_norm(init.point);
        const std::int64_t n_burn = plan.burn_in.steps(inf.mu, gamma, d0, bias_scale_for(gamma));
        const auto n_win = static_cast<std::int64_t>(std::llround(plan.window / gamma));

        InitSource ginit = init;
        ginit.stream = static_cast<std::uint64_t>(gi) << 32;

        std::vector<double> per_chain(plan.ensemble);
        for_each_chain(plan.ensemble, ctx.mode, [&](std::int64_t c) {
            SamplerConfig cc = cfg;
            cc.chain_id = chan::paths | (static_cast<std::uint64_t>(gi) << 32) |
                          static_cast<std::uint64_t>(c);
            std::vector<double> x = ginit(c);
            BrownianPath path(cc.seed, cc.chain_id, d, cc.gamma);
            advance_chain(pot, cc, path, x, 0, n_burn);
            const DenseWindow win =
                sample_dense_window(pot, cc, path, x, n_burn, n_win, plan.sub_level);
            per_chain[c] = crossing_fraction(win, geom).fraction;
        });
        const double m = mean(per_chain);
        const double se = std::sqrt(variance(per_chain) / static_cast<double>(plan.ensemble));
        rep.rows.push_back(row(plan.name, gamma, "crossing_fraction", m, se, plan.ensemble));
        fractions.push_back(m);
    }

    rep.slope = fit_loglog_slope(plan.gammas, fractions, plan.bootstrap, plan.seed);
    rep.rows.push_back(row(plan.name, 0.0, "slope", rep.slope->slope));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_lo", rep.slope->ci_lo));
    rep.rows.push_back(row(plan.name, 0.0, "slope_ci_hi", rep.slope->ci_hi));

    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);
    rep.verdict.pass =
        rep.slope->slope >= plan.slope_band[0] && rep.slope->slope <= plan.slope_band[1];
    rep.verdict.measured["slope"] = rep.slope->slope;
    rep.verdict.measured["band_lo"] = plan.slope_band[0];
    rep.verdict.measured["band_hi"] = plan.slope_band[1];
    rep.provenance = base_provenance(plan);
    return rep;
}

// ---------------------------------------------------------------------------
// increment scaling

ExperimentReport run_increment_scaling(const ExperimentPlan& plan, const Potential& pot,
                                       const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    const int d = inf.dimension;
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;

    const double gamma = plan.gamma;
    const int max_mult = *std::max_element(plan.l_multipliers.begin(), plan.l_multipliers.end());
    const std::size_t n_l = plan.l_multipliers.size();

    const auto* post1d = as_1d_posterior(pot);
    std::optional<PiecewiseGaussianMixture> mixture;
    if (post1d) mixture = build_mixture(*post1d, inf.beta);
    InitSource init;
    init.policy = mixture ? plan.init : InitPolicy::Point;
    init.point = plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
    init.seed = plan.seed;
    if (init.policy == InitPolicy::Stationary) init.mixture = &*mixture;

    const double d0 = init.policy == InitPolicy::Stationary ? bias_scale_for(gamma)
                                                            : 1.0 + vec_norm(init.point);
    SamplerConfig cfg;
    cfg.gamma = gamma;
    cfg.beta = inf.beta;
    cfg.seed = plan.seed;
    const std::int64_t n_burn = plan.burn_in.steps(inf.mu, gamma, d0, bias_scale_for(gamma));

    // Per chain, one window of the largest length; sups over nested prefixes
    // give every l at once.
    std::vector<double> sums(n_l, 0.0), sums2(n_l, 0.0);
    constexpr std::int64_t kChunk = 256;
    std::vector<double> chunk_rows(static_cast<std::size_t>(kChunk) * n_l);
    chunked_chains(
        plan.ensemble, ctx.mode, kChunk,
        [&](std::int64_t c, std::int64_t slot) {
            SamplerConfig cc = cfg;
            cc.chain_id = chan::paths | static_cast<std::uint64_t>(c);
            std::vector<double> x = init(c);
            BrownianPath path(cc.seed, cc.chain_id, d, cc.gamma);
            advance_chain(pot, cc, path, x, 0, n_burn);
            const std::vector<double> start(x);
            const DenseWindow win =
                sample_dense_window(pot, cc, path, x, n_burn, max_mult, plan.sub_level);
            double* out = chunk_rows.data() + static_cast<std::size_t>(slot) * n_l;
            double running = 0.0;
            std::size_t li = 0;
            auto sq_dist = [&](std::span<const double> p) {
                double s = 0.0;
                for (int cc2 = 0; cc2 < d; ++cc2) s += (p[cc2] - start[cc2]) * (p[cc2] - start[cc2]);
                return s;
            };
            for (int step = 0; step < max_mult; ++step) {
                for (int j = 0; j < win.subs - 1; ++j)
                    running = std::max(running, sq_dist(win.sub(step, j)));
                running = std::max(running, sq_dist(win.grid(step + 1)));
                while (li < n_l && plan.l_multipliers[li] == step + 1) out[li++] = running;
            }
        },
        [&](std::int64_t, std::int64_t slot) {
            const double* r = chunk_rows.data() + static_cast<std::size_t>(slot) * n_l;
            for (std::size_t i = 0; i < n_l; ++i) {
                sums[i] += r[i];
                sums2[i] += r[i] * r[i];
            }
        });

    std::vector<double> ls(n_l), means_(n_l);
    for (std::size_t i = 0; i < n_l; ++i) {
        ls[i] = gamma * plan.l_multipliers[i];
        means_[i] = sums[i] / static_cast<double>(plan.ensemble);
        const double v =
            std::max(0.0, sums2[i] / static_cast<double>(plan.ensemble) - means_[i] * means_[i]);
        rep.rows.push_back(row(plan.name, ls[i], "sup_sq_increment", means_[i],
                               std::sqrt(v / static_cast<double>(plan.ensemble)), plan.ensemble));
    }

    rep.slope = fit_loglog_slope(ls, means_, plan.bootstrap, plan.seed);
    rep.rows.push_back(row(plan.name, 0.0, "slope", rep.slope->slope));
    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);
    rep.verdict.pass =
        rep.slope->slope >= plan.slope_band[0] && rep.slope->slope <= plan.slope_band[1];
    rep.verdict.measured["slope"] = rep.slope->slope;
    rep.verdict.measured["band_lo"] = plan.slope_band[0];
    rep.verdict.measured["band_hi"] = plan.slope_band[1];
    rep.provenance = base_provenance(plan);
    return rep;
}

// ---------------------------------------------------------------------------
// moment stability

ExperimentReport run_moment_stability(const ExperimentPlan& plan, const Potential& pot,
                                      const RunContext& ctx) {
    const auto& inf = potential_info(pot);
    const int d = inf.dimension;
    ExperimentReport rep;
    rep.name = plan.name;
    rep.kind = plan.kind;

    const double gamma = plan.gamma;
    const std::vector<double> x0 =
        plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
    const std::int64_t n_burn =
        plan.burn_in.steps(inf.mu, gamma, 1.0 + vec_norm(x0), bias_scale_for(gamma));
    const std::int64_t n_total = n_burn * plan.horizon_multiple;
    const int n_windows = plan.n_windows;
    const std::int64_t span = n_total - n_burn;

    std::vector<double> win_sums(n_windows, 0.0);
    std::vector<std::int64_t> win_counts(n_windows, 0);
    constexpr std::int64_t kChunk = 256;
    std::vector<double> chunk_rows(static_cast<std::size_t>(kChunk) * n_windows);
    chunked_chains(
        plan.ensemble, ctx.mode, kChunk,
        [&](std::int64_t c, std::int64_t slot) {
            SamplerConfig cfg{gamma, n_total, inf.beta, plan.seed,
                              chan::paths | static_cast<std::uint64_t>(c)};
            std::vector<double> x(x0);
            BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
            double* bins = chunk_rows.data() + static_cast<std::size_t>(slot) * n_windows;
            std::fill(bins, bins + n_windows, 0.0);
            advance_chain(pot, cfg, path, x, 0, n_total,
                          [&](std::int64_t step, std::span<const double> s) {
                              if (step < n_burn) return;
                              const auto w = std::min<std::int64_t>(
                                  (step - n_burn) * n_windows / span, n_windows - 1);
                              double sq = 0.0;
                              for (double v : s) sq += v * v;
                              bins[w] += sq;
                          });
        },
        [&](std::int64_t, std::int64_t slot) {
            const double* r = chunk_rows.data() + static_cast<std::size_t>(slot) * n_windows;
            for (int w = 0; w < n_windows; ++w) win_sums[w] += r[w];
        });
    for (std::int64_t step = n_burn; step < n_total; ++step)
        ++win_counts[std::min<std::int64_t>((step - n_burn) * n_windows / span, n_windows - 1)];

    std::vector<double> centers(n_windows), win_means(n_windows);
    for (int w = 0; w < n_windows; ++w) {
        centers[w] = static_cast<double>(w) + 0.5;
        win_means[w] =
            win_sums[w] / (static_cast<double>(win_counts[w]) * static_cast<double>(plan.ensemble));
        rep.rows.push_back(row(plan.name, centers[w], "window_mean_sq_norm", win_means[w], 0.0,
                               plan.ensemble));
    }
    const LineFit fit = fit_line(centers, win_means);
    rep.rows.push_back(row(plan.name, gamma, "trend_slope", fit.slope, fit.slope_stderr,
                           plan.ensemble));

    rep.verdict.name = plan.name;
    rep.verdict.kind = kind_name(plan.kind);
    rep.verdict.pass = fit.slope <= plan.trend_z * fit.slope_stderr;
    rep.verdict.measured["trend_slope"] = fit.slope;
    rep.verdict.measured["trend_slope_stderr"] = fit.slope_stderr;
    rep.verdict.measured["z"] = plan.trend_z;
    rep.verdict.measured["burn_in_steps"] = n_burn;
    rep.verdict.measured["total_steps"] = n_total;
    rep.provenance = base_provenance(plan);
    return rep;
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const Potential& pot,
                                const RunContext& ctx) {
    switch (plan.kind) {
        case ExperimentKind::BiasSweep: return run_bias_sweep(plan, pot, ctx);
        case ExperimentKind::StrongErrorSweep: return run_strong_error_sweep(plan, pot, ctx);
        case ExperimentKind::Contraction: return run_contraction(plan, pot, ctx);
        case ExperimentKind::CrossingScaling: return run_crossing_scaling(plan, pot, ctx);
        case ExperimentKind::IncrementScaling: return run_increment_scaling(plan, pot, ctx);
        case ExperimentKind::MomentStability: return run_moment_stability(plan, pot, ctx);
    }
    throw ConfigError("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

ExperimentKind parse_kind(const std::string& s) {
    if (s == "bias_sweep") return ExperimentKind::BiasSweep;
    if (s == "strong_error_sweep") return ExperimentKind::StrongErrorSweep;
    if (s == "contraction") return ExperimentKind::Contraction;
    if (s == "crossing_scaling") return ExperimentKind::CrossingScaling;
    if (s == "increment_scaling") return ExperimentKind::IncrementScaling;
    if (s == "moment_stability") return ExperimentKind::MomentStability;
    throw ConfigError("unknown experiment kind \"" + s + "\"");
}

std::pair<int, int> line_col_of_offset(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

ExperimentPlan parse_plan(const nlohmann::json& j, std::uint64_t suite_seed) {
    ExperimentPlan p;
    p.name = j.at("name").get<std::string>();
    p.kind = parse_kind(j.at("kind").get<std::string>());
    p.potential_ref = j.at("potential").get<std::string>();
    p.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>()
                                : suite_seed ^ fnv1a(p.name.c_str());

    if (j.contains("gammas")) {
        p.gammas = j.at("gammas").get<std::vector<double>>();
    } else if (j.contains("gamma_grid")) {
        const auto& g = j.at("gamma_grid");
        p.gammas = geometric_grid(g.at("max").get<double>(), g.at("min").get<double>(),
                                  g.value("per_decade", 6));
    }
    for (std::size_t i = 0; i + 1 < p.gammas.size(); ++i)
        if (!(p.gammas[i] > p.gammas[i + 1]))
            throw ConfigError("experiment \"" + p.name + "\": gamma grid must be strictly decreasing");
    if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
    if (j.contains("ensemble")) p.ensemble = j.at("ensemble").get<std::int64_t>();
    if (j.contains("burn_in")) {
        const auto& b = j.at("burn_in");
        p.burn_in.attenuation = b.value("attenuation", 1e4);
        if (b.contains("d0")) p.burn_in.d0 = b.at("d0").get<double>();
        if (b.contains("fixed_steps")) p.burn_in.fixed_steps = b.at("fixed_steps").get<std::int64_t>();
    }
    if (j.contains("init")) {
        const std::string s = j.at("init").get<std::string>();
        if (s == "point")
            p.init = InitPolicy::Point;
        else if (s == "stationary")
            p.init = InitPolicy::Stationary;
        else
            throw ConfigError("experiment \"" + p.name + "\": init must be point|stationary");
    }
    if (j.contains("init_point")) p.init_point = j.at("init_point").get<std::vector<double>>();
    if (j.contains("init_point_b")) p.init_point_b = j.at("init_point_b").get<std::vector<double>>();
    p.override_stepsize_guard = j.value("override_stepsize_guard", false);

    p.slope_threshold = j.value("slope_threshold", p.slope_threshold);
    p.ci_exclude_below = j.value("ci_exclude_below", p.ci_exclude_below);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    if (j.contains("wasserstein_orders"))
        p.wasserstein_orders = j.at("wasserstein_orders").get<std::vector<int>>();
    p.allow_approximate_reference = j.value("allow_approximate_reference", false);
    p.reference_gamma_divisor = j.value("reference_gamma_divisor", p.reference_gamma_divisor);
    p.reference_sample_factor = j.value("reference_sample_factor", p.reference_sample_factor);
    p.sliced_projections = j.value("sliced_projections", p.sliced_projections);

    p.refinement = j.value("refinement", p.refinement);
    p.horizon = j.value("horizon", p.horizon);
    if (j.contains("self_check_gamma")) p.self_check_gamma = j.at("self_check_gamma").get<double>();
    p.self_check_refinement = j.value("self_check_refinement", p.self_check_refinement);
    p.self_check_max_ratio = j.value("self_check_max_ratio", p.self_check_max_ratio);

    if (j.contains("n_steps")) p.n_steps = j.at("n_steps").get<std::int64_t>();
    p.exact_rate_rel_tol = j.value("exact_rate_rel_tol", p.exact_rate_rel_tol);
    p.min_rate_factor = j.value("min_rate_factor", p.min_rate_factor);

    p.window = j.value("window", p.window);
    p.sub_level = j.value("sub_level", p.sub_level);
    if (j.contains("slope_band")) {
        const auto b = j.at("slope_band").get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("slope_band must have two entries");
        p.slope_band = {b[0], b[1]};
    }
    if (j.contains("l_multipliers")) p.l_multipliers = j.at("l_multipliers").get<std::vector<int>>();
    p.horizon_multiple = j.value("horizon_multiple", p.horizon_multiple);
    p.n_windows = j.value("n_windows", p.n_windows);
    p.trend_z = j.value("trend_z", p.trend_z);
    p.dump_chains = j.value("dump_chains", 0);
    return p;
}

}  // namespace

SuiteConfig parse_suite_config(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = line_col_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          e.what());
    }
    SuiteConfig cfg;
    try {
        cfg.seed = j.value("seed", 1ull);
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        cfg.override_stepsize_guard = j.value("override_stepsize_guard", false);
        if (j.contains("potentials"))
            for (const auto& [name, pj] : j.at("potentials").items()) cfg.potentials[name] = pj;
        if (j.contains("experiments"))
            for (const auto& ej : j.at("experiments")) cfg.plans.push_back(parse_plan(ej, cfg.seed));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

SuiteConfig load_suite_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_suite_config(ss.str(), path.string());
}

namespace {

Potential resolve_potential(const SuiteConfig& cfg, const ExperimentPlan& plan) {
    const auto it = cfg.potentials.find(plan.potential_ref);
    if (it == cfg.potentials.end())
        throw ConfigError("experiment \"" + plan.name + "\" references unknown potential \"" +
                          plan.potential_ref + "\"");
    return load_potential(it->second);
}

void enforce_guard(const SuiteConfig& cfg, const ExperimentPlan& plan, const PotentialInfo& inf) {
    if (cfg.override_stepsize_guard || plan.override_stepsize_guard) return;
    const double guard = inf.max_stable_gamma();
    std::vector<double> to_check = plan.gammas;
    if (plan.kind == ExperimentKind::Contraction || plan.kind == ExperimentKind::IncrementScaling ||
        plan.kind == ExperimentKind::MomentStability)
        to_check.push_back(plan.gamma);
    for (double g : to_check)
        if (!(g < guard))
            throw ConfigError("experiment \"" + plan.name + "\": gamma " + format_double(g) +
                              " is not below the stepsize guard mu/(2 L^2) = " +
                              format_double(guard) +
                              "; set override_stepsize_guard to run anyway");
}

}  // namespace

void validate_suite(const SuiteConfig& cfg) {
    for (const auto& plan : cfg.plans) {
        const Potential pot = resolve_potential(cfg, plan);
        enforce_guard(cfg, plan, potential_info(pot));
        const bool needs_grid = plan.kind == ExperimentKind::BiasSweep ||
                                plan.kind == ExperimentKind::StrongErrorSweep ||
                                plan.kind == ExperimentKind::CrossingScaling;
        if (needs_grid && plan.gammas.size() < 4)
            throw ConfigError("experiment \"" + plan.name + "\": needs a gamma grid (>= 4 points)");
    }
}

SuiteResult run_suite(const SuiteConfig& cfg, const RunContext& ctx) {
    validate_suite(cfg);
    std::filesystem::create_directories(ctx.out_dir);

    SuiteResult result;
    nlohmann::json meta;
    meta["seed"] = cfg.seed;
    meta["commit"] = build_revision();
#ifdef _OPENMP
    meta["threads"] = ctx.mode == ExecMode::Parallel ? omp_get_max_threads() : 1;
#else
    meta["threads"] = 1;
#endif
    nlohmann::json wall;

    std::vector<MetricRow> summary_rows;
    nlohmann::json verdicts = nlohmann::json::array();
    bool all_pass = true;

    for (const auto& plan : cfg.plans) {
        const Potential pot = resolve_potential(cfg, plan);
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentReport rep = run_experiment(plan, pot, ctx);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        wall[plan.name] = secs;

        write_metric_csv(ctx.out_dir / (plan.name + ".csv"), rep.rows);

        if (plan.dump_chains > 0) {
            const double g = plan.gammas.empty() ? plan.gamma : plan.gammas.front();
            SamplerConfig dc{g, std::min<std::int64_t>(2000, static_cast<std::int64_t>(
                                                                 std::ceil(1.0 / g))),
                             potential_info(pot).beta, plan.seed, chan::paths};
            const std::vector<double> x0 =
                plan.init_point.empty() ? default_init_point(pot) : plan.init_point;
            auto ens = run_ensemble(pot, dc, plan.dump_chains,
                                    [&](std::int64_t) { return x0; }, ctx.mode, true);
            std::ofstream os(ctx.out_dir / (plan.name + "_trajectories.csv"), std::ios::binary);
            write_trajectory_csv(os, ens);
        }

        nlohmann::json v;
        v["name"] = rep.verdict.name;
        v["kind"] = rep.verdict.kind;
        v["pass"] = rep.verdict.pass;
        if (!rep.verdict.note.empty()) v["note"] = rep.verdict.note;
        v["measured"] = rep.verdict.measured;
        v["provenance"] = rep.provenance;
        verdicts.push_back(v);
        all_pass = all_pass && rep.verdict.pass;

        MetricRow srow;
        srow.experiment_id = rep.name;
        srow.metric = kind_name(rep.kind) + (rep.verdict.pass ? ":pass" : ":fail");
        if (rep.slope) {
            srow.value = rep.slope->slope;
            srow.stderr_ = 0.5 * (rep.slope->ci_hi - rep.slope->ci_lo);
        }
        summary_rows.push_back(srow);
        result.reports.push_back(std::move(rep));
    }

    write_metric_csv(ctx.out_dir / "summary.csv", summary_rows);
    {
        std::ofstream os(ctx.out_dir / "verdicts.json", std::ios::binary);
        os << verdicts.dump(2) << "\n";
    }
    {
        meta["wall_time_seconds"] = wall;
        std::ofstream os(ctx.out_dir / "run_meta.json", std::ios::binary);
        os << meta.dump(2) << "\n";
    }
    result.exit_code = all_pass ? 0 : 1;
    return result;
}

}  // namespace ulang

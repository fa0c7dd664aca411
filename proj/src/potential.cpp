#include "ulang/potential.hpp"

#include <algorithm>
#include <cmath>

#include "ulang/potential_io.hpp"
#include "ulang/rng.hpp"

namespace ulang {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Cyclic Jacobi eigenvalue range for a small symmetric matrix.
std::pair<double, double> sym_eigen_range(std::vector<double> a, int n) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    double lo = a[0], hi = a[0];
    for (int i = 0; i < n; ++i) {
        lo = std::min(lo, a[i * n + i]);
        hi = std::max(hi, a[i * n + i]);
    }
    return {lo, hi};
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
}

}  // namespace

QuadraticPotential::QuadraticPotential(int dim, double beta) : dim_(dim) {
    if (dim < 1) throw DimensionMismatch("QuadraticPotential: dim must be >= 1");
    require_positive(beta, "beta");
    info_.dimension = dim;
    info_.beta = beta;
    info_.mu = 1.0;
    info_.lipschitz = 1.0;
    info_.growth_m = 0.0;
    info_.growth_l = 1.0;
    info_.regularity = RegularityClass::PiecewiseLipschitz;
}

double QuadraticPotential::value(std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += v * v;
    return 0.5 * s;
}

LaplaceGaussian1d::LaplaceGaussian1d(std::vector<double> observations, double scale_b,
                                     double prior_mean, double prior_sd, double beta,
                                     std::optional<double> ell1_coeff)
    : obs_(std::move(observations)),
      b_(scale_b),
      prior_mean_(prior_mean),
      prior_sd_(prior_sd),
      ell1_(ell1_coeff.value_or(2.0 / scale_b)) {
    require_positive(scale_b, "scale b");
    require_positive(prior_sd, "prior sd");
    require_positive(beta, "beta");
    if (ell1_coeff && !(*ell1_coeff > 0.0)) throw ConfigError("ell1 coefficient must be > 0");
    std::sort(obs_.begin(), obs_.end());
    geom_ = RegionGeometry::for_points(obs_);

    const double inv_var = 1.0 / (prior_sd_ * prior_sd_);
    info_.dimension = 1;
    info_.beta = beta;
    info_.mu = inv_var;
    info_.lipschitz = inv_var;  // gradient is affine with slope 1/sd^2 on each interval
    info_.growth_m = ell1_ * static_cast<double>(obs_.size()) + std::fabs(prior_mean_) * inv_var;
    info_.growth_l = inv_var;
    info_.regularity = RegularityClass::PiecewiseLipschitz;
}

double LaplaceGaussian1d::value(std::span<const double> x) const {
    const double t = x[0];
    double s = 0.0;
    for (double y : obs_) s += std::fabs(t - y);
    const double d = t - prior_mean_;
    return ell1_ * s + d * d / (2.0 * prior_sd_ * prior_sd_);
}

LaplaceGaussianNd::LaplaceGaussianNd(int dim, std::vector<std::vector<double>> observations,
                                     double scale_b, std::vector<double> prior_mean, double prior_sd,
                                     double beta, std::optional<std::vector<double>> precision,
                                     std::optional<double> ell1_coeff)
    : dim_(dim),
      obs_(std::move(observations)),
      b_(scale_b),
      prior_sd_(prior_sd),
      ell1_(ell1_coeff.value_or(2.0 / scale_b)),
      prior_mean_(std::move(prior_mean)) {
    if (dim < 2) throw DimensionMismatch("LaplaceGaussianNd: dim must be >= 2 (use LaplaceGaussian1d)");
    require_positive(scale_b, "scale b");
    require_positive(prior_sd, "prior sd");
    require_positive(beta, "beta");
    if (static_cast<int>(prior_mean_.size()) != dim)
        throw DimensionMismatch("LaplaceGaussianNd: prior mean has wrong dimension");
    for (const auto& y : obs_)
        if (static_cast<int>(y.size()) != dim)
            throw DimensionMismatch("LaplaceGaussianNd: observation has wrong dimension");

    double lambda_min = 1.0, lambda_max = 1.0;
    if (precision) {
        precision_ = std::move(*precision);
        if (precision_.size() != static_cast<std::size_t>(dim) * dim)
            throw DimensionMismatch("LaplaceGaussianNd: precision matrix has wrong size");
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j)
                if (std::fabs(precision_[i * dim + j] - precision_[j * dim + i]) > 1e-12)
                    throw ConfigError("precision matrix must be symmetric");
        auto [lo, hi] = sym_eigen_range(precision_, dim);
        if (!(lo > 0.0)) throw ConfigError("precision matrix must be positive definite");
        if (std::fabs(lo - 1.0) > 1e-8)
            throw ConfigError("precision matrix must have smallest eigenvalue 1");
        lambda_min = lo;
        lambda_max = hi;
    } else {
        precision_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int i = 0; i < dim; ++i) precision_[i * dim + i] = 1.0;
    }

    const double inv_var = 1.0 / (prior_sd_ * prior_sd_);
    double mean_norm = norm2(prior_mean_);
    info_.dimension = dim;
    info_.beta = beta;
    info_.mu = lambda_min * inv_var;
    info_.lipschitz = std::nullopt;
    info_.growth_m = ell1_ * static_cast<double>(obs_.size()) + lambda_max * inv_var * mean_norm;
    info_.growth_l = lambda_max * inv_var;
    info_.regularity = RegularityClass::GrowthOnly;
}

void LaplaceGaussianNd::gradient(std::span<const double> x, std::span<double> out) const {
    const double inv_var = 1.0 / (prior_sd_ * prior_sd_);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim_; ++j) acc += precision_[i * dim_ + j] * (x[j] - prior_mean_[j]);
        out[i] = acc * inv_var;
    }
    for (const auto& y : obs_) {
        double r2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double d = x[i] - y[i];
            r2 += d * d;
        }
        if (r2 == 0.0) continue;  // tie-break: drop the singular summand
        const double inv_r = 1.0 / std::sqrt(r2);
        for (int i = 0; i < dim_; ++i) out[i] += ell1_ * (x[i] - y[i]) * inv_r;
    }
}

bool LaplaceGaussianNd::on_discontinuity(std::span<const double> x) const {
    for (const auto& y : obs_) {
        bool same = true;
        for (int i = 0; i < dim_; ++i)
            if (x[i] != y[i]) {
                same = false;
                break;
            }
        if (same) return true;
    }
    return false;
}

double LaplaceGaussianNd::value(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& y : obs_) {
        double r2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double d = x[i] - y[i];
            r2 += d * d;
        }
        s += std::sqrt(r2);
    }
    double quad = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim_; ++j) acc += precision_[i * dim_ + j] * (x[j] - prior_mean_[j]);
        quad += (x[i] - prior_mean_[i]) * acc;
    }
    return ell1_ * s + quad / (2.0 * prior_sd_ * prior_sd_);
}

std::vector<double> evaluate_gradient(const Potential& p, std::span<const double> x) {
    const int d = potential_dim(p);
    if (static_cast<int>(x.size()) != d) throw DimensionMismatch("evaluate_gradient: dim mismatch");
    const bool on_surface =
        std::visit([&](const auto& q) { return q.on_discontinuity(x); }, p);
    if (on_surface) throw OnDiscontinuity("evaluate_gradient: x lies on a discontinuity surface");
    std::vector<double> g(d);
    std::visit([&](const auto& q) { q.gradient(x, g); }, p);
    for (double v : g)
        if (!std::isfinite(v)) throw NonFinite("evaluate_gradient: non-finite gradient", 0, 0);
    return g;
}

void gradient_tiebreak(const Potential& p, std::span<const double> x, std::span<double> out) {
    std::visit([&](const auto& q) { q.gradient(x, out); }, p);
}

double potential_value(const Potential& p, std::span<const double> x) {
    return std::visit([&](const auto& q) { return q.value(x); }, p);
}

MonotonicityReport check_strong_monotonicity(
    const std::function<void(std::span<const double>, std::span<double>)>& grad, int dim,
    double declared_mu, long n_pairs, std::uint64_t rng_seed, double sample_radius,
    const std::function<bool(std::span<const double>)>& skip) {
    GaussianStream g(rng_seed, 0x6d6f6eull, 0);
    std::vector<double> x(dim), y(dim), gx(dim), gy(dim);
    MonotonicityReport rep;
    rep.declared_mu = declared_mu;
    rep.n_pairs = n_pairs;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    std::uint64_t idx = 0;
    const double scale = sample_radius / 3.0;
    for (long k = 0; k < n_pairs; ++k) {
        double d2;
        do {  // resample pairs landing on a surface or coinciding
            for (int i = 0; i < dim; ++i) x[i] = scale * g(idx++);
            for (int i = 0; i < dim; ++i) y[i] = scale * g(idx++);
            d2 = 0.0;
            for (int i = 0; i < dim; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
        } while (d2 == 0.0 || (skip && (skip(x) || skip(y))));
        grad(x, gx);
        grad(y, gy);
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += (gx[i] - gy[i]) * (x[i] - y[i]);
        rep.min_ratio = std::min(rep.min_ratio, dot / d2);
    }
    rep.pass = rep.min_ratio >= declared_mu * (1.0 - 1e-9);
    return rep;
}

GrowthReport check_growth(const std::function<void(std::span<const double>, std::span<double>)>& grad,
                          int dim, double declared_m, double declared_l, long n_samples,
                          double radius, std::uint64_t rng_seed,
                          const std::function<bool(std::span<const double>)>& skip) {
    if (!(radius > 0.0)) throw OutOfRange("check_growth: radius must be > 0");
    GaussianStream g(rng_seed, 0x67726f77ull, 0);
    UniformStream u(rng_seed, 0x67726f77ull, 1);
    std::vector<double> x(dim), gx(dim);
    GrowthReport rep;
    rep.declared_l = declared_l;
    rep.n_samples = n_samples;
    rep.max_ratio = -std::numeric_limits<double>::infinity();
    std::uint64_t gi = 0, ui = 0;
    constexpr double eps = 1e-12;
    for (long k = 0; k < n_samples; ++k) {
        do {  // uniform in the ball of the given radius
            double n2 = 0.0;
            for (int i = 0; i < dim; ++i) {
                x[i] = g(gi++);
                n2 += x[i] * x[i];
            }
            const double r = radius * std::pow(u(ui++), 1.0 / dim) / std::max(std::sqrt(n2), eps);
            for (int i = 0; i < dim; ++i) x[i] *= r;
        } while (skip && skip(x));
        grad(x, gx);
        double gn = 0.0, xn = 0.0;
        for (int i = 0; i < dim; ++i) {
            gn += gx[i] * gx[i];
            xn += x[i] * x[i];
        }
        const double ratio = (std::sqrt(gn) - declared_m) / std::max(std::sqrt(xn), eps);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    rep.pass = rep.max_ratio <= declared_l * (1.0 + 1e-9) + 1e-12;
    return rep;
}

MonotonicityReport check_strong_monotonicity(const Potential& p, long n_pairs,
                                             std::uint64_t rng_seed) {
    const auto& inf = potential_info(p);
    auto grad = [&p](std::span<const double> x, std::span<double> out) {
        gradient_tiebreak(p, x, out);
    };
    auto skip = [&p](std::span<const double> x) {
        return std::visit([&](const auto& q) { return q.on_discontinuity(x); }, p);
    };
    return check_strong_monotonicity(grad, inf.dimension, inf.mu, n_pairs, rng_seed, 10.0, skip);
}

GrowthReport check_growth(const Potential& p, long n_samples, double radius, std::uint64_t rng_seed) {
    const auto& inf = potential_info(p);
    auto grad = [&p](std::span<const double> x, std::span<double> out) {
        gradient_tiebreak(p, x, out);
    };
    auto skip = [&p](std::span<const double> x) {
        return std::visit([&](const auto& q) { return q.on_discontinuity(x); }, p);
    };
    return check_growth(grad, inf.dimension, inf.growth_m, inf.growth_l, n_samples, radius, rng_seed,
                        skip);
}

Potential load_potential_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("potential config parse error: ") + e.what());
    }
    return load_potential(j);
}

Potential load_potential(const nlohmann::json& j) {
    if (!j.contains("kind")) throw ConfigError("potential config needs a \"kind\" tag");
    const std::string kind = j.at("kind").get<std::string>();
    const double beta = j.value("beta", 1.0);
    if (kind == "quadratic") {
        return QuadraticPotential(j.value("dimension", 1), beta);
    }
    if (kind == "laplace_gaussian_1d") {
        std::optional<double> ell1;
        if (j.contains("ell1_coeff")) ell1 = j.at("ell1_coeff").get<double>();
        return LaplaceGaussian1d(j.at("observations").get<std::vector<double>>(),
                                 j.at("scale_b").get<double>(), j.value("prior_mean", 0.0),
                                 j.at("prior_sd").get<double>(), beta, ell1);
    }
    if (kind == "laplace_gaussian_nd") {
        const int dim = j.at("dimension").get<int>();
        std::optional<std::vector<double>> prec;
        if (j.contains("precision")) {
            const auto rows = j.at("precision").get<std::vector<std::vector<double>>>();
            std::vector<double> flat;
            for (const auto& r : rows)
                for (double v : r) flat.push_back(v);
            prec = std::move(flat);
        }
        std::optional<double> ell1;
        if (j.contains("ell1_coeff")) ell1 = j.at("ell1_coeff").get<double>();
        return LaplaceGaussianNd(dim, j.at("observations").get<std::vector<std::vector<double>>>(),
                                 j.at("scale_b").get<double>(),
                                 j.value("prior_mean", std::vector<double>(dim, 0.0)),
                                 j.at("prior_sd").get<double>(), beta, std::move(prec), ell1);
    }
    throw ConfigError("unknown potential kind: " + kind);
}

std::string describe_potential_json(const Potential& p) {
    nlohmann::json j;
    const auto& inf = potential_info(p);
    j["dimension"] = inf.dimension;
    j["beta"] = inf.beta;
    j["mu"] = inf.mu;
    if (inf.lipschitz) j["lipschitz"] = *inf.lipschitz;
    j["growth_m"] = inf.growth_m;
    j["growth_l"] = inf.growth_l;
    j["regularity"] =
        inf.regularity == RegularityClass::PiecewiseLipschitz ? "piecewise_lipschitz" : "growth_only";
    j["max_stable_gamma"] = inf.max_stable_gamma();
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, QuadraticPotential>) {
                j["kind"] = "quadratic";
            } else if constexpr (std::is_same_v<T, LaplaceGaussian1d>) {
                j["kind"] = "laplace_gaussian_1d";
                j["observations"] = q.observations();
                j["ell1_coeff"] = q.ell1_coeff();
            } else {
                j["kind"] = "laplace_gaussian_nd";
                j["observations"] = q.observations();
                j["ell1_coeff"] = q.ell1_coeff();
            }
        },
        p);
    return j.dump(2);
}

}  // namespace ulang

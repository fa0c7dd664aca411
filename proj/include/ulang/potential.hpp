#pragma once

// Potentials with almost-everywhere gradients, their regularity metadata,
// and numeric checks of the structural assumptions (strong monotonicity of
// the gradient, linear growth). Three built-ins are shipped:
//
//   QuadraticPotential    U(x) = |x|^2 / 2            (smooth baseline)
//   LaplaceGaussian1d     U(t) = a*sum|t-y_i| + (t-m0)^2/(2s^2)
//   LaplaceGaussianNd     U(t) = a*sum|t-y_i| + (t-m0)'P(t-m0)/(2s^2)
//
// The l1 coefficient `a` defaults to 2/b for scale b but is an explicit
// parameter: the posterior density reading exp(-b^{-1} sum|.|) corresponds
// to a = 1/b, the potential reading to a = 2/b, and both are legitimate; the
// coefficient is data, not a convention baked into code.
//
// Gradients at points exactly on a discontinuity: the checked entry point
// evaluate_gradient() throws OnDiscontinuity; the raw per-type gradient()
// used inside samplers applies the tie-break (sign(0) = 0 in 1d, the
// singular summand dropped in d >= 2), which changes nothing off a
// Lebesgue-null set.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ulang/errors.hpp"
#include "ulang/geometry.hpp"

namespace ulang {

enum class RegularityClass { PiecewiseLipschitz, GrowthOnly };

struct PotentialInfo {
    int dimension = 1;
    double beta = 1.0;
    double mu = 1.0;                    // strong monotonicity constant
    std::optional<double> lipschitz;    // piecewise Lipschitz constant, if any
    double growth_m = 0.0;              // |grad U(x)| <= growth_m + growth_l |x|
    double growth_l = 1.0;
    RegularityClass regularity = RegularityClass::PiecewiseLipschitz;

    // Stepsize guard mu / (2 L^2); L is the piecewise Lipschitz constant when
    // present, the growth slope otherwise.
    double max_stable_gamma() const {
        const double l = lipschitz ? *lipschitz : growth_l;
        return mu / (2.0 * l * l);
    }
};

class QuadraticPotential {
public:
    explicit QuadraticPotential(int dim, double beta = 1.0);
    int dimension() const { return dim_; }
    void gradient(std::span<const double> x, std::span<double> out) const {
        for (int i = 0; i < dim_; ++i) out[i] = x[i];
    }
    bool on_discontinuity(std::span<const double>) const { return false; }
    double value(std::span<const double> x) const;
    const PotentialInfo& info() const { return info_; }

private:
    int dim_;
    PotentialInfo info_;
};

class LaplaceGaussian1d {
public:
    // observations need not arrive sorted; they are sorted on construction.
    LaplaceGaussian1d(std::vector<double> observations, double scale_b, double prior_mean,
                      double prior_sd, double beta = 1.0,
                      std::optional<double> ell1_coeff = std::nullopt);

    int dimension() const { return 1; }
    void gradient(std::span<const double> x, std::span<double> out) const {
        const double t = x[0];
        double s = 0.0;
        for (double y : obs_) s += static_cast<double>(t > y) - static_cast<double>(t < y);
        out[0] = ell1_ * s + (t - prior_mean_) / (prior_sd_ * prior_sd_);
    }
    bool on_discontinuity(std::span<const double> x) const {
        for (double y : obs_)
            if (x[0] == y) return true;
        return false;
    }
    double value(std::span<const double> x) const;
    const PotentialInfo& info() const { return info_; }
    const RegionGeometry& geometry() const { return geom_; }

    const std::vector<double>& observations() const { return obs_; }
    double ell1_coeff() const { return ell1_; }
    double scale_b() const { return b_; }
    double prior_mean() const { return prior_mean_; }
    double prior_sd() const { return prior_sd_; }
    double beta() const { return info_.beta; }

private:
    std::vector<double> obs_;
    double b_, prior_mean_, prior_sd_, ell1_;
    RegionGeometry geom_;
    PotentialInfo info_;
};

class LaplaceGaussianNd {
public:
    // precision null -> identity. Must be symmetric positive definite with
    // smallest eigenvalue 1 (validated to 1e-8).
    LaplaceGaussianNd(int dim, std::vector<std::vector<double>> observations, double scale_b,
                      std::vector<double> prior_mean, double prior_sd, double beta = 1.0,
                      std::optional<std::vector<double>> precision_row_major = std::nullopt,
                      std::optional<double> ell1_coeff = std::nullopt);

    int dimension() const { return dim_; }
    void gradient(std::span<const double> x, std::span<double> out) const;
    bool on_discontinuity(std::span<const double> x) const;
    double value(std::span<const double> x) const;
    const PotentialInfo& info() const { return info_; }

    const std::vector<std::vector<double>>& observations() const { return obs_; }
    double ell1_coeff() const { return ell1_; }

private:
    int dim_;
    std::vector<std::vector<double>> obs_;
    double b_, prior_sd_, ell1_;
    std::vector<double> prior_mean_;
    std::vector<double> precision_;  // row-major dim x dim
    PotentialInfo info_;
};

using Potential = std::variant<QuadraticPotential, LaplaceGaussian1d, LaplaceGaussianNd>;

inline const PotentialInfo& potential_info(const Potential& p) {
    return std::visit([](const auto& q) -> const PotentialInfo& { return q.info(); }, p);
}
inline int potential_dim(const Potential& p) { return potential_info(p).dimension; }

// Region geometry of the discontinuity set; nullptr when the potential has
// none (smooth, or growth-only without explicit surfaces).
inline const RegionGeometry* region_geometry(const Potential& p) {
    if (const auto* lg = std::get_if<LaplaceGaussian1d>(&p)) return &lg->geometry();
    return nullptr;
}

// Checked gradient: throws OnDiscontinuity when x sits exactly on a surface.
std::vector<double> evaluate_gradient(const Potential& p, std::span<const double> x);
// Tie-break gradient, usable everywhere.
void gradient_tiebreak(const Potential& p, std::span<const double> x, std::span<double> out);
double potential_value(const Potential& p, std::span<const double> x);

struct MonotonicityReport {
    double min_ratio = 0.0;  // min over pairs of <g(x)-g(y), x-y> / |x-y|^2
    double declared_mu = 0.0;
    long n_pairs = 0;
    bool pass = false;
};

struct GrowthReport {
    double max_ratio = 0.0;  // max over samples of (|g(x)| - m) / max(|x|, eps)
    double declared_l = 0.0;
    long n_samples = 0;
    bool pass = false;
};

// Generic forms: any gradient function can be checked against declared
// constants (tests use these with adversarial potentials).
MonotonicityReport check_strong_monotonicity(
    const std::function<void(std::span<const double>, std::span<double>)>& grad, int dim,
    double declared_mu, long n_pairs, std::uint64_t rng_seed, double sample_radius = 10.0,
    const std::function<bool(std::span<const double>)>& skip = nullptr);
GrowthReport check_growth(const std::function<void(std::span<const double>, std::span<double>)>& grad,
                          int dim, double declared_m, double declared_l, long n_samples,
                          double radius, std::uint64_t rng_seed,
                          const std::function<bool(std::span<const double>)>& skip = nullptr);

MonotonicityReport check_strong_monotonicity(const Potential& p, long n_pairs, std::uint64_t rng_seed);
GrowthReport check_growth(const Potential& p, long n_samples, double radius, std::uint64_t rng_seed);

// Config loading ("kind" tag + parameters); validates positivity and, for
// d-dimensional posteriors, precision-matrix symmetry / positive
// definiteness / unit smallest eigenvalue.
Potential load_potential_json(const std::string& json_text);
std::string describe_potential_json(const Potential& p);

}  // namespace ulang

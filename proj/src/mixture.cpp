#include "ulang/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ulang/rng.hpp"
#include "ulang/stats.hpp"

namespace ulang {

PiecewiseGaussianMixture build_mixture(const LaplaceGaussian1d& post, double beta) {
    if (!(beta > 0.0) || std::isinf(beta)) throw OutOfRange("build_mixture: beta must be finite > 0");
    const auto& y = post.observations();
    const int k = static_cast<int>(y.size());
    const double a = post.ell1_coeff();
    const double mu0 = post.prior_mean();
    const double sigma = post.prior_sd();

    PiecewiseGaussianMixture mix;
    mix.breaks_ = y;
    mix.sd_ = sigma / std::sqrt(beta);
    mix.means_.resize(k + 1);
    mix.lo_std_.resize(k + 1);
    mix.hi_std_.resize(k + 1);
    mix.cdf_lo_.resize(k + 1);
    mix.mass_.resize(k + 1);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> log_mass(k + 1);
    constexpr double half_log_two_pi = 0.91893853320467274178032973640562;

    for (int r = 0; r <= k; ++r) {
        const double lo = r == 0 ? -inf : y[r - 1];
        const double hi = r == k ? inf : y[r];
        // On this interval sum|t - y_i| is affine with slope (2r - k).
        const double m = mu0 - a * sigma * sigma * static_cast<double>(2 * r - k);
        mix.means_[r] = m;
        // Anchor inside the interval, near the mean, for a stable offset.
        const double lo_c = std::isfinite(lo) ? lo : hi - 1.0;
        const double hi_c = std::isfinite(hi) ? hi : lo + 1.0;
        const double anchor = (k == 0) ? m : std::min(std::max(m, lo_c), hi_c);
        const double u_anchor = beta * post.value(std::span<const double>{&anchor, 1});
        const double zer = (anchor - m) / mix.sd_;
        const double offset = u_anchor - 0.5 * zer * zer;

        const double lo_s = std::isfinite(lo) ? (lo - m) / mix.sd_ : -inf;
        const double hi_s = std::isfinite(hi) ? (hi - m) / mix.sd_ : inf;
        mix.lo_std_[r] = lo_s;
        mix.hi_std_[r] = hi_s;
        mix.cdf_lo_[r] = std::isfinite(lo_s) ? normal_cdf(lo_s) : 0.0;
        mix.mass_[r] = normal_mass(lo_s, hi_s);
        log_mass[r] = -offset + std::log(mix.mass_[r]) + std::log(mix.sd_) + half_log_two_pi;
    }

    mix.log_z_ = log_sum_exp(log_mass);
    if (!std::isfinite(mix.log_z_))
        throw NumericalUnderflow("build_mixture: all interval masses underflowed");
    mix.weights_.resize(k + 1);
    mix.cum_weights_.resize(k + 1);
    double cum = 0.0;
    for (int r = 0; r <= k; ++r) {
        mix.weights_[r] = std::exp(log_mass[r] - mix.log_z_);
        cum += mix.weights_[r];
        mix.cum_weights_[r] = cum;
    }
    // Normalize out the last rounding crumbs so the weights sum to 1.
    const double total = mix.cum_weights_[k];
    for (int r = 0; r <= k; ++r) {
        mix.weights_[r] /= total;
        mix.cum_weights_[r] /= total;
    }
    mix.cum_weights_[k] = 1.0;
    return mix;
}

namespace {

int interval_of(const std::vector<double>& breaks, double x) {
    return static_cast<int>(std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
}

}  // namespace

double PiecewiseGaussianMixture::pdf(double x) const {
    const int r = interval_of(breaks_, x);
    if (mass_[r] == 0.0 || weights_[r] == 0.0) return 0.0;
    const double z = (x - means_[r]) / sd_;
    return weights_[r] * normal_pdf(z) / (sd_ * mass_[r]);
}

double PiecewiseGaussianMixture::cdf(double x) const {
    const int r = interval_of(breaks_, x);
    double below = r == 0 ? 0.0 : cum_weights_[r - 1];
    if (mass_[r] == 0.0 || weights_[r] == 0.0) return below;
    const double z = (x - means_[r]) / sd_;
    const double part = normal_mass(lo_std_[r], std::min(z, hi_std_[r]));
    return below + weights_[r] * std::min(part / mass_[r], 1.0);
}

double PiecewiseGaussianMixture::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw OutOfDomain("quantile: p must be in (0,1)");
    const int k = static_cast<int>(breaks_.size());
    int r = static_cast<int>(std::lower_bound(cum_weights_.begin(), cum_weights_.end(), p) -
                             cum_weights_.begin());
    r = std::min(r, k);
    while (r < k && weights_[r] == 0.0) ++r;
    const double below = r == 0 ? 0.0 : cum_weights_[r - 1];
    const double frac = std::min(std::max((p - below) / weights_[r], 0.0), 1.0);
    const double target = cdf_lo_[r] + frac * mass_[r];
    double x;
    if (target <= 0.0) {
        x = breaks_.empty() ? means_[r] - 8.0 * sd_ : (r == 0 ? breaks_[0] - 8.0 * sd_ : breaks_[r - 1]);
    } else if (target >= 1.0) {
        x = breaks_.empty() ? means_[r] + 8.0 * sd_ : (r == k ? breaks_[k - 1] + 8.0 * sd_ : breaks_[r]);
    } else {
        x = means_[r] + sd_ * normal_quantile(target);
    }
    // Newton polish against the full CDF.
    for (int it = 0; it < 3; ++it) {
        const double f = cdf(x) - p;
        const double d = pdf(x);
        if (d <= 0.0) break;
        const double step = f / d;
        x -= step;
        if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
    }
    return x;
}

double PiecewiseGaussianMixture::sample_at(std::uint64_t seed, std::uint64_t index) const {
    UniformStream u(seed, chan::reference, 0x6d697855ull);
    return quantile(u(index));
}

std::vector<double> PiecewiseGaussianMixture::sample(std::size_t n, std::uint64_t seed) const {
    UniformStream u(seed, chan::reference, 0x6d697855ull);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = quantile(u(i));
    return out;
}

namespace {

// Raw moments E[T^j], j = 0..4, of a standard normal truncated to [a, b]
// with mass z = Phi(b) - Phi(a): M_j = (j-1) M_{j-2} + (a^{j-1}phi(a) -
// b^{j-1}phi(b)) / z.
void truncated_std_moments(double a, double b, double z, double out[5]) {
    const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
    const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
    auto pow_edge = [](double edge, int p, double pdf_val) {
        if (pdf_val == 0.0) return 0.0;  // infinite edge: x^p phi(x) -> 0
        double v = pdf_val;
        for (int i = 0; i < p; ++i) v *= edge;
        return v;
    };
    out[0] = 1.0;
    out[1] = (pa - pb) / z;
    for (int j = 2; j <= 4; ++j)
        out[j] = (j - 1) * out[j - 2] + (pow_edge(a, j - 1, pa) - pow_edge(b, j - 1, pb)) / z;
}

double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
    return v;
}

}  // namespace

double PiecewiseGaussianMixture::moment(int p) const {
    if (p < 1 || p > 4) throw OutOfDomain("moment: order must be in {1,2,3,4}");
    double total = 0.0;
    for (std::size_t r = 0; r < means_.size(); ++r) {
        if (weights_[r] == 0.0 || mass_[r] == 0.0) continue;
        double m[5];
        truncated_std_moments(lo_std_[r], hi_std_[r], mass_[r], m);
        // E[(mean + sd T)^p]
        double acc = 0.0;
        for (int i = 0; i <= p; ++i)
            acc += binomial(p, i) * std::pow(means_[r], p - i) * std::pow(sd_, i) * m[i];
        total += weights_[r] * acc;
    }
    return total;
}

double PiecewiseGaussianMixture::variance() const {
    const double m1 = moment(1);
    return moment(2) - m1 * m1;
}

double PiecewiseGaussianMixture::partial_first_moment(double x) const {
    double total = 0.0;
    const int rx = interval_of(breaks_, x);
    for (int r = 0; r <= rx; ++r) {
        if (weights_[r] == 0.0 || mass_[r] == 0.0) continue;
        const double hi_s = std::min((x - means_[r]) / sd_, hi_std_[r]);
        const double lo_s = lo_std_[r];
        if (!(hi_s > lo_s)) continue;
        const double pa = std::isfinite(lo_s) ? normal_pdf(lo_s) : 0.0;
        const double pb = normal_pdf(hi_s);
        const double seg_mass = normal_mass(lo_s, hi_s);
        // int t phi_{m,s}(t) dt over the segment, relative to interval mass
        total += weights_[r] * (means_[r] * seg_mass - sd_ * (pb - pa)) / mass_[r];
    }
    return total;
}

std::string PiecewiseGaussianMixture::summary_json() const {
    nlohmann::json j;
    j["breakpoints"] = breaks_;
    j["means"] = means_;
    j["sd"] = sd_;
    j["weights"] = weights_;
    j["log_normalizer"] = log_z_;
    j["normalizer"] = std::exp(log_z_);
    return j.dump(2);
}

double w1_empirical_to_mixture(std::vector<double> samples, const PiecewiseGaussianMixture& mix) {
    if (samples.empty()) throw OutOfRange("w1_empirical_to_mixture: empty sample");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const double mixture_mean = mix.moment(1);

    // int F over (u, v]: x F(x) - PFM(x) evaluated at the ends.
    auto int_cdf = [&](double u, double v) {
        return v * mix.cdf(v) - mix.partial_first_moment(v) -
               (u * mix.cdf(u) - mix.partial_first_moment(u));
    };

    // Left tail: int_{-inf}^{x_0} F = E[(x_0 - T)^+].
    double total = samples.front() * mix.cdf(samples.front()) -
                   mix.partial_first_moment(samples.front());
    // Right tail: int_{x_{n-1}}^{inf} (1 - F) = E[(T - x_{n-1})^+].
    total += mixture_mean - mix.partial_first_moment(samples.back()) -
             samples.back() * (1.0 - mix.cdf(samples.back()));

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = samples[i], b = samples[i + 1];
        if (!(b > a)) continue;
        const double c = static_cast<double>(i + 1) / static_cast<double>(n);
        const double fa = mix.cdf(a), fb = mix.cdf(b);
        double xc;  // crossing point of F with level c inside [a, b]
        if (fa >= c) {
            xc = a;
        } else if (fb <= c) {
            xc = b;
        } else {
            xc = std::min(std::max(mix.quantile(c), a), b);
        }
        // |c - F| integrates to c-area minus F-area left of the crossing, and
        // the mirror image right of it.
        total += c * (xc - a) - int_cdf(a, xc);
        total += int_cdf(xc, b) - c * (b - xc);
    }
    return total;
}

}  // namespace ulang

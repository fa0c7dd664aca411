#include <doctest.h>

#include <cmath>
#include <vector>

#include "ulang/metrics.hpp"
#include "ulang/mixture.hpp"
#include "ulang/rng.hpp"
#include "ulang/stats.hpp"

using namespace ulang;

namespace {

// Quadrature oracle for the unnormalized density exp(-beta U).
double oracle_normalizer(const LaplaceGaussian1d& post, double beta, double lo, double hi) {
    auto f = [&](double t) {
        std::vector<double> x{t};
        return std::exp(-beta * post.value(x));
    };
    return integrate_gk_segmented(f, lo, hi, post.observations(), 1e-13);
}

const LaplaceGaussian1d kPost({-1.0, 1.0}, 1.0, 0.0, 1.0);

}  // namespace

TEST_CASE("k=0 mixture is the prior gaussian") {
    LaplaceGaussian1d prior({}, 1.0, 1.5, 0.8);
    const double beta = 2.0;
    auto mix = build_mixture(prior, beta);
    CHECK(mix.weights().size() == 1);
    CHECK(mix.weights()[0] == doctest::Approx(1.0));
    CHECK(mix.mean() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(mix.variance() == doctest::Approx(0.8 * 0.8 / beta).epsilon(1e-10));
    CHECK(mix.quantile(0.5) == doctest::Approx(1.5).epsilon(1e-10));
    // quantiles match the gaussian quantile
    const double q = mix.quantile(0.975);
    CHECK(q == doctest::Approx(1.5 + 0.8 / std::sqrt(beta) * 1.959963984540054).epsilon(1e-9));
}

TEST_CASE("k=1 symmetric case: median at the breakpoint") {
    LaplaceGaussian1d post({0.0}, 1.0, 0.0, 1.0);
    auto mix = build_mixture(post, 1.0);
    CHECK(mix.quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mix.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mix.mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("normalizer and weights match adaptive quadrature") {
    auto mix = build_mixture(kPost, 1.0);
    const double z = std::exp(mix.log_normalizer());
    const double z_oracle = oracle_normalizer(kPost, 1.0, -14.0, 14.0);
    CHECK(std::fabs(z - z_oracle) <= 1e-8 * z_oracle);

    // per-interval masses against quadrature
    const std::vector<std::pair<double, double>> intervals{{-14.0, -1.0}, {-1.0, 1.0}, {1.0, 14.0}};
    for (int r = 0; r < 3; ++r) {
        const double m = oracle_normalizer(kPost, 1.0, intervals[r].first, intervals[r].second) / z_oracle;
        CHECK(mix.weights()[r] == doctest::Approx(m).epsilon(1e-8));
    }

    double wsum = 0.0;
    for (double w : mix.weights()) wsum += w;
    CHECK(std::fabs(wsum - 1.0) < 1e-12);
}

TEST_CASE("density is continuous at breakpoints and integrates to one") {
    auto mix = build_mixture(kPost, 1.0);
    for (double y : {-1.0, 1.0}) {
        const double left = mix.pdf(y - 1e-9);
        const double right = mix.pdf(y + 1e-9);
        CHECK(left == doctest::Approx(right).epsilon(1e-6));
    }
    const double total = integrate_gk_segmented([&](double t) { return mix.pdf(t); }, -14.0, 14.0,
                                                mix.breakpoints(), 1e-13);
    CHECK(std::fabs(total - 1.0) < 1e-10);
}

TEST_CASE("cdf is nondecreasing with the right limits; quantile inverts it") {
    auto mix = build_mixture(kPost, 1.0);
    CHECK(mix.cdf(-40.0) == doctest::Approx(0.0));
    CHECK(mix.cdf(40.0) == doctest::Approx(1.0));
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        const double x = -5.0 + 10.0 * i / 400.0;
        const double c = mix.cdf(x);
        CHECK(c >= prev - 1e-15);
        prev = c;
    }
    for (int i = 1; i < 60; ++i) {
        const double x = -3.0 + 6.0 * i / 60.0;
        const double q = mix.quantile(mix.cdf(x));
        CHECK(std::fabs(q - x) < 1e-9);
    }
    CHECK_THROWS_AS(mix.quantile(0.0), OutOfDomain);
    CHECK_THROWS_AS(mix.quantile(1.2), OutOfDomain);
}

TEST_CASE("moments match quadrature, including an asymmetric case") {
    auto mix = build_mixture(kPost, 1.0);
    CHECK(mix.mean() == doctest::Approx(0.0).epsilon(1e-10));

    LaplaceGaussian1d asym({-1.0, 3.0}, 1.3, 0.4, 1.1);
    auto amix = build_mixture(asym, 1.0);
    const double z = oracle_normalizer(asym, 1.0, -16.0, 18.0);
    for (int p = 1; p <= 4; ++p) {
        auto f = [&](double t) {
            std::vector<double> x{t};
            return std::pow(t, p) * std::exp(-asym.value(x)) / z;
        };
        const double oracle = integrate_gk_segmented(f, -16.0, 18.0, asym.observations(), 1e-13);
        CHECK(amix.moment(p) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("sampling matches the distribution") {
    auto mix = build_mixture(kPost, 1.0);
    const std::size_t n = 1000000;
    auto s = mix.sample(n, 321);

    // Kolmogorov-Smirnov against the mixture's own cdf, 1% level
    std::sort(s.begin(), s.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; i += 97) {  // stride keeps it cheap; sup is smooth
        const double F = mix.cdf(s[i]);
        const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
        ks = std::max(ks, std::max(std::fabs(F - lo), std::fabs(hi - F)));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));

    const double m = mean(s);
    const double v = variance(s);
    const double se_mean = std::sqrt(mix.variance() / n);
    CHECK(std::fabs(m - mix.mean()) < 4.0 * se_mean);
    const double m4 = mix.moment(4), m2 = mix.moment(2);
    const double se_var = std::sqrt((m4 - m2 * m2) / n);
    CHECK(std::fabs(v - mix.variance()) < 4.0 * se_var);
}

TEST_CASE("w1 to the exact law: quadrature oracle and sample-based cross-check") {
    auto mix = build_mixture(kPost, 1.0);

    // tiny sample against direct quadrature of |F_hat - F|
    std::vector<double> tiny{-0.7, 0.1, 0.4, 1.3};
    auto fhat = [&](double x) {
        double c = 0;
        for (double s : tiny) c += s <= x;
        return c / tiny.size();
    };
    const double oracle = integrate_gk_segmented(
        [&](double x) { return std::fabs(fhat(x) - mix.cdf(x)); }, -12.0, 12.0,
        std::vector<double>{-1.0, -0.7, 0.1, 0.4, 1.0, 1.3}, 1e-12);
    CHECK(w1_empirical_to_mixture(tiny, mix) == doctest::Approx(oracle).epsilon(1e-9));

    // versus the empirical-vs-empirical estimator with a large exact sample
    const std::size_t n = 20000;
    auto chain_like = mix.sample(n, 99);
    for (auto& v : chain_like) v += 0.05;  // a visible shift
    const double w_integral = w1_empirical_to_mixture(chain_like, mix);
    auto ref = mix.sample(400000, 100);
    const double w_pair = wasserstein_1d(EmpiricalMeasure::from_1d(chain_like),
                                         EmpiricalMeasure::from_1d(ref), 1.0);
    CHECK(w_integral == doctest::Approx(w_pair).epsilon(0.05));
    CHECK(w_integral == doctest::Approx(0.05).epsilon(0.15));
}

TEST_CASE("mixture summary exports json") {
    auto mix = build_mixture(kPost, 1.0);
    const auto j = mix.summary_json();
    CHECK(j.find("breakpoints") != std::string::npos);
    CHECK(j.find("weights") != std::string::npos);
    CHECK(j.find("normalizer") != std::string::npos);
}

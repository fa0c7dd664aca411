#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ulang {

// --- standard normal ---------------------------------------------------

double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);  // 1 - cdf, accurate in the upper tail
// P(lo < Z < hi), stable when both endpoints sit in the same tail.
double normal_mass(double lo, double hi);
// Inverse CDF (Wichura's AS241 rational approximation, ~1e-15 accurate).
double normal_quantile(double p);

double log_sum_exp(std::span<const double> v);

// --- deterministic reductions ------------------------------------------

// Fixed-order pairwise summation: result depends only on the contents, not
// on thread count or accumulation chunking, and keeps error at O(log n) ulp.
double pairwise_sum(std::span<const double> v);
double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased

// --- least squares / slope fits ------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    int n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_lo = 0.0;  // 95% bootstrap CI, widened to contain the estimate
    double ci_hi = 0.0;
    int n_points = 0;
    int bootstrap_n = 0;
};

// Least-squares slope of log(values) against log(grid) with a pairs
// bootstrap CI. Throws NonPositiveValue on non-positive inputs and
// OutOfRange on fewer than 4 points.
SlopeFit fit_loglog_slope(std::span<const double> grid, std::span<const double> values,
                          int bootstrap_n, std::uint64_t seed);

// --- quadrature ----------------------------------------------------------

// Adaptive Gauss-Kronrod 7-15 on [a, b]; bisects until the embedded error
// estimate is below tol (absolute) on every panel.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double tol = 1e-12, int max_depth = 48);

// Same, but splits first at the given interior breakpoints (integrand may
// have kinks there).
double integrate_gk_segmented(const std::function<double(double)>& f, double a, double b,
                              std::span<const double> breakpoints, double tol = 1e-12);

}  // namespace ulang

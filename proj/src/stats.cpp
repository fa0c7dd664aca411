#include "ulang/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ulang/errors.hpp"
#include "ulang/rng.hpp"

namespace ulang {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double normal_mass(double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    // Work on the side where erfc is small to dodge cancellation.
    if (lo >= 0.0) return normal_sf(lo) - normal_sf(hi);
    if (hi <= 0.0) return normal_cdf(hi) - normal_cdf(lo);
    return normal_cdf(hi) - normal_cdf(lo);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw OutOfDomain("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double r, num, den;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                    6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                  1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                    3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                  5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    const double v = num / den;
    return q < 0.0 ? -v : v;
}

double log_sum_exp(std::span<const double> v) {
    double m = -INFINITY;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - m) * (v[i] - m);
    return pairwise_sum(sq) / static_cast<double>(n - 1);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_line: size mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 2) throw OutOfRange("fit_line: need at least 2 points");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.n = n;
    if (sxx == 0.0) throw OutOfRange("fit_line: degenerate x values");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss_res = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = y[i] - (f.intercept + f.slope * x[i]);
            ss_res += r * r;
        }
        f.slope_stderr = std::sqrt(ss_res / ((n - 2) * sxx));
    }
    return f;
}

SlopeFit fit_loglog_slope(std::span<const double> grid, std::span<const double> values,
                          int bootstrap_n, std::uint64_t seed) {
    if (grid.size() != values.size()) throw DimensionMismatch("fit_loglog_slope: size mismatch");
    const int n = static_cast<int>(grid.size());
    if (n < 4) throw OutOfRange("fit_loglog_slope: need at least 4 points");
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        if (!(grid[i] > 0.0)) throw NonPositiveValue("fit_loglog_slope: grid values must be > 0");
        if (!(values[i] > 0.0)) throw NonPositiveValue("fit_loglog_slope: values must be > 0");
        lx[i] = std::log(grid[i]);
        ly[i] = std::log(values[i]);
    }
    const LineFit base = fit_line(lx, ly);

    SlopeFit out;
    out.slope = base.slope;
    out.intercept = base.intercept;
    out.n_points = n;
    out.bootstrap_n = bootstrap_n;

    if (bootstrap_n > 0) {
        UniformStream u(seed, chan::bootstrap, 0x626f6f74ull);
        std::vector<double> slopes;
        slopes.reserve(bootstrap_n);
        std::vector<double> bx(n), by(n);
        std::uint64_t ctr = 0;
        for (int b = 0; b < bootstrap_n; ++b) {
            bool degenerate = true;
            for (int i = 0; i < n; ++i) {
                const int j = std::min<int>(n - 1, static_cast<int>(u(ctr++) * n));
                bx[i] = lx[j];
                by[i] = ly[j];
                if (i > 0 && bx[i] != bx[0]) degenerate = false;
            }
            if (degenerate) continue;  // resample drew one point n times
            slopes.push_back(fit_line(bx, by).slope);
        }
        if (!slopes.empty()) {
            std::sort(slopes.begin(), slopes.end());
            const auto pick = [&](double q) {
                const double pos = q * (slopes.size() - 1);
                const std::size_t i = static_cast<std::size_t>(pos);
                const double frac = pos - i;
                return i + 1 < slopes.size() ? slopes[i] * (1 - frac) + slopes[i + 1] * frac
                                             : slopes.back();
            };
            out.ci_lo = std::min(pick(0.025), out.slope);
            out.ci_hi = std::max(pick(0.975), out.slope);
        } else {
            out.ci_lo = out.ci_hi = out.slope;
        }
    } else {
        out.ci_lo = out.ci_hi = out.slope;
    }
    return out;
}

namespace {

// QUADPACK 7-15 Gauss-Kronrod pair.
constexpr double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                            0.741531185599394, 0.586087235467691, 0.405845151377397,
                            0.207784955007898, 0.0};
constexpr double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                            0.140653259715525, 0.169004726639267, 0.190350578064785,
                            0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

struct PanelResult {
    double kronrod, err;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fv[i] + fv[14 - i]);
    for (int i = 0; i < 4; ++i) {
        const int j = 2 * i + 1;
        if (j < 7) resg += kWg[i] * (fv[j] + fv[14 - j]);
    }
    return {resk * h, std::fabs((resk - resg) * h)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
    const PanelResult r = gk15(f, a, b);
    // The relative floor stops the recursion once the panel is resolved to
    // rounding, whatever the requested absolute tolerance.
    if (r.err <= tol || r.err <= 5e-15 * std::fabs(r.kronrod) || depth <= 0) return r.kronrod;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth - 1) + adapt(f, c, b, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b, double tol,
                    int max_depth) {
    if (a == b) return 0.0;
    return adapt(f, a, b, tol, max_depth);
}

double integrate_gk_segmented(const std::function<double(double)>& f, double a, double b,
                              std::span<const double> breakpoints, double tol) {
    std::vector<double> cuts{a};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate_gk(f, cuts[i], cuts[i + 1], tol / static_cast<double>(cuts.size()));
    return total;
}

}  // namespace ulang

#include <doctest.h>

#include <cmath>
#include <vector>

#include "ulang/potential.hpp"
#include "ulang/rng.hpp"

using namespace ulang;

namespace {
std::vector<double> grad(const Potential& p, std::initializer_list<double> x) {
    return evaluate_gradient(p, std::vector<double>(x));
}
}  // namespace

TEST_CASE("1d posterior gradient matches the closed form") {
    // b=1, observations (-1,1), sigma=1, mu0=0: at 0.5 the l1 terms cancel.
    Potential p = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0);
    CHECK(grad(p, {0.5})[0] == doctest::Approx(0.5).epsilon(1e-15));

    // no observations: pure gaussian prior, zero gradient at its mean
    Potential prior_only = LaplaceGaussian1d({}, 1.0, 2.5, 1.7);
    CHECK(grad(prior_only, {2.5})[0] == doctest::Approx(0.0));

    Potential quad = QuadraticPotential(2);
    const auto g = grad(quad, {3.0, 4.0});
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);
}

TEST_CASE("gradient exactly on a surface raises; tie-break uses sign(0)=0") {
    Potential p = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(grad(p, {1.0}), OnDiscontinuity);
    std::vector<double> x{1.0}, out(1);
    gradient_tiebreak(p, x, out);
    // at theta = 1: sign(theta+1)=1, sign(0)=0, prior term 1
    CHECK(out[0] == doctest::Approx(2.0 * 1.0 + 1.0));
}

TEST_CASE("nd posterior gradient and tie-break") {
    Potential p = LaplaceGaussianNd(2, {{1.0, 0.0}}, 1.0, {0.0, 0.0}, 1.0);
    const auto g = grad(p, {3.0, 0.0});
    CHECK(g[0] == doctest::Approx(2.0 + 3.0));  // unit vector toward +x, plus prior
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK_THROWS_AS(grad(p, {1.0, 0.0}), OnDiscontinuity);
    std::vector<double> x{1.0, 0.0}, out(2);
    gradient_tiebreak(p, x, out);  // singular summand dropped
    CHECK(out[0] == doctest::Approx(1.0));
}

TEST_CASE("finite differences confirm the 1d posterior gradient") {
    Potential p = LaplaceGaussian1d({-1.0, 0.3, 1.0}, 0.7, 0.2, 1.3);
    UniformStream u(31, 0, 0);
    const double h = 1e-6;
    int tested = 0;
    for (int i = 0; tested < 200 && i < 1000; ++i) {
        const double x = -4.0 + 8.0 * u(i);
        bool near_obs = false;
        for (double y : {-1.0, 0.3, 1.0}) near_obs |= std::fabs(x - y) < 1e-3;
        if (near_obs) continue;
        ++tested;
        std::vector<double> xm{x - h}, xp{x + h}, xv{x};
        const double fd = (potential_value(p, xp) - potential_value(p, xm)) / (2 * h);
        const double an = evaluate_gradient(p, xv)[0];
        CHECK(std::fabs(fd - an) <= 1e-6 * std::max(1.0, std::fabs(an)));
    }
    CHECK(tested == 200);
}

TEST_CASE("strong monotonicity check") {
    Potential quad = QuadraticPotential(3);
    auto rep = check_strong_monotonicity(quad, 2000, 17);
    CHECK(rep.pass);
    CHECK(rep.min_ratio >= 1.0 - 1e-9);

    // sigma = 2 -> mu = 0.25
    Potential post = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 2.0);
    rep = check_strong_monotonicity(post, 5000, 18);
    CHECK(rep.pass);
    CHECK(rep.min_ratio >= 0.25 * (1 - 1e-9));

    // adversarial: constant gradient declared mu = 1 must fail
    auto zero_grad = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    auto bad = check_strong_monotonicity(zero_grad, 1, 1.0, 500, 19);
    CHECK_FALSE(bad.pass);
    CHECK(bad.min_ratio == doctest::Approx(0.0));
}

TEST_CASE("growth check") {
    // 1d posterior b=1, k=2, sigma=1: m = 4 + |mu0|, L = 1
    Potential post = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.5, 1.0);
    auto rep = check_growth(post, 20000, 100.0, 11);
    CHECK(rep.pass);

    auto zero_grad = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    auto z = check_growth(zero_grad, 1, 0.0, 0.0, 1000, 10.0, 12);
    CHECK(z.pass);

    // superlinear gradient declared (m,L) = (0,1) must fail in a radius-10 ball
    auto sq = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
    auto bad = check_growth(sq, 1, 0.0, 1.0, 2000, 10.0, 13);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("1d region classification and signed distance") {
    auto geom = RegionGeometry::for_points({-1.0, 1.0});
    std::vector<double> x{0.0};
    CHECK(geom.region_of(x) == 1);
    x[0] = -5.0;
    CHECK(geom.region_of(x) == 0);
    x[0] = 3.0;
    CHECK(geom.region_of(x) == 2);
    x[0] = 1.0;
    CHECK_THROWS_AS(geom.region_of(x), OnDiscontinuity);

    auto single = RegionGeometry::for_points({2.0});
    std::vector<double> p{5.0};
    CHECK(single.signed_distance(0, p) == doctest::Approx(3.0));
    CHECK(geom.delta() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("sphere geometry: classification and signed distance") {
    auto geom = RegionGeometry::for_spheres(
        {SphereSurface{{3.0, 0.0}, 1.0}, SphereSurface{{-3.0, 0.0}, 1.0}}, 2);
    std::vector<double> origin{0.0, 0.0};
    CHECK(geom.region_of(origin) == 0);
    std::vector<double> right{3.0, 0.0};
    CHECK(geom.region_of(right) == 1);  // inside the first sphere only
    std::vector<double> left{-3.0, 0.0};
    CHECK(geom.region_of(left) == 2);

    auto circle = RegionGeometry::for_spheres({SphereSurface{{0.0, 0.0}, 1.0}}, 2);
    CHECK(circle.signed_distance(0, origin) == doctest::Approx(-1.0));
    std::vector<double> on{1.0, 0.0};
    CHECK(circle.signed_distance(0, on) == 0.0);
    CHECK_THROWS_AS(circle.region_of(on), OnDiscontinuity);
}

TEST_CASE("region index is constant along segments that cross no surface") {
    auto geom = RegionGeometry::for_points({-1.0, 0.3, 1.0});
    UniformStream u(44, 0, 0);
    std::uint64_t k = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const double a = -3.0 + 6.0 * u(k++);
        const double b = -3.0 + 6.0 * u(k++);
        // only keep segments with no sign change of any rho_j
        bool crosses = false;
        for (std::size_t j = 0; j < geom.num_surfaces(); ++j) {
            std::vector<double> pa{a}, pb{b};
            if ((geom.signed_distance(j, pa) < 0) != (geom.signed_distance(j, pb) < 0))
                crosses = true;
        }
        if (crosses) continue;
        std::vector<double> pa{a};
        int expect;
        try {
            expect = geom.region_of(pa);
        } catch (const OnDiscontinuity&) {
            continue;
        }
        for (int s = 1; s < 20; ++s) {
            std::vector<double> p{a + (b - a) * s / 20.0};
            CHECK(geom.region_of(p) == expect);
        }
    }
}

TEST_CASE("potential config loader validates") {
    CHECK_THROWS_AS(load_potential_json(R"({"kind":"nope"})"), ConfigError);
    CHECK_THROWS_AS(
        load_potential_json(
            R"({"kind":"laplace_gaussian_1d","observations":[0],"scale_b":-1,"prior_sd":1})"),
        ConfigError);
    CHECK_THROWS_AS(
        load_potential_json(
            R"({"kind":"laplace_gaussian_nd","dimension":2,"observations":[[0,0]],"scale_b":1,
                "prior_sd":1,"precision":[[1.0,0.5],[0.0,1.0]]})"),
        ConfigError);  // asymmetric
    CHECK_THROWS_AS(
        load_potential_json(
            R"({"kind":"laplace_gaussian_nd","dimension":2,"observations":[[0,0]],"scale_b":1,
                "prior_sd":1,"precision":[[2.0,0.0],[0.0,3.0]]})"),
        ConfigError);  // smallest eigenvalue != 1

    // valid: precision with eigenvalues {1, 3}
    auto p = load_potential_json(
        R"({"kind":"laplace_gaussian_nd","dimension":2,"observations":[[1,0],[0,1]],"scale_b":1,
            "prior_sd":1,"precision":[[2.0,1.0],[1.0,2.0]]})");
    const auto& inf = potential_info(p);
    CHECK(inf.mu == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(inf.growth_l == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(inf.regularity == RegularityClass::GrowthOnly);

    // mu <= growth_l on every built-in
    for (const char* txt :
         {R"({"kind":"quadratic","dimension":3})",
          R"({"kind":"laplace_gaussian_1d","observations":[-1,1],"scale_b":1,"prior_sd":1})"}) {
        const auto& q = load_potential_json(txt);
        CHECK(potential_info(q).mu <= potential_info(q).growth_l + 1e-12);
    }
}

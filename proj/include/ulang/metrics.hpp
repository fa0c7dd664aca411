#pragma once

// Measurement side: Wasserstein estimators, crossing-event statistics,
// occupation near the discontinuity set, and log-log slope extraction.
// Everything here is a pure function of immutable inputs.

#include <cstdint>
#include <span>
#include <vector>

#include "ulang/errors.hpp"
#include "ulang/geometry.hpp"
#include "ulang/sampler.hpp"
#include "ulang/stats.hpp"

namespace ulang {

struct EmpiricalMeasure {
    std::size_t n = 0;
    int dim = 1;
    std::vector<double> points;   // n x dim row-major
    std::vector<double> weights;  // empty = uniform; otherwise nonnegative, sums to 1

    static EmpiricalMeasure from_1d(std::vector<double> values);
    static EmpiricalMeasure from_rows(std::vector<double> flat, int dim);
    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * dim, static_cast<std::size_t>(dim)};
    }
};

// 1d W_p. Equal-size uniform samples reduce to sorted order statistics;
// general (weighted / unequal) inputs use the quantile-function integral on
// the merged cumulative grid, which is exact for empirical measures.
double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

// Mean over random unit directions of the 1d W_p of the projections.
// Directions are stratified angles in d=2 and normalized counter-based
// gaussians in d>=3; deterministic given the seed.
double wasserstein_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                          int n_projections, std::uint64_t seed);

struct CrossingRecord {
    double fraction = 0.0;                 // measure of sub-times in the crossing event
    std::vector<long> per_surface_counts;  // sub-times where surface j separates X_u from X_k
    long evaluated_subtimes = 0;           // denominator (includes grid points, which never cross)
};

// Fraction of sub-grid times u in the window where the interpolated state and
// its last grid state lie in different regions. Requires sub-resolution at
// least gamma / 8.
CrossingRecord crossing_fraction(const DenseWindow& window, const RegionGeometry& geom);

// Fraction of window time spent within distance a of the discontinuity set;
// requires 0 < a <= geom.delta().
double occupation_near_surface(const DenseWindow& window, const RegionGeometry& geom, double a);

}  // namespace ulang

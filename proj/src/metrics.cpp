#include "ulang/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ulang/rng.hpp"

namespace ulang {

EmpiricalMeasure EmpiricalMeasure::from_1d(std::vector<double> values) {
    EmpiricalMeasure m;
    m.n = values.size();
    m.dim = 1;
    m.points = std::move(values);
    return m;
}

EmpiricalMeasure EmpiricalMeasure::from_rows(std::vector<double> flat, int dim) {
    if (dim < 1 || flat.size() % dim != 0)
        throw DimensionMismatch("EmpiricalMeasure: flat size not a multiple of dim");
    EmpiricalMeasure m;
    m.dim = dim;
    m.n = flat.size() / dim;
    m.points = std::move(flat);
    return m;
}

namespace {

struct Atom {
    double value, weight;
};

std::vector<Atom> sorted_atoms(const EmpiricalMeasure& m, std::span<const double> values) {
    std::vector<Atom> atoms(m.n);
    const double uniform = 1.0 / static_cast<double>(m.n);
    for (std::size_t i = 0; i < m.n; ++i)
        atoms[i] = {values[i], m.weights.empty() ? uniform : m.weights[i]};
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
    return atoms;
}

// W_p^p between two sorted weighted 1d atom lists via the quantile coupling.
double wasserstein_pp_sorted(const std::vector<Atom>& a, const std::vector<Atom>& b, double p) {
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    double ca = 0.0, cb = 0.0;  // cumulative mass consumed in each measure
    while (i < a.size() && j < b.size()) {
        const double ra = ca + a[i].weight;
        const double rb = cb + b[j].weight;
        const double step = std::min(ra, rb) - std::max(ca, cb);
        if (step > 0.0) acc += step * std::pow(std::fabs(a[i].value - b[j].value), p);
        if (ra <= rb) {
            ca = ra;
            ++i;
        } else {
            cb = rb;
            ++j;
        }
    }
    return acc;
}

}  // namespace

double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    if (a.dim != 1 || b.dim != 1) throw DimensionMismatch("wasserstein_1d: inputs must be 1d");
    if (p < 1.0) throw OutOfDomain("wasserstein_1d: p must be >= 1");
    if (a.n == 0 || b.n == 0) throw OutOfRange("wasserstein_1d: empty measure");

    if (a.n == b.n && a.weights.empty() && b.weights.empty()) {
        std::vector<double> xs(a.points), ys(b.points);
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) acc += std::pow(std::fabs(xs[i] - ys[i]), p);
        return std::pow(acc / static_cast<double>(xs.size()), 1.0 / p);
    }
    const auto atoms_a = sorted_atoms(a, a.points);
    const auto atoms_b = sorted_atoms(b, b.points);
    return std::pow(wasserstein_pp_sorted(atoms_a, atoms_b, p), 1.0 / p);
}

double wasserstein_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                          int n_projections, std::uint64_t seed) {
    if (a.dim != b.dim) throw DimensionMismatch("wasserstein_sliced: dimension mismatch");
    if (a.dim < 2) throw DimensionMismatch("wasserstein_sliced: use wasserstein_1d for d=1");
    if (n_projections < 1) throw OutOfRange("wasserstein_sliced: need at least 1 projection");
    const int d = a.dim;

    std::vector<double> dirs(static_cast<std::size_t>(n_projections) * d);
    if (d == 2) {
        // Stratified angles with a seeded common offset.
        UniformStream u(seed, chan::directions, 0);
        const double offset = u(0);
        for (int k = 0; k < n_projections; ++k) {
            const double ang = 2.0 * M_PI * (static_cast<double>(k) + offset) /
                               static_cast<double>(n_projections);
            dirs[2 * k] = std::cos(ang);
            dirs[2 * k + 1] = std::sin(ang);
        }
    } else {
        GaussianStream g(seed, chan::directions, 0);
        std::uint64_t idx = 0;
        for (int k = 0; k < n_projections; ++k) {
            double n2 = 0.0;
            for (int c = 0; c < d; ++c) {
                const double v = g(idx++);
                dirs[static_cast<std::size_t>(k) * d + c] = v;
                n2 += v * v;
            }
            const double inv = 1.0 / std::sqrt(n2);
            for (int c = 0; c < d; ++c) dirs[static_cast<std::size_t>(k) * d + c] *= inv;
        }
    }

    std::vector<double> pa(a.n), pb(b.n), dists(n_projections);
    for (int k = 0; k < n_projections; ++k) {
        const double* dir = dirs.data() + static_cast<std::size_t>(k) * d;
        for (std::size_t i = 0; i < a.n; ++i) {
            double s = 0.0;
            const double* pt = a.points.data() + i * d;
            for (int c = 0; c < d; ++c) s += dir[c] * pt[c];
            pa[i] = s;
        }
        for (std::size_t i = 0; i < b.n; ++i) {
            double s = 0.0;
            const double* pt = b.points.data() + i * d;
            for (int c = 0; c < d; ++c) s += dir[c] * pt[c];
            pb[i] = s;
        }
        EmpiricalMeasure ma, mb;
        ma.n = a.n;
        ma.dim = 1;
        ma.points = pa;
        ma.weights = a.weights;
        mb.n = b.n;
        mb.dim = 1;
        mb.points = pb;
        mb.weights = b.weights;
        dists[k] = wasserstein_1d(ma, mb, p);
    }
    return mean(dists);
}

CrossingRecord crossing_fraction(const DenseWindow& window, const RegionGeometry& geom) {
    if (window.subs < 8)
        throw MissingCheckpoints("crossing_fraction: needs sub-resolution <= gamma/8");
    CrossingRecord rec;
    rec.per_surface_counts.assign(geom.num_surfaces(), 0);

    long crossings = 0;
    for (std::int64_t n = 0; n < window.n_steps; ++n) {
        const auto base = window.grid(n);
        int base_region;
        try {
            base_region = geom.region_of(base);
        } catch (const OnDiscontinuity&) {
            crossings += window.subs - 1;  // measure-zero tie: count the whole step
            continue;
        }
        for (int j = 0; j < window.subs - 1; ++j) {
            const auto xu = window.sub(n, j);
            bool crossed;
            try {
                crossed = geom.region_of(xu) != base_region;
            } catch (const OnDiscontinuity&) {
                crossed = true;
            }
            if (crossed) {
                ++crossings;
                for (std::size_t s = 0; s < geom.num_surfaces(); ++s)
                    if ((geom.signed_distance(s, xu) < 0.0) != (geom.signed_distance(s, base) < 0.0))
                        ++rec.per_surface_counts[s];
            }
        }
    }
    rec.evaluated_subtimes = window.n_steps * window.subs;
    rec.fraction =
        rec.evaluated_subtimes > 0 ? static_cast<double>(crossings) / rec.evaluated_subtimes : 0.0;
    return rec;
}

double occupation_near_surface(const DenseWindow& window, const RegionGeometry& geom, double a) {
    if (!(a > 0.0)) throw OutOfDomain("occupation_near_surface: a must be > 0");
    if (a > geom.delta() * (1.0 + 1e-12))
        throw OutOfDomain("occupation_near_surface: a must not exceed delta");
    long hits = 0, total = 0;
    for (std::int64_t n = 0; n < window.n_steps; ++n) {
        for (int j = 0; j < window.subs - 1; ++j) {
            hits += geom.min_abs_distance(window.sub(n, j)) < a;
            ++total;
        }
        hits += geom.min_abs_distance(window.grid(n + 1)) < a;
        ++total;
    }
    return total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace ulang

#include "ulang/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ulang {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dist_to_center(const SphereSurface& s, std::span<const double> x) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < s.center.size(); ++i) {
        const double d = x[i] - s.center[i];
        d2 += d * d;
    }
    return std::sqrt(d2);
}

}  // namespace

RegionGeometry RegionGeometry::for_points(std::vector<double> sorted_locations) {
    RegionGeometry g;
    g.dim_ = 1;
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < sorted_locations.size(); ++i) {
        if (!(sorted_locations[i] < sorted_locations[i + 1]))
            throw OutOfRange("RegionGeometry: point surfaces must be strictly increasing");
        min_gap = std::min(min_gap, sorted_locations[i + 1] - sorted_locations[i]);
    }
    g.delta_ = std::isfinite(min_gap) ? min_gap / 3.0 : 1.0;
    double max_abs = 0.0;
    for (double y : sorted_locations) {
        max_abs = std::max(max_abs, std::fabs(y));
        g.surfaces_.push_back(PointSurface{y});
    }
    g.bounding_radius_ = max_abs + g.delta_;
    return g;
}

RegionGeometry RegionGeometry::for_spheres(std::vector<SphereSurface> spheres, int dim) {
    RegionGeometry g;
    g.dim_ = dim;
    double min_sep = std::numeric_limits<double>::infinity();
    double min_radius = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spheres.size(); ++i) {
        if (static_cast<int>(spheres[i].center.size()) != dim)
            throw DimensionMismatch("RegionGeometry: sphere center has wrong dimension");
        if (!(spheres[i].radius > 0.0)) throw OutOfRange("RegionGeometry: radius must be > 0");
        min_radius = std::min(min_radius, spheres[i].radius);
        for (std::size_t j = i + 1; j < spheres.size(); ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = spheres[i].center[c] - spheres[j].center[c];
                d2 += d * d;
            }
            min_sep = std::min(min_sep, std::sqrt(d2) - spheres[i].radius - spheres[j].radius);
        }
    }
    double bound = std::min(min_radius, min_sep);
    g.delta_ = std::isfinite(bound) ? std::max(bound, 0.0) / 3.0 : min_radius / 3.0;
    double r_out = 0.0;
    for (auto& s : spheres) {
        r_out = std::max(r_out, norm2(s.center) + s.radius);
        g.surfaces_.push_back(std::move(s));
    }
    g.bounding_radius_ = r_out + g.delta_;
    return g;
}

double RegionGeometry::signed_distance(std::size_t j, std::span<const double> x) const {
    if (j >= surfaces_.size()) throw OutOfRange("signed_distance: bad surface index");
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("signed_distance: dim mismatch");
    const Surface& s = surfaces_[j];
    if (const auto* p = std::get_if<PointSurface>(&s)) return x[0] - p->location;
    const auto& sp = std::get<SphereSurface>(s);
    return dist_to_center(sp, x) - sp.radius;
}

double RegionGeometry::min_abs_distance(std::span<const double> x) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < surfaces_.size(); ++j)
        m = std::min(m, std::fabs(signed_distance(j, x)));
    return m;
}

bool RegionGeometry::on_surface(std::span<const double> x) const {
    for (std::size_t j = 0; j < surfaces_.size(); ++j)
        if (signed_distance(j, x) == 0.0) return true;
    return false;
}

int RegionGeometry::region_of(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("region_of: dim mismatch");
    if (surfaces_.empty()) return 0;
    if (std::holds_alternative<PointSurface>(surfaces_[0])) {
        int idx = 0;
        for (const auto& s : surfaces_) {
            const double y = std::get<PointSurface>(s).location;
            if (x[0] == y) throw OnDiscontinuity("region_of: point lies on a surface");
            if (x[0] > y) ++idx;
        }
        return idx;
    }
    int mask = 0;
    for (std::size_t j = 0; j < surfaces_.size(); ++j) {
        const double rho = signed_distance(j, x);
        if (rho == 0.0) throw OnDiscontinuity("region_of: point lies on a surface");
        if (rho < 0.0) mask |= 1 << j;
    }
    return mask;
}

}  // namespace ulang

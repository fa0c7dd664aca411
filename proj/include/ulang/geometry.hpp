#pragma once

// Discontinuity geometry: hypersurfaces that cut R^d into regions on which a
// gradient is continuous. Shipped surface kinds: points on the line (each
// {y_j} with inside chosen as (-inf, y_j), so the signed distance is simply
// x - y_j) and spheres (inside = open ball, signed distance |x-c| - r).

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "ulang/errors.hpp"

namespace ulang {

struct PointSurface {
    double location;
};

struct SphereSurface {
    std::vector<double> center;
    double radius;
};

using Surface = std::variant<PointSurface, SphereSurface>;

class RegionGeometry {
public:
    // Point surfaces at sorted locations; delta = min pairwise gap / 3
    // (fallback 1.0 for a single point, where no pairwise gap exists).
    static RegionGeometry for_points(std::vector<double> sorted_locations);
    // Sphere surfaces; delta = min(pairwise gap, smallest radius) / 3.
    static RegionGeometry for_spheres(std::vector<SphereSurface> spheres, int dim);

    std::size_t num_surfaces() const { return surfaces_.size(); }
    int dim() const { return dim_; }
    double delta() const { return delta_; }
    double bounding_radius() const { return bounding_radius_; }
    const std::vector<Surface>& surfaces() const { return surfaces_; }

    // rho_j: distance to surface j, negative strictly inside.
    double signed_distance(std::size_t j, std::span<const double> x) const;
    double min_abs_distance(std::span<const double> x) const;
    bool on_surface(std::span<const double> x) const;

    // Index of the containing region. For point surfaces this is the interval
    // index (number of points strictly below x); for spheres it is the
    // inside/outside sign pattern packed into an int (0 = outside all).
    // Throws OnDiscontinuity when x lies exactly on some surface.
    int region_of(std::span<const double> x) const;

private:
    std::vector<Surface> surfaces_;
    int dim_ = 1;
    double delta_ = 1.0;
    double bounding_radius_ = 1.0;
};

// Free-function forms of the two geometry queries.
inline double signed_distance(const RegionGeometry& g, std::size_t j, std::span<const double> x) {
    return g.signed_distance(j, x);
}
inline int classify_region(const RegionGeometry& g, std::span<const double> x) {
    return g.region_of(x);
}

}  // namespace ulang

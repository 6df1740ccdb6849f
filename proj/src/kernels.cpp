#include "ibsgrasp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ibsgrasp::kernels {

std::vector<Neighbor> nearest_batch(const SpatialIndex& index, std::span<const Point3> queries) {
    std::vector<Neighbor> out(queries.size());
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = index.nearest(queries[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<ProximityPair> proximity_pairs(std::span<const Point3> points, std::span<const std::size_t> group,
                                           const PairMask& mask, double radius) {
    std::vector<ProximityPair> out;
    if (points.size() < 2) return out;
    const SpatialIndex index(points);
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<std::vector<ProximityPair>> per_point(points.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j : index.within_radius(points[i], radius)) {
            if (j <= i || mask.excluded(group[i], group[j])) continue;
            const double d = (points[i] - points[j]).norm();
            if (d < radius) per_point[i].push_back({i, j, d});
        }
    }
    for (auto& v : per_point) out.insert(out.end(), v.begin(), v.end());
    return out;
}

double max_penetration(std::span<const Point3> points, std::span<const Primitive> primitives) {
    double best = 0.0;
    const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for reduction(max : best) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Point3& p = points[static_cast<std::size_t>(i)];
        for (const auto& prim : primitives) {
            best = std::max(best, prim.radius - prim.core_distance(p));
        }
    }
    return best;
}

namespace reference {

std::vector<Neighbor> nearest_batch(std::span<const Point3> cloud, std::span<const Point3> queries) {
    std::vector<Neighbor> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double d2 = squared_distance(q, cloud[i]);
            if (d2 < best) {
                best = d2;
                arg = i;
            }
        }
        out.push_back({arg, std::sqrt(best)});
    }
    return out;
}

std::vector<ProximityPair> proximity_pairs(std::span<const Point3> points, std::span<const std::size_t> group,
                                           const PairMask& mask, double radius) {
    std::vector<ProximityPair> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (mask.excluded(group[i], group[j])) continue;
            const double d = (points[i] - points[j]).norm();
            if (d < radius) out.push_back({i, j, d});
        }
    }
    return out;
}

double max_penetration(std::span<const Point3> points, std::span<const Primitive> primitives) {
    double best = 0.0;
    for (const auto& p : points) {
        for (const auto& prim : primitives) best = std::max(best, prim.radius - prim.core_distance(p));
    }
    return best;
}

}  // namespace reference

}  // namespace ibsgrasp::kernels

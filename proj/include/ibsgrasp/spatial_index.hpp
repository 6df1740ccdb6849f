#pragma once

#include "ibsgrasp/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ibsgrasp {

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

// Exact k-d tree over a fixed point set.
//
// All queries return the same answer an exhaustive scan would: candidates are
// ordered by (squared distance, point index), so equidistant points resolve
// to the lowest index. Squared distances are evaluated with the same
// expression as the scan to keep that equivalence bit-exact.
class SpatialIndex {
public:
    explicit SpatialIndex(std::span<const Point3> points);

    std::size_t size() const noexcept { return points_.size(); }
    const Point3& point(std::size_t i) const { return points_[i]; }
    std::span<const Point3> points() const noexcept { return points_; }

    Neighbor nearest(const Point3& query) const;
    // Up to k neighbours sorted by (distance, index).
    std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;
    // Indices with distance <= radius, ascending by index.
    std::vector<std::size_t> within_radius(const Point3& query, double radius) const;

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        int axis = -1;  // -1 for leaves
        double split = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end);

    std::vector<Point3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

// Throws EmptyInput on an empty cloud.
SpatialIndex build_index(const PointCloud& cloud);

inline double squared_distance(const Point3& a, const Point3& b) { return (a - b).squaredNorm(); }

}  // namespace ibsgrasp

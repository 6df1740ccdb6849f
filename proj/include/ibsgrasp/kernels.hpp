#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a serial brute-force version under `reference` that the tests
// and the benchmark compare against.

#include "ibsgrasp/geometry.hpp"
#include "ibsgrasp/spatial_index.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ibsgrasp::kernels {

// Symmetric group-pair mask: excluded(a, b) == true drops every point pair
// whose groups are (a, b).
class PairMask {
public:
    explicit PairMask(std::size_t groups) : groups_(groups), mask_(groups * groups, 0) {}

    void exclude(std::size_t a, std::size_t b) {
        mask_[a * groups_ + b] = 1;
        mask_[b * groups_ + a] = 1;
    }
    bool excluded(std::size_t a, std::size_t b) const { return mask_[a * groups_ + b] != 0; }
    std::size_t groups() const noexcept { return groups_; }

private:
    std::size_t groups_;
    std::vector<unsigned char> mask_;
};

struct ProximityPair {
    std::size_t i = 0;  // i < j
    std::size_t j = 0;
    double distance = 0.0;
};

// Nearest neighbour of every query, in query order.
std::vector<Neighbor> nearest_batch(const SpatialIndex& index, std::span<const Point3> queries);

// Unordered pairs (i < j) with distance < radius whose groups are not masked,
// sorted by (i, j).
std::vector<ProximityPair> proximity_pairs(std::span<const Point3> points, std::span<const std::size_t> group,
                                           const PairMask& mask, double radius);

// max over points and primitives of (radius - core distance), clamped at 0.
double max_penetration(std::span<const Point3> points, std::span<const Primitive> primitives);

namespace reference {

std::vector<Neighbor> nearest_batch(std::span<const Point3> cloud, std::span<const Point3> queries);

std::vector<ProximityPair> proximity_pairs(std::span<const Point3> points, std::span<const std::size_t> group,
                                           const PairMask& mask, double radius);

double max_penetration(std::span<const Point3> points, std::span<const Primitive> primitives);

}  // namespace reference

}  // namespace ibsgrasp::kernels

#pragma once

#include "ibsgrasp/geometry.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ibsgrasp {

inline constexpr std::size_t kDefaultNormalNeighbors = 16;

// PCA normals: per point, the unit eigenvector of the covariance of its k
// nearest neighbours (itself included) with the smallest eigenvalue. Sign is
// left as the eigen solver returns it.
//
// Throws InsufficientPoints when k < 3 or k exceeds the point count, and
// DegenerateNeighborhood when a neighbourhood is (nearly) collinear.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalNeighbors);

// Same estimator, but degenerate neighbourhoods come back as nullopt instead
// of throwing.
std::vector<std::optional<Vec3>> estimate_normals_lenient(const PointCloud& cloud, std::size_t k);

}  // namespace ibsgrasp

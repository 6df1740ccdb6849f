#include "ibsgrasp/normals.hpp"

#include "ibsgrasp/error.hpp"
#include "ibsgrasp/spatial_index.hpp"

#include <Eigen/Eigenvalues>

namespace ibsgrasp {

namespace {

// Ratio below which the middle eigenvalue counts as zero (rank < 2).
constexpr double kDegenerateRatio = 1e-10;

std::optional<Vec3> neighborhood_normal(const SpatialIndex& index, const Point3& p, std::size_t k) {
    const auto nbrs = index.knn(p, k);
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nbrs) mean += index.point(n.index);
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nbrs) {
        const Vec3 d = index.point(n.index) - mean;
        cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    const Vec3 evals = solver.eigenvalues();  // ascending
    if (!(evals[2] > 0.0) || evals[1] <= kDegenerateRatio * evals[2]) return std::nullopt;
    return solver.eigenvectors().col(0).normalized();
}

void check_k(const PointCloud& cloud, std::size_t k) {
    if (k < 3) throw Error(ErrorCode::InsufficientPoints, "normal estimation needs k >= 3");
    if (k > cloud.size()) {
        throw Error(ErrorCode::InsufficientPoints,
                    "normal estimation needs at least k=" + std::to_string(k) + " points, got " +
                        std::to_string(cloud.size()));
    }
}

}  // namespace

std::vector<std::optional<Vec3>> estimate_normals_lenient(const PointCloud& cloud, std::size_t k) {
    check_k(cloud, k);
    const SpatialIndex index(cloud.points);
    std::vector<std::optional<Vec3>> out(cloud.size());
    const auto n = static_cast<std::ptrdiff_t>(cloud.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = neighborhood_normal(index, cloud.points[static_cast<std::size_t>(i)], k);
    }
    return out;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k) {
    const auto normals = estimate_normals_lenient(cloud, k);
    PointCloud out;
    out.points = cloud.points;
    out.normals.reserve(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!normals[i]) {
            throw Error(ErrorCode::DegenerateNeighborhood,
                        "rank-deficient neighbourhood covariance at point " + std::to_string(i));
        }
        out.normals.push_back(*normals[i]);
    }
    return out;
}

}  // namespace ibsgrasp

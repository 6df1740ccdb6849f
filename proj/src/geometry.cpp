#include "ibsgrasp/geometry.hpp"

#include "ibsgrasp/error.hpp"

#include <algorithm>
#include <cmath>

namespace ibsgrasp {

void PointCloud::validate() const {
    for (const auto& p : points) {
        if (!p.allFinite()) throw Error(ErrorCode::ValidationError, "point cloud has a non-finite coordinate");
    }
    if (normals.empty()) return;
    if (normals.size() != points.size()) {
        throw Error(ErrorCode::ValidationError, "normal count does not match point count");
    }
    for (const auto& n : normals) {
        if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
            throw Error(ErrorCode::ValidationError, "normal is not unit length");
        }
    }
}

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

Mat3 axis_angle(const Vec3& unit_axis, double angle) {
    return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

Mat3 exp_so3(const Vec3& omega) {
    const double theta = omega.norm();
    if (theta < 1e-12) return Mat3::Identity() + skew(omega);
    return axis_angle(omega / theta, theta);
}

Vec3 log_so3(const Mat3& rotation) {
    const Eigen::AngleAxisd aa(rotation);
    return aa.axis() * aa.angle();
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

bool RigidTransform::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    if (((rotation.transpose() * rotation) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) out.normals.push_back(t.rotate(n));
    return out;
}

double Primitive::core_distance(const Point3& p) const {
    if (kind == Kind::Sphere) return (p - a).norm();
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + s * ab)).norm();
}

VoxelGrid::VoxelGrid(Point3 origin, double voxel_size, int resolution, std::vector<std::string> channel_names)
    : origin_(std::move(origin)),
      voxel_size_(voxel_size),
      resolution_(resolution),
      count_(0),
      names_(std::move(channel_names)) {
    if (resolution_ < 2) throw Error(ErrorCode::ValidationError, "voxel grid resolution must be >= 2");
    if (!(voxel_size_ > 0.0) || !std::isfinite(voxel_size_)) {
        throw Error(ErrorCode::ValidationError, "voxel size must be positive");
    }
    if (!origin_.allFinite()) throw Error(ErrorCode::ValidationError, "voxel grid origin is not finite");
    const auto n = static_cast<std::size_t>(resolution_);
    count_ = n * n * n;
    data_.assign(names_.size(), std::vector<std::uint8_t>(count_, 0));
}

VoxelGrid VoxelGrid::centered(double voxel_size, int resolution, std::vector<std::string> channel_names) {
    const double half = 0.5 * voxel_size * resolution;
    return VoxelGrid(Point3::Constant(-half), voxel_size, resolution, std::move(channel_names));
}

std::size_t VoxelGrid::channel_id(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw Error(ErrorCode::ValidationError, "unknown channel '" + std::string(name) + "'");
}

std::optional<VoxelIndex> VoxelGrid::world_to_voxel(const Point3& p) const {
    const double edge = edge_length();
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        const double off = p[a] - origin_[a];
        if (!std::isfinite(off) || off < 0.0 || off >= edge) return std::nullopt;
        // Rounding can push a point just below the far face onto index n.
        idx[a] = std::min(static_cast<int>(std::floor(off / voxel_size_)), resolution_ - 1);
    }
    return VoxelIndex{idx[0], idx[1], idx[2]};
}

Point3 VoxelGrid::voxel_center(const VoxelIndex& v) const {
    return origin_ + voxel_size_ * Vec3(v.x + 0.5, v.y + 0.5, v.z + 0.5);
}

VoxelIndex VoxelGrid::unlinear(std::size_t i) const noexcept {
    const auto n = static_cast<std::size_t>(resolution_);
    return {static_cast<int>(i % n), static_cast<int>((i / n) % n), static_cast<int>(i / (n * n))};
}

std::size_t VoxelGrid::count(std::size_t channel) const {
    std::size_t c = 0;
    for (auto b : data_[channel]) c += b;
    return c;
}

}  // namespace ibsgrasp

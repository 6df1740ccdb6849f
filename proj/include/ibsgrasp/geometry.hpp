#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ibsgrasp {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Ordered points with optional per-point unit normals.
struct PointCloud {
    std::vector<Point3> points;
    std::vector<Vec3> normals;  // empty, or one per point

    PointCloud() = default;
    explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
    bool has_normals() const noexcept { return !normals.empty(); }

    // Throws ValidationError on non-finite coordinates, a normal count
    // mismatch, or a normal whose length is off unity by more than 1e-6.
    void validate() const;
};

Mat3 skew(const Vec3& v);
Mat3 exp_so3(const Vec3& omega);
// Inverse of exp_so3 for rotations with angle < pi.
Vec3 log_so3(const Mat3& rotation);
Mat3 axis_angle(const Vec3& unit_axis, double angle);

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    Point3 apply(const Point3& p) const { return rotation * p + translation; }
    Vec3 rotate(const Vec3& v) const { return rotation * v; }
    RigidTransform inverse() const;
    RigidTransform operator*(const RigidTransform& rhs) const;

    // Orthonormal with determinant +1, finite translation.
    bool is_valid(double tol = 1e-9) const;
};

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t);

// Sphere (a == b) or capsule: all points within `radius` of segment [a, b].
struct Primitive {
    enum class Kind { Sphere, Capsule };

    Kind kind = Kind::Sphere;
    Point3 a = Point3::Zero();
    Point3 b = Point3::Zero();
    double radius = 0.0;

    static Primitive sphere(const Point3& center, double radius) { return {Kind::Sphere, center, center, radius}; }
    static Primitive capsule(const Point3& a, const Point3& b, double radius) { return {Kind::Capsule, a, b, radius}; }

    // Distance from p to the core segment (or centre).
    double core_distance(const Point3& p) const;
    // Negative inside, zero on the boundary.
    double signed_distance(const Point3& p) const { return core_distance(p) - radius; }
    Primitive transformed(const RigidTransform& t) const { return {kind, t.apply(a), t.apply(b), radius}; }
};

struct VoxelIndex {
    int x = 0;
    int y = 0;
    int z = 0;

    friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

// Cubic lattice of n^3 voxels with any number of named boolean channels.
// Voxel (i,j,k) covers [origin + i*s, origin + (i+1)*s) per axis, so each
// in-volume point belongs to exactly one voxel. Linear order is x-fastest.
class VoxelGrid {
public:
    VoxelGrid(Point3 origin, double voxel_size, int resolution, std::vector<std::string> channel_names);

    // Grid centred on the coordinate origin, edge = voxel_size * resolution.
    static VoxelGrid centered(double voxel_size, int resolution, std::vector<std::string> channel_names);

    const Point3& origin() const noexcept { return origin_; }
    double voxel_size() const noexcept { return voxel_size_; }
    int resolution() const noexcept { return resolution_; }
    double edge_length() const noexcept { return voxel_size_ * resolution_; }
    std::size_t voxel_count() const noexcept { return count_; }

    std::size_t channel_count() const noexcept { return names_.size(); }
    const std::vector<std::string>& channel_names() const noexcept { return names_; }
    // Index of the named channel; throws ValidationError if unknown.
    std::size_t channel_id(std::string_view name) const;

    std::optional<VoxelIndex> world_to_voxel(const Point3& p) const;
    Point3 voxel_center(const VoxelIndex& v) const;
    Point3 voxel_center(std::size_t linear) const { return voxel_center(unlinear(linear)); }

    bool in_bounds(const VoxelIndex& v) const noexcept {
        return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < resolution_ && v.y < resolution_ &&
               v.z < resolution_;
    }
    std::size_t linear(const VoxelIndex& v) const noexcept {
        const auto n = static_cast<std::size_t>(resolution_);
        return static_cast<std::size_t>(v.x) + n * (static_cast<std::size_t>(v.y) + n * static_cast<std::size_t>(v.z));
    }
    VoxelIndex unlinear(std::size_t i) const noexcept;

    bool get(std::size_t channel, std::size_t linear) const { return data_[channel][linear] != 0; }
    void set(std::size_t channel, std::size_t linear, bool value) { data_[channel][linear] = value ? 1 : 0; }
    std::span<const std::uint8_t> channel(std::size_t c) const { return data_[c]; }
    std::size_t count(std::size_t channel) const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
    Point3 origin_;
    double voxel_size_;
    int resolution_;
    std::size_t count_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::uint8_t>> data_;
};

}  // namespace ibsgrasp

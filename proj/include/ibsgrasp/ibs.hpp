#pragma once

#include "ibsgrasp/geometry.hpp"
#include "ibsgrasp/hand_model.hpp"

#include <cstddef>
#include <vector>

namespace ibsgrasp {

// Volume coordinates: p_canonical = R^T (p_world - seed).
struct CanonicalFrame {
    Point3 seed = Point3::Zero();
    Mat3 rotation = Mat3::Identity();

    RigidTransform to_canonical() const { return {rotation.transpose(), -(rotation.transpose() * seed)}; }
    RigidTransform to_world() const { return {rotation, seed}; }
    bool is_valid() const { return RigidTransform{rotation, seed}.is_valid(1e-9); }
};

struct IbsConfig {
    double voxel_size = 0.005;
    int resolution = 40;
    double relevance_radius = 0.05;
    // Contact threshold as a multiple of voxel_size.
    double contact_factor = 1.5;

    double edge_length() const { return voxel_size * resolution; }
};

inline constexpr std::size_t kIbsSurface = 0;
inline constexpr std::size_t kThumbContact = 1;
inline constexpr std::size_t kOtherContact = 2;

// Three-channel occupancy volume in a canonical frame. Both contact channels
// are subsets of ibs_surface; the constructor enforces it.
class SparseIbsVolume {
public:
    SparseIbsVolume(VoxelGrid grid, CanonicalFrame frame);

    // All channels false (the NoSurface result).
    static SparseIbsVolume empty(const CanonicalFrame& frame, double voxel_size, int resolution);

    const VoxelGrid& grid() const noexcept { return grid_; }
    const CanonicalFrame& frame() const noexcept { return frame_; }
    double voxel_size() const noexcept { return grid_.voxel_size(); }
    int resolution() const noexcept { return grid_.resolution(); }
    std::size_t surface_count() const { return grid_.count(kIbsSurface); }
    bool has_surface() const { return surface_count() > 0; }

    friend bool operator==(const SparseIbsVolume& a, const SparseIbsVolume& b) {
        return a.grid_ == b.grid_ && a.frame_.seed == b.frame_.seed && a.frame_.rotation == b.frame_.rotation;
    }

private:
    VoxelGrid grid_;
    CanonicalFrame frame_;
};

// Throws ValidationError unless the grid has exactly the three named
// channels and both contact channels lie inside ibs_surface.
void validate_ibs_grid(const VoxelGrid& grid);

// Surface voxel centres (canonical frame) with oriented normals and the
// contact subsets as indices into `cloud`.
struct IbsPointSet {
    PointCloud cloud;
    std::vector<std::size_t> thumb_contacts;
    std::vector<std::size_t> other_contacts;
};

// Maps the scene into the frame and keeps the half-open cube [-e/2, e/2)^3.
// Throws EmptyInput on an empty scene and EmptyCrop when nothing survives.
PointCloud canonicalize_and_crop(const PointCloud& scene, const CanonicalFrame& frame, double volume_edge);

// Single-channel ("occupancy") grid centred on the origin.
VoxelGrid voxelize(const PointCloud& cloud, double voxel_size, int resolution);

// Bisector between the hand samples and the scene, both in world frame.
// Both clouds are canonicalized and cropped to the volume. A volume with no
// surface voxels is returned for the NoSurface case.
SparseIbsVolume compute_ibs(const HandSurface& hand, const PointCloud& scene, const CanonicalFrame& frame,
                            const IbsConfig& cfg = {});

// Scene point nearest to the wrist origin.
Point3 grasp_seed_point(const PointCloud& scene, const GraspPose& pose);

// Ground-truth path: sample the posed hand, seed at the nearest scene point
// to the wrist, frame rotation = wrist rotation.
SparseIbsVolume ground_truth_ibs(const HandModel& hand, const GraspPose& pose, const PointCloud& scene,
                                 const IbsConfig& cfg = {});

// PCA neighbourhood for sheet normals. Sixteen neighbours span about two
// voxels and tilt with each terrace of the voxel staircase.
inline constexpr std::size_t kIbsNormalNeighbors = 32;

// Normals point to the hand side of the sheet. Orientation is propagated
// across each connected patch of the k-NN graph along a minimum spanning tree
// of 1 - |n_i . n_j|, then each patch is flipped so that most of it faces
// `hand_hint` (ties toward +z). Throws InsufficientPoints with fewer than
// `k` surface voxels; the neighbourhood is max(k, kIbsNormalNeighbors),
// capped at the voxel count.
IbsPointSet extract_ibs_points(const SparseIbsVolume& volume, const Point3& hand_hint, std::size_t k = 16);

// Dense export with {false, true} -> {-1, 1}, channel-major, voxels in
// linear order.
std::vector<float> signed_occupancy(const SparseIbsVolume& volume);

}  // namespace ibsgrasp

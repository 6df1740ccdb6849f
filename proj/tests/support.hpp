#pragma once

#include "ibsgrasp/fixtures.hpp"
#include "ibsgrasp/geometry.hpp"
#include "ibsgrasp/hand_config.hpp"
#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace ibsgrasp;

// Parallel jaw: palm with a thumb link and a finger link on one joint each.
inline constexpr const char* kJaw = R"(
hand jaw
link palm {
  tag palm
  sphere 0 0 0 0.01
  sample 0 0 0.01
}
link thumb {
  tag thumb
  sphere 0 0 0 0.005
  sample 0 0 0.005
  sample 0.005 0 0
}
link finger {
  tag other_finger
  capsule 0 0 0 0 0 0.03 0.005
  sample 0 0 0.035
}
joint j_thumb {
  parent palm
  child thumb
  axis 0 0 1
  origin -0.03 0 0
  limits -1 1
}
joint j_finger {
  parent palm
  child finger
  axis 0 1 0
  origin 0.03 0 0
  limits -0.5 1.5
}
)";

// Samples on links a and b, which hang off the palm through different
// parents, so the pair is counted.
inline constexpr const char* kChain = R"(
hand chain
link palm {
  tag palm
  sphere 0 0.05 0 0.001
}
link a {
  tag other_finger
  sphere 0 0 -0.01 0.01
  sample 0 0 0
}
link m {
  tag palm
  sphere 0 -0.05 0 0.001
}
link b {
  tag thumb
  sphere 0 0 0.0115 0.01
  sample 0 0 0.0015
}
joint ja {
  parent palm
  child a
  axis 0 0 1
  origin 0 0 0
  limits -1 1
}
joint jm {
  parent palm
  child m
  axis 0 0 1
  origin 0 0 0
  limits -1 1
}
joint jb {
  parent m
  child b
  axis 0 0 1
  origin 0 0 0
  limits -1 1
}
)";

// Palm and finger samples on the -x side, one thumb sample at x = +0.01,
// level with a voxel centre of the planar IBS.
inline constexpr const char* kPair = R"(
hand pair
link palm {
  tag palm
  sphere -0.05 0 0 0.01
  sample -0.06 0 0
}
link finger {
  tag other_finger
  sphere -0.05 0.03 0 0.01
  sample -0.06 0.03 0
}
link thumb {
  tag thumb
  sphere 0.02 0.0025 0.0025 0.01
  sample 0.01 0.0025 0.0025
}
joint jf {
  parent palm
  child finger
  axis 0 0 1
  origin 0 0 0
  limits -1 1
}
joint jt {
  parent palm
  child thumb
  axis 0 0 1
  origin 0 0 0
  limits -1 1
}
)";

inline std::filesystem::path data_dir() { return IBSGRASP_DATA_DIR; }
inline std::filesystem::path hand_path(const std::string& name) { return data_dir() / "hands" / (name + ".hand"); }

inline const HandModel& two_finger() {
    static const HandModel h = load_hand_file(hand_path("two_finger_4dof"));
    return h;
}

inline const HandModel& four_finger() {
    static const HandModel h = load_hand_file(hand_path("four_finger_16dof"));
    return h;
}

inline std::vector<const HandModel*> shipped_hands() { return {&two_finger(), &four_finger()}; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(std::mt19937_64& rng, double half) {
    return {uniform(rng, -half, half), uniform(rng, -half, half), uniform(rng, -half, half)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng) { return axis_angle(random_unit(rng), uniform(rng, 0.0, 3.0)); }

inline RigidTransform random_transform(std::mt19937_64& rng, double half = 1.0) {
    return {random_rotation(rng), random_vec(rng, half)};
}

inline std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n, double half) {
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = random_vec(rng, half);
    return pts;
}

// Joints drawn from the limits widened by `slack` on both sides.
inline Eigen::VectorXd random_joints(const HandModel& hand, std::mt19937_64& rng, double slack = 0.0) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(hand.dof()));
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        const auto& js = hand.joints()[j];
        q[static_cast<Eigen::Index>(j)] = uniform(rng, js.theta_min - slack, js.theta_max + slack);
    }
    return q;
}

inline GraspPose random_pose(const HandModel& hand, std::mt19937_64& rng, double slack = 0.0) {
    return {random_transform(rng, 0.2), random_joints(hand, rng, slack)};
}

// Central differences of f around zero PoseParams of `base`.
template <typename F>
Eigen::VectorXd fd_gradient(const HandModel& hand, const GraspPose& base, F&& f, double h = 1e-5) {
    const auto n = static_cast<Eigen::Index>(param_count(hand));
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d[i] = h;
        const double fp = f(pose_from_params(base, PoseParams::unpack(d)));
        d[i] = -h;
        const double fm = f(pose_from_params(base, PoseParams::unpack(d)));
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Relative error of a gradient vector, ||a - n|| / max(||a||, ||n||); zero
// when ||a - n|| is within `floor`.
inline double gradient_rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor = 1e-8) {
    const double err = (analytic - numeric).norm();
    if (err <= floor) return 0.0;
    return err / std::max(analytic.norm(), numeric.norm());
}

// Brute-force nearest distance.
inline double nearest_distance(const std::vector<Point3>& cloud, const Point3& q) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud) best = std::min(best, (p - q).norm());
    return best;
}

// Single-point "hand" with one sample per tag, wrapped as a HandSurface.
inline HandSurface point_hand(const std::vector<Point3>& pts, FingerTag tag = FingerTag::Palm) {
    HandSurface s;
    s.cloud.points = pts;
    s.tags.assign(pts.size(), tag);
    s.link_of.assign(pts.size(), 0);
    return s;
}

// Volume whose ibs_surface is the voxel plane just right of x = 0 (index
// n/2), restricted to |y|, |z| < extent, with optional contact voxels.
inline SparseIbsVolume planar_volume(double extent = 0.03, const std::vector<std::size_t>& thumb = {},
                                     const std::vector<std::size_t>& other = {}, const IbsConfig& cfg = {}) {
    VoxelGrid g = VoxelGrid::centered(cfg.voxel_size, cfg.resolution, {"ibs_surface", "thumb_contact", "other_contact"});
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const VoxelIndex v = g.unlinear(i);
        const Point3 c = g.voxel_center(i);
        if (v.x == cfg.resolution / 2 && std::abs(c.y()) < extent && std::abs(c.z()) < extent) g.set(0, i, true);
    }
    for (std::size_t i : thumb) g.set(1, i, true);
    for (std::size_t i : other) g.set(2, i, true);
    return {std::move(g), CanonicalFrame{}};
}

// Brute-force copy of the crop rule: canonical coordinates inside [-e/2, e/2)^3.
inline std::vector<Point3> crop_brute(const std::vector<Point3>& world, const CanonicalFrame& frame, double edge) {
    std::vector<Point3> out;
    for (const auto& p : world) {
        const Point3 c = frame.rotation.transpose() * (p - frame.seed);
        if ((c.array() >= -0.5 * edge).all() && (c.array() < 0.5 * edge).all()) out.push_back(c);
    }
    return out;
}

// Roughly top-down pose over `target` with random joints, free of scene
// penetration. Returns nullopt after `attempts` rejections.
inline std::optional<GraspPose> random_valid_pose(const HandModel& hand, const PointCloud& scene, const Point3& target,
                                                  std::mt19937_64& rng, int attempts = 200) {
    const double pi = std::numbers::pi;
    for (int a = 0; a < attempts; ++a) {
        const Mat3 r = axis_angle(Vec3::UnitZ(), uniform(rng, -pi, pi)) * axis_angle(random_unit(rng), uniform(rng, 0, 0.5)) *
                       axis_angle(Vec3::UnitX(), pi);
        GraspPose p{{r, Vec3::Zero()}, random_joints(hand, rng)};
        p.wrist.translation = target - uniform(rng, 0.03, 0.09) * (r * Vec3::UnitZ()) + random_vec(rng, 0.01);
        bool clear = true;
        const FkResult fk = forward_kinematics(hand, p);
        for (const auto& prim : world_primitives(hand, fk)) {
            for (const auto& q : scene.points) {
                if (prim.signed_distance(q) < 0.0) {
                    clear = false;
                    break;
                }
            }
            if (!clear) break;
        }
        if (clear) return p;
    }
    return std::nullopt;
}

struct VolumeViolations {
    std::size_t equidistance = 0;  // |d_hand - d_scene| > sqrt(3) voxel sizes
    std::size_t containment = 0;   // contact bit outside ibs_surface
    std::size_t separation = 0;    // surface voxel centre inside a hand primitive

    bool none() const { return equidistance == 0 && containment == 0 && separation == 0; }
};

// Brute-force audit of a ground-truth volume against its hand pose and scene.
inline VolumeViolations volume_violations(const HandModel& hand, const GraspPose& pose, const PointCloud& scene,
                                          const SparseIbsVolume& v) {
    VolumeViolations out;
    const double vs = v.voxel_size();
    const double edge = vs * v.resolution();
    const auto surface = sample_hand_surface(hand, pose);
    const auto hand_c = crop_brute(surface.cloud.points, v.frame(), edge);
    const auto scene_c = crop_brute(scene.points, v.frame(), edge);
    const RigidTransform to_world = v.frame().to_world();
    const auto prims = world_primitives(hand, forward_kinematics(hand, pose));
    const VoxelGrid& g = v.grid();
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const bool s = g.get(kIbsSurface, i);
        if (!s && (g.get(kThumbContact, i) || g.get(kOtherContact, i))) ++out.containment;
        if (!s) continue;
        const Point3 c = g.voxel_center(i);
        if (std::abs(nearest_distance(hand_c, c) - nearest_distance(scene_c, c)) > std::sqrt(3.0) * vs) {
            ++out.equidistance;
        }
        const Point3 w = to_world.apply(c);
        for (const auto& prim : prims) {
            if (prim.signed_distance(w) < -1e-6) {
                ++out.separation;
                break;
            }
        }
    }
    return out;
}

// Two voxel planes at x indices n/2 - 4 and n/2 + 4, |y|, |z| < 0.015. Thumb
// contacts are a 3x3 patch on the +x plane; other-finger contacts are the
// same patch on the -x plane (antipodal) or beside it on the +x plane
// (parallel). Normals oriented away from the origin then oppose or agree.
inline SparseIbsVolume slab_volume(bool antipodal, const IbsConfig& cfg = {}) {
    VoxelGrid g = VoxelGrid::centered(cfg.voxel_size, cfg.resolution, {"ibs_surface", "thumb_contact", "other_contact"});
    const int n = cfg.resolution;
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const VoxelIndex v = g.unlinear(i);
        const Point3 c = g.voxel_center(i);
        if ((v.x == n / 2 - 4 || v.x == n / 2 + 4) && std::abs(c.y()) < 0.015 && std::abs(c.z()) < 0.015) g.set(0, i, true);
    }
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
            g.set(1, g.linear({n / 2 + 4, n / 2 + dy + 1, n / 2 + dz}), true);
            if (antipodal) {
                g.set(2, g.linear({n / 2 - 4, n / 2 + dy + 1, n / 2 + dz}), true);
            } else {
                g.set(2, g.linear({n / 2 + 4, n / 2 + dy - 2, n / 2 + dz}), true);
            }
        }
    }
    return {std::move(g), CanonicalFrame{}};
}

inline std::size_t planar_voxel(const SparseIbsVolume& v, int y, int z) {
    const int n = v.resolution();
    return v.grid().linear({n / 2, n / 2 + y, n / 2 + z});
}

}  // namespace testing

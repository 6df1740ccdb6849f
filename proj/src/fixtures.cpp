#include "ibsgrasp/fixtures.hpp"

#include "ibsgrasp/energy.hpp"
#include "ibsgrasp/error.hpp"
#include "ibsgrasp/quality.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace ibsgrasp {

namespace {

constexpr double kTargetSlack = 0.001;

double clearance(std::span<const Primitive> prims, const PointCloud& scene) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : scene.points) {
        for (const auto& prim : prims) best = std::min(best, prim.signed_distance(p));
    }
    return best;
}

// Joints grouped by the palm joint their chain starts from.
struct Finger {
    std::vector<std::size_t> joints;
    std::vector<std::size_t> links;
};

std::vector<Finger> fingers_of(const HandModel& hand) {
    std::map<std::size_t, Finger> by_root;
    for (std::size_t l = 0; l < hand.links().size(); ++l) {
        const auto& chain = hand.joint_chain(l);
        if (!chain.empty()) by_root[chain.front()].links.push_back(l);
    }
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        by_root[hand.joint_chain(hand.joint_child_link(j)).front()].joints.push_back(j);
    }
    std::vector<Finger> out;
    for (auto& [root, f] : by_root) out.push_back(std::move(f));
    return out;
}

double closing_angle(const JointSpec& j, double s) {
    return std::clamp(s * j.synergy, j.theta_min, j.theta_max);
}

std::vector<Primitive> link_primitives(const HandModel& hand, const FkResult& fk, const std::vector<std::size_t>& links) {
    std::vector<Primitive> out;
    for (std::size_t l : links) {
        for (const auto& prim : hand.links()[l].primitives) out.push_back(prim.transformed(fk.links[l]));
    }
    return out;
}

PointCloud near_points(const PointCloud& scene, const Point3& center, double radius) {
    PointCloud out;
    for (const auto& p : scene.points) {
        if ((p - center).norm() <= radius) out.points.push_back(p);
    }
    return out;
}

std::optional<GraspPose> attempt_grasp(const HandModel& hand, const Scene& scene, const PointCloud& local,
                                       const PointCloud& target, std::mt19937_64& rng, const FixtureConfig& cfg) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double pi = std::numbers::pi;
    double yaw = -pi + 2.0 * pi * unit(rng);
    if (scene.target.shape == SceneObject::Shape::Box) {
        yaw = scene.target.yaw + 0.5 * pi * std::floor(4.0 * unit(rng)) + (unit(rng) - 0.5) * 0.35;
    }
    if (scene.obstacle) {
        // Thumb-finger axis across the gap direction, palm width along it.
        yaw = scene.obstacle->yaw + 0.5 * pi + (unit(rng) < 0.5 ? 0.0 : pi) + (unit(rng) - 0.5) * 0.2;
    }
    const double tilt_dir = 2.0 * pi * unit(rng);
    const double tilt = cfg.max_tilt * unit(rng);
    const Mat3 r = axis_angle(Vec3::UnitZ(), yaw) *
                   axis_angle(Vec3(std::cos(tilt_dir), std::sin(tilt_dir), 0.0), tilt) *
                   axis_angle(Vec3::UnitX(), pi);

    GraspPose pose;
    pose.wrist.rotation = r;
    pose.joints = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hand.dof()));
    const auto fingers = fingers_of(hand);
    for (const auto& f : fingers) {
        for (std::size_t j : f.joints) pose.joints[static_cast<Eigen::Index>(j)] = closing_angle(hand.joints()[j], -2.0);
    }

    const Vec3 approach = r * Vec3::UnitZ();
    const std::vector<std::size_t> palm{hand.root_link()};
    double h = 0.0;
    for (;; h += 0.001) {
        if (h > 0.2) return std::nullopt;
        pose.wrist.translation = scene.target.center - h * approach;
        const auto fk = forward_kinematics(hand, pose);
        // Open fingers must start clear of the scene (the table included).
        if (clearance(link_primitives(hand, fk, palm), local) >= cfg.palm_gap &&
            clearance(world_primitives(hand, fk), local) > 1.5 * cfg.finger_gap) {
            break;
        }
    }

    for (const auto& f : fingers) {
        auto finger_clearance = [&](double s) {
            GraspPose p = pose;
            for (std::size_t j : f.joints) p.joints[static_cast<Eigen::Index>(j)] = closing_angle(hand.joints()[j], s);
            return clearance(link_primitives(hand, forward_kinematics(hand, p), f.links), local);
        };
        double lo = -2.0;
        if (finger_clearance(lo) <= cfg.finger_gap) return std::nullopt;
        double hi = lo;
        bool reached = false;
        for (; hi <= 3.0; hi += 0.02) {
            if (finger_clearance(hi) <= cfg.finger_gap) {
                reached = true;
                break;
            }
            lo = hi;
        }
        if (!reached) return std::nullopt;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            (finger_clearance(mid) > cfg.finger_gap ? lo : hi) = mid;
        }
        for (std::size_t j : f.joints) pose.joints[static_cast<Eigen::Index>(j)] = closing_angle(hand.joints()[j], lo);
        // The finger has to stop on the target, not on the table or an obstacle.
        if (clearance(link_primitives(hand, forward_kinematics(hand, pose), f.links), target) >
            cfg.finger_gap + kTargetSlack) {
            return std::nullopt;
        }
    }
    return pose;
}

}  // namespace

GraspPose to_canonical(const GraspPose& world, const CanonicalFrame& frame) {
    return {frame.to_canonical() * world.wrist, world.joints};
}

GraspPose to_world(const GraspPose& canonical, const CanonicalFrame& frame) {
    return {frame.to_world() * canonical.wrist, canonical.joints};
}

GraspPose GraspFixture::canonical_pose() const { return to_canonical(pose, volume.frame()); }

double hand_clearance(const HandModel& hand, const GraspPose& pose, const PointCloud& scene) {
    return clearance(world_primitives(hand, forward_kinematics(hand, pose)), scene);
}

GraspFixture make_fixture(const HandModel& hand, Scene scene, std::uint64_t seed, const FixtureConfig& cfg) {
    std::mt19937_64 rng(seed);
    const PointCloud local = near_points(scene.cloud, scene.target.center, 0.2);
    const PointCloud target = scene.subset(SceneLabel::Target);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        const auto pose = attempt_grasp(hand, scene, local, target, rng, cfg);
        if (!pose) continue;
        if (max_penetration_depth(scene.cloud, hand, *pose) > 0.0) continue;
        SparseIbsVolume volume = SparseIbsVolume::empty({}, cfg.ibs.voxel_size, cfg.ibs.resolution);
        try {
            volume = ground_truth_ibs(hand, *pose, scene.cloud, cfg.ibs);
        } catch (const Error&) {
            continue;
        }
        if (volume.grid().count(kThumbContact) == 0 || volume.grid().count(kOtherContact) == 0) continue;
        const GraspPose canonical = to_canonical(*pose, volume.frame());
        IbsPointSet ibs;
        try {
            ibs = extract_ibs_points(volume, canonical.wrist.translation);
        } catch (const Error&) {
            continue;
        }
        if (energy_sidedness(hand, canonical, ibs).value > cfg.max_sidedness) continue;
        return GraspFixture{std::move(scene), *pose, std::move(volume), attempt};
    }
    throw Error(ErrorCode::ValidationError, "no valid ground-truth grasp for scene '" + scene.name + "' seed " +
                                                std::to_string(seed));
}

}  // namespace ibsgrasp

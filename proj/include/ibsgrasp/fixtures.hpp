#pragma once

// Ground-truth grasps on procedural scenes: a top-down approach above the
// target whose fingers close along their synergy until each stops a fixed gap
// short of the target (not the table or an obstacle). The resulting pose and
// its IBS are the reference the optimizer is expected to recover.

#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"
#include "ibsgrasp/scene.hpp"

#include <cstdint>

namespace ibsgrasp {

struct FixtureConfig {
    double finger_gap = 0.008;  // finger surface to scene at closure
    double palm_gap = 0.01;     // palm surface to scene
    double max_tilt = 0.26;     // radians off vertical
    int max_attempts = 60;
    double max_sidedness = 1e-4;  // ground-truth pose against its own IBS
    IbsConfig ibs;
};

struct GraspFixture {
    Scene scene;
    GraspPose pose;  // world frame
    SparseIbsVolume volume;
    int attempt = 0;

    // Ground-truth pose expressed in the volume's canonical frame.
    GraspPose canonical_pose() const;
};

// Pose in the canonical frame of `frame`, and back.
GraspPose to_canonical(const GraspPose& world, const CanonicalFrame& frame);
GraspPose to_world(const GraspPose& canonical, const CanonicalFrame& frame);

// Smallest distance from the hand primitives to any scene point (negative
// when a point is inside a primitive).
double hand_clearance(const HandModel& hand, const GraspPose& pose, const PointCloud& scene);

// Throws ValidationError when no attempt yields a fixture with both contact
// channels populated, no penetration, and near-zero ground-truth sidedness.
GraspFixture make_fixture(const HandModel& hand, Scene scene, std::uint64_t seed, const FixtureConfig& cfg = {});

}  // namespace ibsgrasp

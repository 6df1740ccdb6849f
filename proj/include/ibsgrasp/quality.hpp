#pragma once

#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ibsgrasp {

// Inward normals point from the IBS toward the scene (force direction).
struct Contact {
    Point3 point;
    Vec3 normal;
};

struct ContactSet {
    std::vector<Contact> thumb;
    std::vector<Contact> others;

    // Throws ValidationError on a normal whose length is off unity by > 1e-6.
    void validate() const;
};

struct IbsScore {
    double value = -std::numeric_limits<double>::infinity();
    bool feasible = false;
};

ContactSet contact_set_from_points(const IbsPointSet& ibs);
// Volumes with fewer surface voxels than the normal neighbourhood use the
// whole surface as the neighbourhood; below three voxels the normal falls
// back to the direction away from `hand_hint`.
ContactSet contact_set_from_volume(const SparseIbsVolume& volume, const Point3& hand_hint);

// -|| mean inward normal ||^2 over all contacts; infeasible (value -inf)
// unless both finger groups have at least one contact.
IbsScore force_closure_score(const ContactSet& contacts);

struct RankedIbs {
    std::size_t index = 0;
    IbsScore score;
};

// Descending by score value, stable on ties.
std::vector<RankedIbs> rank_scores(std::span<const IbsScore> scores);
// Throws EmptyInput on an empty candidate list.
std::vector<RankedIbs> rank_ibs(std::span<const SparseIbsVolume> candidates, const Point3& hand_hint);

struct GraspTrial {
    GraspPose pose;
    double residual = 0.0;
};

struct RankedGrasp {
    std::size_t index = 0;
    double residual = 0.0;
};

// Ascending by residual, stable on ties, non-finite residuals last.
// Throws EmptyInput on an empty list.
std::vector<RankedGrasp> rank_grasps(std::span<const GraspTrial> trials);

// Distal links (no child joint) tagged thumb or other_finger that carry
// surface samples.
std::vector<std::size_t> fingertip_links(const HandModel& hand);

// Root mean square over fingertip links of the distance from the link's
// closest sample to the nearest contact voxel centre of its group (thumb to
// thumb_contact, others to other_contact, either group falling back to all
// contact voxels when its own channel is empty). Pose and volume share a
// frame. NaN when the volume has no contact voxels.
double fingertip_contact_rms(const HandModel& hand, const GraspPose& pose, const SparseIbsVolume& volume);

// Deepest intrusion of any scene point into any hand primitive, >= 0.
double max_penetration_depth(const PointCloud& scene, const HandModel& hand, const GraspPose& pose);

}  // namespace ibsgrasp

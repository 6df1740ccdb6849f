#pragma once

// Grasp energy against a fixed IBS. The sidedness term is the one that keeps
// hand points on their own side of the sheet; the contact term is the
// chamfer between finger samples and the contact voxels.
//
// Gradients are taken with respect to PoseParams at zero increment (length
// 6 + dof) with nearest-point correspondences and hinge activity frozen, so
// the frozen energy is smooth and finite differences agree with them.

#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"
#include "ibsgrasp/kernels.hpp"
#include "ibsgrasp/spatial_index.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ibsgrasp {

struct EnergyWeights {
    double lambda1 = 5.0;     // joint limits
    double lambda2 = 1.0;     // self-penetration
    double lambda3 = 1000.0;  // sidedness
    double lambda4 = 1.0;     // contact
    double alpha1 = 80.0;
    double alpha2 = 100.0;
    double alpha3 = 2.0;
    double delta = 0.003;  // self-penetration safety distance, metres

    // Throws ValidationError on a negative weight or non-positive delta.
    void validate() const;
};

struct EnergyBreakdown {
    double e_joint = 0.0;
    double e_selfpen = 0.0;
    double e_sidedness = 0.0;
    double e_contact = 0.0;
    double total = 0.0;
    Eigen::VectorXd gradient;
    Eigen::VectorXd grad_joint;
    Eigen::VectorXd grad_selfpen;
    Eigen::VectorXd grad_sidedness;
    Eigen::VectorXd grad_contact;
};

// Everything that is held fixed while differentiating at one pose.
struct Correspondences {
    // Per joint: -1 below the lower limit, +1 above the upper, 0 inside.
    std::vector<int> joint_side;
    // Hand sample pairs (i < j) closer than delta on non-adjacent links.
    std::vector<kernels::ProximityPair> selfpen_pairs;
    // Per hand sample: nearest IBS point and hinge state.
    enum class Side : unsigned char { Inactive, Active, Coincident };
    std::vector<std::size_t> ibs_nearest;
    std::vector<Side> side;
    // Per thumb / other contact voxel: nearest thumb / other hand sample.
    std::vector<std::size_t> thumb_contact_sample;
    std::vector<std::size_t> other_contact_sample;
    // Per finger sample (thumb or other, in sample order): nearest contact voxel.
    std::vector<std::size_t> finger_samples;
    std::vector<std::size_t> finger_contact;
};

// Reusable evaluator for one hand and one IBS point set. The pose and the
// IBS must share a frame (the optimizer works in the canonical frame).
class EnergyModel {
public:
    EnergyModel(const HandModel& hand, IbsPointSet ibs, EnergyWeights weights);

    const HandModel& hand() const noexcept { return *hand_; }
    const IbsPointSet& ibs() const noexcept { return ibs_; }
    const EnergyWeights& weights() const noexcept { return weights_; }

    Correspondences correspond(const GraspPose& pose) const;
    EnergyBreakdown evaluate(const GraspPose& pose, const Correspondences& c) const;
    EnergyBreakdown evaluate(const GraspPose& pose) const { return evaluate(pose, correspond(pose)); }

private:
    const HandModel* hand_;
    IbsPointSet ibs_;
    EnergyWeights weights_;
    SpatialIndex ibs_index_;
    std::vector<std::size_t> contact_ids_;  // thumb contacts then other contacts
    std::optional<SpatialIndex> contact_index_;
    kernels::PairMask mask_;
    std::vector<std::size_t> thumb_samples_;
    std::vector<std::size_t> other_samples_;
};

struct TermResult {
    double value = 0.0;
    Eigen::VectorXd gradient;  // over PoseParams
};

// (1/d) sum of limit violations; subgradient 0 exactly at a limit.
TermResult energy_joint(const HandModel& hand, const GraspPose& pose);
// (1/|P_h|^2) sum over ordered pairs of max(delta - d, 0), same-link and
// parent-child pairs excluded.
TermResult energy_self_penetration(const HandModel& hand, const GraspPose& pose, double delta);
// (1/|P_h|) sum of max(0, -u . n), u the unit offset from the nearest IBS
// point. A sample on top of its IBS point scores 1 with zero gradient.
TermResult energy_sidedness(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs);
TermResult energy_contact(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs,
                          const EnergyWeights& weights);
EnergyBreakdown energy_total(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs,
                             const EnergyWeights& weights);

// Contact energy on bare point sets: alpha1 * mean over thumb contacts of the
// squared distance to the nearest thumb point, alpha2 likewise for other
// contacts, alpha3 * mean over all finger points of the squared distance to
// the nearest contact. Empty groups contribute 0.
double contact_energy_points(std::span<const Point3> thumb, std::span<const Point3> other, const IbsPointSet& ibs,
                             const EnergyWeights& weights);

}  // namespace ibsgrasp

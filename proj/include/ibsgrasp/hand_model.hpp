#pragma once

#include "ibsgrasp/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ibsgrasp {

enum class FingerTag { Thumb, OtherFinger, Palm };

std::string_view to_string(FingerTag tag);
std::optional<FingerTag> finger_tag_from_string(std::string_view s);

struct LinkSpec {
    std::string name;
    std::vector<Primitive> primitives;     // link frame
    std::vector<Point3> surface_samples;   // link frame, on a primitive boundary
    FingerTag tag = FingerTag::Palm;
};

// Revolute joint. The child frame is parent * origin * Rot(axis, theta).
struct JointSpec {
    std::string name;
    std::string parent_link;
    std::string child_link;
    Vec3 axis = Vec3::UnitZ();
    RigidTransform origin;
    double theta_min = 0.0;
    double theta_max = 0.0;
    // Closing coefficient used by the grasp fixture generator; 0 = held.
    double synergy = 0.0;
};

// Kinematic tree of revolute joints rooted at the wrist link. Joint indices
// (and GraspPose::joints) follow declaration order.
class HandModel {
public:
    // Validates all invariants; throws ValidationError naming the violation.
    HandModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints);

    const std::string& name() const noexcept { return name_; }
    std::size_t dof() const noexcept { return joints_.size(); }
    const std::vector<LinkSpec>& links() const noexcept { return links_; }
    const std::vector<JointSpec>& joints() const noexcept { return joints_; }
    std::size_t root_link() const noexcept { return root_; }
    std::optional<std::size_t> link_index(std::string_view name) const;

    // Joint that moves link i (nullopt for the root).
    std::optional<std::size_t> parent_joint(std::size_t link) const { return parent_joint_[link]; }
    std::size_t joint_parent_link(std::size_t joint) const { return joint_parent_[joint]; }
    std::size_t joint_child_link(std::size_t joint) const { return joint_child_[joint]; }
    // Joints from the root down to link i, root-most first.
    const std::vector<std::size_t>& joint_chain(std::size_t link) const { return chain_[link]; }
    // Joint indices in an order where parents precede children.
    const std::vector<std::size_t>& fk_order() const noexcept { return fk_order_; }
    // Same link or directly connected by one joint.
    bool adjacent_links(std::size_t a, std::size_t b) const;

    std::size_t sample_count() const noexcept { return sample_count_; }
    Eigen::VectorXd joint_min() const;
    Eigen::VectorXd joint_max() const;
    Eigen::VectorXd mid_range() const;

private:
    std::string name_;
    std::vector<LinkSpec> links_;
    std::vector<JointSpec> joints_;
    std::size_t root_ = 0;
    std::vector<std::optional<std::size_t>> parent_joint_;
    std::vector<std::size_t> joint_parent_;
    std::vector<std::size_t> joint_child_;
    std::vector<std::vector<std::size_t>> chain_;
    std::vector<std::size_t> fk_order_;
    std::size_t sample_count_ = 0;
};

// g = {T, J}: wrist pose plus joint angles in radians.
struct GraspPose {
    RigidTransform wrist;
    Eigen::VectorXd joints;
};

// Local chart around a reference pose: translation is additive, rotation is
// right-multiplied through the exponential map, joints are additive.
// Packed order in vectors: [translation(3), rotation_local(3), joints(dof)].
struct PoseParams {
    Vec3 translation = Vec3::Zero();
    Vec3 rotation_local = Vec3::Zero();
    Eigen::VectorXd joints;

    static PoseParams zero(std::size_t dof);
    static PoseParams unpack(const Eigen::VectorXd& packed);
    Eigen::VectorXd pack() const;
};

inline std::size_t param_count(const HandModel& hand) { return 6 + hand.dof(); }

// Throws ChartOverflow when ||rotation_local|| >= pi.
GraspPose pose_from_params(const GraspPose& reference, const PoseParams& params);
// Chart coordinates of `pose` around `reference` (log map); inverse of the above.
PoseParams params_from_pose(const GraspPose& reference, const GraspPose& pose);

struct FkResult {
    std::vector<RigidTransform> links;         // per link, world frame
    std::vector<RigidTransform> joint_frames;  // per joint: parent * origin (rotation axis frame)
};

FkResult forward_kinematics(const HandModel& hand, const GraspPose& pose);

// Hand surface samples in world coordinates. Order: links in declaration
// order, then samples in declaration order.
struct HandSurface {
    PointCloud cloud;
    std::vector<FingerTag> tags;
    std::vector<std::size_t> link_of;
    // World-frame primitives of the same pose; empty for bare point sets.
    std::vector<Primitive> primitives;
};

HandSurface sample_hand_surface(const HandModel& hand, const GraspPose& pose);
HandSurface sample_hand_surface(const HandModel& hand, const FkResult& fk);

// Every primitive in world coordinates, with the link it belongs to.
std::vector<Primitive> world_primitives(const HandModel& hand, const FkResult& fk,
                                        std::vector<std::size_t>* link_of = nullptr);

// d(world point) / d(PoseParams) at zero increment, one 3 x (6 + dof) block
// per surface sample.
std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> surface_jacobian(const HandModel& hand,
                                                                       const GraspPose& pose);

// Accumulates sum_i J_i^T g_i without materialising the Jacobian blocks.
Eigen::VectorXd pull_back(const HandModel& hand, const GraspPose& pose, const FkResult& fk,
                          const HandSurface& surface, const std::vector<Vec3>& point_gradients);

}  // namespace ibsgrasp

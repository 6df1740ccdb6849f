#include "ibsgrasp/hand_model.hpp"

#include "ibsgrasp/error.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace ibsgrasp {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ValidationError, what); }

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::string_view to_string(FingerTag tag) {
    switch (tag) {
        case FingerTag::Thumb: return "thumb";
        case FingerTag::OtherFinger: return "other_finger";
        case FingerTag::Palm: return "palm";
    }
    return "palm";
}

std::optional<FingerTag> finger_tag_from_string(std::string_view s) {
    if (s == "thumb") return FingerTag::Thumb;
    if (s == "other_finger") return FingerTag::OtherFinger;
    if (s == "palm") return FingerTag::Palm;
    return std::nullopt;
}

HandModel::HandModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints)
    : name_(std::move(name)), links_(std::move(links)), joints_(std::move(joints)) {
    if (links_.empty()) invalid("hand has no links");

    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < links_.size(); ++i) {
        if (!by_name.emplace(links_[i].name, i).second) invalid("duplicate link name '" + links_[i].name + "'");
    }
    std::unordered_map<std::string, std::size_t> joint_names;
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        if (!joint_names.emplace(joints_[j].name, j).second) {
            invalid("duplicate joint name '" + joints_[j].name + "'");
        }
    }

    parent_joint_.assign(links_.size(), std::nullopt);
    joint_parent_.resize(joints_.size());
    joint_child_.resize(joints_.size());
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        auto& jt = joints_[j];
        const auto p = by_name.find(jt.parent_link);
        const auto c = by_name.find(jt.child_link);
        if (p == by_name.end()) invalid("joint '" + jt.name + "' references unknown parent link '" + jt.parent_link + "'");
        if (c == by_name.end()) invalid("joint '" + jt.name + "' references unknown child link '" + jt.child_link + "'");
        if (p->second == c->second) invalid("cycle: joint '" + jt.name + "' connects a link to itself");
        if (parent_joint_[c->second]) invalid("link '" + jt.child_link + "' has more than one parent joint");
        parent_joint_[c->second] = j;
        joint_parent_[j] = p->second;
        joint_child_[j] = c->second;

        const double len = jt.axis.norm();
        if (!jt.axis.allFinite() || std::abs(len - 1.0) > 1e-6) invalid("joint '" + jt.name + "' axis is not unit length");
        jt.axis /= len;
        if (!(jt.theta_min < jt.theta_max)) invalid("joint '" + jt.name + "' requires theta_min < theta_max");
        if (jt.theta_min < -kTwoPi || jt.theta_max > kTwoPi) {
            invalid("joint '" + jt.name + "' limits outside [-2pi, 2pi]");
        }
        if (!jt.origin.is_valid(1e-9)) invalid("joint '" + jt.name + "' origin rotation is not a proper rotation");
    }

    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < links_.size(); ++i) {
        if (!parent_joint_[i]) roots.push_back(i);
    }
    if (roots.size() != 1) {
        // With one parent per link, no root means every link sits on a cycle.
        if (roots.empty()) invalid("cycle: joint graph has no root link");
        invalid("joint graph is not a single tree (" + std::to_string(roots.size()) + " roots)");
    }
    root_ = roots.front();

    chain_.assign(links_.size(), {});
    std::vector<bool> reached(links_.size(), false);
    std::deque<std::size_t> queue{root_};
    reached[root_] = true;
    while (!queue.empty()) {
        const std::size_t link = queue.front();
        queue.pop_front();
        for (std::size_t j = 0; j < joints_.size(); ++j) {
            if (joint_parent_[j] != link) continue;
            const std::size_t child = joint_child_[j];
            if (reached[child]) invalid("cycle: link '" + links_[child].name + "' reached twice");
            reached[child] = true;
            chain_[child] = chain_[link];
            chain_[child].push_back(j);
            fk_order_.push_back(j);
            queue.push_back(child);
        }
    }
    for (std::size_t i = 0; i < links_.size(); ++i) {
        if (!reached[i]) invalid("cycle: link '" + links_[i].name + "' is a descendant of itself");
    }

    bool has_thumb = false;
    bool has_other = false;
    for (const auto& link : links_) {
        if (link.primitives.empty()) invalid("link '" + link.name + "' has no primitives");
        for (const auto& prim : link.primitives) {
            if (!(prim.radius > 0.0) || !prim.a.allFinite() || !prim.b.allFinite()) {
                invalid("link '" + link.name + "' has an invalid primitive");
            }
        }
        for (const auto& s : link.surface_samples) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& prim : link.primitives) best = std::min(best, std::abs(prim.signed_distance(s)));
            if (!(best <= 1e-6)) invalid("link '" + link.name + "' has a surface sample off its primitive boundaries");
        }
        sample_count_ += link.surface_samples.size();
        if (!link.surface_samples.empty()) {
            has_thumb |= link.tag == FingerTag::Thumb;
            has_other |= link.tag == FingerTag::OtherFinger;
        }
    }
    if (!has_thumb) invalid("missing tag: no sampled link is tagged thumb");
    if (!has_other) invalid("missing tag: no sampled link is tagged other_finger");
}

std::optional<std::size_t> HandModel::link_index(std::string_view name) const {
    for (std::size_t i = 0; i < links_.size(); ++i) {
        if (links_[i].name == name) return i;
    }
    return std::nullopt;
}

bool HandModel::adjacent_links(std::size_t a, std::size_t b) const {
    if (a == b) return true;
    if (parent_joint_[a] && joint_parent_[*parent_joint_[a]] == b) return true;
    if (parent_joint_[b] && joint_parent_[*parent_joint_[b]] == a) return true;
    return false;
}

Eigen::VectorXd HandModel::joint_min() const {
    Eigen::VectorXd v(dof());
    for (std::size_t j = 0; j < dof(); ++j) v[static_cast<Eigen::Index>(j)] = joints_[j].theta_min;
    return v;
}

Eigen::VectorXd HandModel::joint_max() const {
    Eigen::VectorXd v(dof());
    for (std::size_t j = 0; j < dof(); ++j) v[static_cast<Eigen::Index>(j)] = joints_[j].theta_max;
    return v;
}

Eigen::VectorXd HandModel::mid_range() const { return 0.5 * (joint_min() + joint_max()); }

PoseParams PoseParams::zero(std::size_t dof) {
    PoseParams p;
    p.joints = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dof));
    return p;
}

PoseParams PoseParams::unpack(const Eigen::VectorXd& packed) {
    PoseParams p;
    p.translation = packed.segment<3>(0);
    p.rotation_local = packed.segment<3>(3);
    p.joints = packed.tail(packed.size() - 6);
    return p;
}

Eigen::VectorXd PoseParams::pack() const {
    Eigen::VectorXd v(6 + joints.size());
    v << translation, rotation_local, joints;
    return v;
}

GraspPose pose_from_params(const GraspPose& reference, const PoseParams& params) {
    if (!(params.rotation_local.norm() < std::numbers::pi)) {
        throw Error(ErrorCode::ChartOverflow, "rotation increment norm must be < pi");
    }
    if (params.joints.size() != reference.joints.size()) {
        throw Error(ErrorCode::ValidationError, "joint increment length does not match pose");
    }
    GraspPose out;
    out.wrist.rotation = reference.wrist.rotation * exp_so3(params.rotation_local);
    out.wrist.translation = reference.wrist.translation + params.translation;
    out.joints = reference.joints + params.joints;
    return out;
}

PoseParams params_from_pose(const GraspPose& reference, const GraspPose& pose) {
    PoseParams p;
    p.translation = pose.wrist.translation - reference.wrist.translation;
    p.rotation_local = log_so3(reference.wrist.rotation.transpose() * pose.wrist.rotation);
    p.joints = pose.joints - reference.joints;
    return p;
}

FkResult forward_kinematics(const HandModel& hand, const GraspPose& pose) {
    if (static_cast<std::size_t>(pose.joints.size()) != hand.dof()) {
        throw Error(ErrorCode::ValidationError, "pose has " + std::to_string(pose.joints.size()) +
                                                    " joints, hand has " + std::to_string(hand.dof()));
    }
    FkResult fk;
    fk.links.resize(hand.links().size());
    fk.joint_frames.resize(hand.dof());
    fk.links[hand.root_link()] = pose.wrist;
    for (std::size_t j : hand.fk_order()) {
        const auto& spec = hand.joints()[j];
        const RigidTransform frame = fk.links[hand.joint_parent_link(j)] * spec.origin;
        fk.joint_frames[j] = frame;
        const RigidTransform rot{axis_angle(spec.axis, pose.joints[static_cast<Eigen::Index>(j)]), Vec3::Zero()};
        fk.links[hand.joint_child_link(j)] = frame * rot;
    }
    return fk;
}

HandSurface sample_hand_surface(const HandModel& hand, const FkResult& fk) {
    HandSurface out;
    out.cloud.points.reserve(hand.sample_count());
    out.tags.reserve(hand.sample_count());
    out.link_of.reserve(hand.sample_count());
    for (std::size_t l = 0; l < hand.links().size(); ++l) {
        const auto& link = hand.links()[l];
        for (const auto& s : link.surface_samples) {
            out.cloud.points.push_back(fk.links[l].apply(s));
            out.tags.push_back(link.tag);
            out.link_of.push_back(l);
        }
    }
    out.primitives = world_primitives(hand, fk);
    return out;
}

HandSurface sample_hand_surface(const HandModel& hand, const GraspPose& pose) {
    return sample_hand_surface(hand, forward_kinematics(hand, pose));
}

std::vector<Primitive> world_primitives(const HandModel& hand, const FkResult& fk, std::vector<std::size_t>* link_of) {
    std::vector<Primitive> out;
    for (std::size_t l = 0; l < hand.links().size(); ++l) {
        for (const auto& prim : hand.links()[l].primitives) {
            out.push_back(prim.transformed(fk.links[l]));
            if (link_of) link_of->push_back(l);
        }
    }
    return out;
}

std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> surface_jacobian(const HandModel& hand, const GraspPose& pose) {
    const FkResult fk = forward_kinematics(hand, pose);
    const HandSurface surface = sample_hand_surface(hand, fk);
    const auto cols = static_cast<Eigen::Index>(param_count(hand));
    const Mat3& rw = pose.wrist.rotation;
    std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> out;
    out.reserve(surface.cloud.size());
    for (std::size_t i = 0; i < surface.cloud.size(); ++i) {
        const Point3& p = surface.cloud.points[i];
        Eigen::Matrix<double, 3, Eigen::Dynamic> jac = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, cols);
        jac.block<3, 3>(0, 0) = Mat3::Identity();
        const Vec3 local = rw.transpose() * (p - pose.wrist.translation);
        jac.block<3, 3>(0, 3) = -rw * skew(local);
        for (std::size_t j : hand.joint_chain(surface.link_of[i])) {
            const auto& frame = fk.joint_frames[j];
            const Vec3 axis = frame.rotation * hand.joints()[j].axis;
            jac.col(6 + static_cast<Eigen::Index>(j)) = axis.cross(p - frame.translation);
        }
        out.push_back(std::move(jac));
    }
    return out;
}

Eigen::VectorXd pull_back(const HandModel& hand, const GraspPose& pose, const FkResult& fk, const HandSurface& surface,
                          const std::vector<Vec3>& point_gradients) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(hand)));
    const Mat3& rw = pose.wrist.rotation;
    std::vector<Vec3> axes(hand.dof());
    for (std::size_t j = 0; j < hand.dof(); ++j) axes[j] = fk.joint_frames[j].rotation * hand.joints()[j].axis;

    Vec3 g_trans = Vec3::Zero();
    Vec3 g_rot = Vec3::Zero();
    for (std::size_t i = 0; i < surface.cloud.size(); ++i) {
        const Vec3& g = point_gradients[i];
        if (g.isZero(0.0)) continue;
        const Point3& p = surface.cloud.points[i];
        g_trans += g;
        const Vec3 local = rw.transpose() * (p - pose.wrist.translation);
        // (-R [q]x)^T g = q x (R^T g)
        g_rot += local.cross(rw.transpose() * g);
        for (std::size_t j : hand.joint_chain(surface.link_of[i])) {
            grad[6 + static_cast<Eigen::Index>(j)] += axes[j].cross(p - fk.joint_frames[j].translation).dot(g);
        }
    }
    grad.segment<3>(0) = g_trans;
    grad.segment<3>(3) = g_rot;
    return grad;
}

}  // namespace ibsgrasp

#include "ibsgrasp/energy.hpp"

#include "ibsgrasp/error.hpp"

#include <cmath>
#include <limits>

namespace ibsgrasp {

namespace {

constexpr double kCoincident = 1e-9;

kernels::PairMask link_mask(const HandModel& hand) {
    kernels::PairMask mask(hand.links().size());
    for (std::size_t l = 0; l < hand.links().size(); ++l) mask.exclude(l, l);
    for (std::size_t j = 0; j < hand.dof(); ++j) mask.exclude(hand.joint_parent_link(j), hand.joint_child_link(j));
    return mask;
}

std::vector<int> joint_sides(const HandModel& hand, const GraspPose& pose) {
    std::vector<int> side(hand.dof(), 0);
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        const double th = pose.joints[static_cast<Eigen::Index>(j)];
        if (th > hand.joints()[j].theta_max) side[j] = 1;
        if (th < hand.joints()[j].theta_min) side[j] = -1;
    }
    return side;
}

TermResult joint_term(const HandModel& hand, const GraspPose& pose, const std::vector<int>& side) {
    TermResult r{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(hand)))};
    if (hand.dof() == 0) return r;
    const double inv_d = 1.0 / static_cast<double>(hand.dof());
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        const double th = pose.joints[static_cast<Eigen::Index>(j)];
        const auto col = 6 + static_cast<Eigen::Index>(j);
        if (side[j] > 0) {
            r.value += th - hand.joints()[j].theta_max;
            r.gradient[col] = inv_d;
        } else if (side[j] < 0) {
            r.value += hand.joints()[j].theta_min - th;
            r.gradient[col] = -inv_d;
        }
    }
    r.value *= inv_d;
    return r;
}

double selfpen_term(const HandSurface& surface, const std::vector<kernels::ProximityPair>& pairs, double delta,
                    std::vector<Vec3>& grad) {
    const double n = static_cast<double>(surface.cloud.size());
    const double scale = 2.0 / (n * n);  // each unordered pair counts twice
    double value = 0.0;
    for (const auto& pr : pairs) {
        const Vec3 diff = surface.cloud.points[pr.i] - surface.cloud.points[pr.j];
        const double d = diff.norm();
        value += delta - d;
        if (d > 0.0) {
            const Vec3 g = -scale * diff / d;
            grad[pr.i] += g;
            grad[pr.j] -= g;
        }
    }
    return scale * value;
}

std::vector<Vec3> zeros(std::size_t n) { return std::vector<Vec3>(n, Vec3::Zero()); }

}  // namespace

void EnergyWeights::validate() const {
    for (double w : {lambda1, lambda2, lambda3, lambda4, alpha1, alpha2, alpha3}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::ValidationError, "energy weights must be >= 0");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::ValidationError, "delta must be > 0");
}

EnergyModel::EnergyModel(const HandModel& hand, IbsPointSet ibs, EnergyWeights weights)
    : hand_(&hand),
      ibs_(std::move(ibs)),
      weights_(weights),
      ibs_index_(build_index(ibs_.cloud)),
      mask_(link_mask(hand)) {
    weights_.validate();
    if (ibs_.cloud.normals.size() != ibs_.cloud.size()) {
        throw Error(ErrorCode::ValidationError, "IBS point set needs one normal per point");
    }
    contact_ids_ = ibs_.thumb_contacts;
    contact_ids_.insert(contact_ids_.end(), ibs_.other_contacts.begin(), ibs_.other_contacts.end());
    if (!contact_ids_.empty()) {
        std::vector<Point3> pts;
        for (std::size_t i : contact_ids_) pts.push_back(ibs_.cloud.points[i]);
        contact_index_.emplace(pts);
    }
    std::size_t s = 0;
    for (const auto& link : hand.links()) {
        for (std::size_t k = 0; k < link.surface_samples.size(); ++k, ++s) {
            if (link.tag == FingerTag::Thumb) thumb_samples_.push_back(s);
            if (link.tag == FingerTag::OtherFinger) other_samples_.push_back(s);
        }
    }
}

Correspondences EnergyModel::correspond(const GraspPose& pose) const {
    const HandModel& hand = *hand_;
    const HandSurface surface = sample_hand_surface(hand, pose);
    const auto& pts = surface.cloud.points;
    Correspondences c;
    c.joint_side = joint_sides(hand, pose);
    c.selfpen_pairs = kernels::proximity_pairs(pts, surface.link_of, mask_, weights_.delta);

    const auto nearest = kernels::nearest_batch(ibs_index_, pts);
    c.ibs_nearest.resize(pts.size());
    c.side.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        c.ibs_nearest[i] = nearest[i].index;
        if (nearest[i].distance < kCoincident) {
            c.side[i] = Correspondences::Side::Coincident;
            continue;
        }
        const Vec3 u = (pts[i] - ibs_.cloud.points[nearest[i].index]) / nearest[i].distance;
        const bool active = -u.dot(ibs_.cloud.normals[nearest[i].index]) > 0.0;
        c.side[i] = active ? Correspondences::Side::Active : Correspondences::Side::Inactive;
    }

    auto nearest_sample = [&](const Point3& q, const std::vector<std::size_t>& samples) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t s : samples) {
            const double d2 = squared_distance(q, pts[s]);
            if (d2 < best) {
                best = d2;
                arg = s;
            }
        }
        return arg;
    };
    if (!thumb_samples_.empty()) {
        for (std::size_t t : ibs_.thumb_contacts) {
            c.thumb_contact_sample.push_back(nearest_sample(ibs_.cloud.points[t], thumb_samples_));
        }
    }
    if (!other_samples_.empty()) {
        for (std::size_t o : ibs_.other_contacts) {
            c.other_contact_sample.push_back(nearest_sample(ibs_.cloud.points[o], other_samples_));
        }
    }
    if (contact_index_) {
        for (std::size_t s = 0; s < pts.size(); ++s) {
            if (surface.tags[s] == FingerTag::Palm) continue;
            c.finger_samples.push_back(s);
            c.finger_contact.push_back(contact_ids_[contact_index_->nearest(pts[s]).index]);
        }
    }
    return c;
}

EnergyBreakdown EnergyModel::evaluate(const GraspPose& pose, const Correspondences& c) const {
    const HandModel& hand = *hand_;
    const EnergyWeights& w = weights_;
    const FkResult fk = forward_kinematics(hand, pose);
    const HandSurface surface = sample_hand_surface(hand, fk);
    const auto& pts = surface.cloud.points;
    const std::size_t n = pts.size();
    EnergyBreakdown b;

    const TermResult joint = joint_term(hand, pose, c.joint_side);
    b.e_joint = joint.value;
    b.grad_joint = joint.gradient;

    std::vector<Vec3> g = zeros(n);
    b.e_selfpen = selfpen_term(surface, c.selfpen_pairs, w.delta, g);
    b.grad_selfpen = pull_back(hand, pose, fk, surface, g);

    g = zeros(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    double sided = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (c.side[i] == Correspondences::Side::Inactive) continue;
        if (c.side[i] == Correspondences::Side::Coincident) {
            sided += 1.0;
            continue;
        }
        const Vec3 diff = pts[i] - ibs_.cloud.points[c.ibs_nearest[i]];
        const double r = diff.norm();
        if (r < kCoincident) {
            sided += 1.0;
            continue;
        }
        const Vec3 u = diff / r;
        const Vec3& nrm = ibs_.cloud.normals[c.ibs_nearest[i]];
        sided += -u.dot(nrm);
        g[i] = -inv_n * (nrm - u * u.dot(nrm)) / r;
    }
    b.e_sidedness = inv_n * sided;
    b.grad_sidedness = pull_back(hand, pose, fk, surface, g);

    g = zeros(n);
    double contact = 0.0;
    auto chamfer = [&](const std::vector<std::size_t>& contacts, const std::vector<std::size_t>& samples,
                       double alpha) {
        if (samples.empty() || contacts.empty()) return;
        const double scale = alpha / static_cast<double>(contacts.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < contacts.size(); ++k) {
            const Vec3 diff = pts[samples[k]] - ibs_.cloud.points[contacts[k]];
            sum += diff.squaredNorm();
            g[samples[k]] += 2.0 * scale * diff;
        }
        contact += scale * sum;
    };
    chamfer(ibs_.thumb_contacts, c.thumb_contact_sample, w.alpha1);
    chamfer(ibs_.other_contacts, c.other_contact_sample, w.alpha2);
    if (!c.finger_samples.empty()) {
        const double scale = w.alpha3 / static_cast<double>(c.finger_samples.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < c.finger_samples.size(); ++k) {
            const Vec3 diff = pts[c.finger_samples[k]] - ibs_.cloud.points[c.finger_contact[k]];
            sum += diff.squaredNorm();
            g[c.finger_samples[k]] += 2.0 * scale * diff;
        }
        contact += scale * sum;
    }
    b.e_contact = contact;
    b.grad_contact = pull_back(hand, pose, fk, surface, g);

    b.total = w.lambda1 * b.e_joint + w.lambda2 * b.e_selfpen + w.lambda3 * b.e_sidedness + w.lambda4 * b.e_contact;
    b.gradient = w.lambda1 * b.grad_joint + w.lambda2 * b.grad_selfpen + w.lambda3 * b.grad_sidedness +
                 w.lambda4 * b.grad_contact;
    return b;
}

TermResult energy_joint(const HandModel& hand, const GraspPose& pose) {
    return joint_term(hand, pose, joint_sides(hand, pose));
}

TermResult energy_self_penetration(const HandModel& hand, const GraspPose& pose, double delta) {
    const FkResult fk = forward_kinematics(hand, pose);
    const HandSurface surface = sample_hand_surface(hand, fk);
    const auto pairs = kernels::proximity_pairs(surface.cloud.points, surface.link_of, link_mask(hand), delta);
    std::vector<Vec3> g = zeros(surface.cloud.size());
    const double value = selfpen_term(surface, pairs, delta, g);
    return {value, pull_back(hand, pose, fk, surface, g)};
}

TermResult energy_sidedness(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs) {
    const EnergyBreakdown b = EnergyModel(hand, ibs, EnergyWeights{}).evaluate(pose);
    return {b.e_sidedness, b.grad_sidedness};
}

TermResult energy_contact(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs,
                          const EnergyWeights& weights) {
    const EnergyBreakdown b = EnergyModel(hand, ibs, weights).evaluate(pose);
    return {b.e_contact, b.grad_contact};
}

EnergyBreakdown energy_total(const HandModel& hand, const GraspPose& pose, const IbsPointSet& ibs,
                             const EnergyWeights& weights) {
    return EnergyModel(hand, ibs, weights).evaluate(pose);
}

double contact_energy_points(std::span<const Point3> thumb, std::span<const Point3> other, const IbsPointSet& ibs,
                             const EnergyWeights& weights) {
    auto nearest_d2 = [](const Point3& q, auto&& candidates) {
        double best = std::numeric_limits<double>::infinity();
        for (const Point3& p : candidates) best = std::min(best, squared_distance(q, p));
        return best;
    };
    auto mean_to = [&](const std::vector<std::size_t>& contacts, std::span<const Point3> hand_pts) {
        if (contacts.empty() || hand_pts.empty()) return 0.0;
        double sum = 0.0;
        for (std::size_t c : contacts) sum += nearest_d2(ibs.cloud.points[c], hand_pts);
        return sum / static_cast<double>(contacts.size());
    };
    double value = weights.alpha1 * mean_to(ibs.thumb_contacts, thumb) + weights.alpha2 * mean_to(ibs.other_contacts, other);
    std::vector<Point3> contact_pts;
    for (std::size_t c : ibs.thumb_contacts) contact_pts.push_back(ibs.cloud.points[c]);
    for (std::size_t c : ibs.other_contacts) contact_pts.push_back(ibs.cloud.points[c]);
    if (!contact_pts.empty() && thumb.size() + other.size() > 0) {
        double sum = 0.0;
        for (const Point3& p : thumb) sum += nearest_d2(p, contact_pts);
        for (const Point3& p : other) sum += nearest_d2(p, contact_pts);
        value += weights.alpha3 * sum / static_cast<double>(thumb.size() + other.size());
    }
    return value;
}

}  // namespace ibsgrasp

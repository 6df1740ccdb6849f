#include "ibsgrasp/quality.hpp"

#include "ibsgrasp/error.hpp"
#include "ibsgrasp/kernels.hpp"
#include "ibsgrasp/normals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace ibsgrasp {

void ContactSet::validate() const {
    for (const auto* group : {&thumb, &others}) {
        for (const auto& c : *group) {
            if (!c.point.allFinite() || std::abs(c.normal.norm() - 1.0) > 1e-6) {
                throw Error(ErrorCode::ValidationError, "contact normal is not unit length");
            }
        }
    }
}

ContactSet contact_set_from_points(const IbsPointSet& ibs) {
    ContactSet out;
    for (std::size_t i : ibs.thumb_contacts) out.thumb.push_back({ibs.cloud.points[i], -ibs.cloud.normals[i]});
    for (std::size_t i : ibs.other_contacts) out.others.push_back({ibs.cloud.points[i], -ibs.cloud.normals[i]});
    return out;
}

ContactSet contact_set_from_volume(const SparseIbsVolume& volume, const Point3& hand_hint) {
    const VoxelGrid& grid = volume.grid();
    const std::size_t surface = volume.surface_count();
    if (grid.count(kThumbContact) == 0 && grid.count(kOtherContact) == 0) return {};
    if (surface >= 3) {
        return contact_set_from_points(
            extract_ibs_points(volume, hand_hint, std::min(surface, kDefaultNormalNeighbors)));
    }
    ContactSet out;
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        const Point3 c = grid.voxel_center(i);
        const Vec3 away = c - hand_hint;
        const Vec3 n = away.norm() > 1e-12 ? Vec3(away.normalized()) : Vec3(-Vec3::UnitZ());
        if (grid.get(kThumbContact, i)) {
            out.thumb.push_back({c, n});
        } else if (grid.get(kOtherContact, i)) {
            out.others.push_back({c, n});
        }
    }
    return out;
}

IbsScore force_closure_score(const ContactSet& contacts) {
    if (contacts.thumb.empty() || contacts.others.empty()) return {};
    Vec3 sum = Vec3::Zero();
    for (const auto& c : contacts.thumb) sum += c.normal;
    for (const auto& c : contacts.others) sum += c.normal;
    const Vec3 mean = sum / static_cast<double>(contacts.thumb.size() + contacts.others.size());
    return {-mean.squaredNorm(), true};
}

std::vector<RankedIbs> rank_scores(std::span<const IbsScore> scores) {
    std::vector<RankedIbs> out;
    for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({i, scores[i]});
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedIbs& a, const RankedIbs& b) { return a.score.value > b.score.value; });
    return out;
}

std::vector<RankedIbs> rank_ibs(std::span<const SparseIbsVolume> candidates, const Point3& hand_hint) {
    if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no IBS candidates to rank");
    std::vector<IbsScore> scores;
    for (const auto& v : candidates) scores.push_back(force_closure_score(contact_set_from_volume(v, hand_hint)));
    return rank_scores(scores);
}

std::vector<RankedGrasp> rank_grasps(std::span<const GraspTrial> trials) {
    if (trials.empty()) throw Error(ErrorCode::EmptyInput, "no grasp trials to rank");
    std::vector<RankedGrasp> out;
    for (std::size_t i = 0; i < trials.size(); ++i) out.push_back({i, trials[i].residual});
    std::stable_sort(out.begin(), out.end(), [](const RankedGrasp& a, const RankedGrasp& b) {
        const bool fa = std::isfinite(a.residual);
        const bool fb = std::isfinite(b.residual);
        if (fa != fb) return fa;
        return fa && a.residual < b.residual;
    });
    return out;
}

std::vector<std::size_t> fingertip_links(const HandModel& hand) {
    std::vector<char> has_child(hand.links().size(), 0);
    for (std::size_t j = 0; j < hand.dof(); ++j) has_child[hand.joint_parent_link(j)] = 1;
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < hand.links().size(); ++l) {
        const auto& link = hand.links()[l];
        if (has_child[l] || link.surface_samples.empty() || link.tag == FingerTag::Palm) continue;
        out.push_back(l);
    }
    return out;
}

double fingertip_contact_rms(const HandModel& hand, const GraspPose& pose, const SparseIbsVolume& volume) {
    const VoxelGrid& grid = volume.grid();
    std::vector<Point3> thumb, other, all;
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        if (grid.get(kThumbContact, i)) {
            thumb.push_back(grid.voxel_center(i));
        } else if (grid.get(kOtherContact, i)) {
            other.push_back(grid.voxel_center(i));
        } else {
            continue;
        }
        all.push_back(grid.voxel_center(i));
    }
    if (all.empty()) return std::numeric_limits<double>::quiet_NaN();
    const SpatialIndex all_idx(all);
    const std::optional<SpatialIndex> thumb_idx =
        thumb.empty() ? std::nullopt : std::optional<SpatialIndex>(std::in_place, thumb);
    const std::optional<SpatialIndex> other_idx =
        other.empty() ? std::nullopt : std::optional<SpatialIndex>(std::in_place, other);

    const HandSurface surface = sample_hand_surface(hand, pose);
    const auto tips = fingertip_links(hand);
    if (tips.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (std::size_t l : tips) {
        const bool is_thumb = hand.links()[l].tag == FingerTag::Thumb;
        const SpatialIndex& idx = is_thumb ? (thumb_idx ? *thumb_idx : all_idx) : (other_idx ? *other_idx : all_idx);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < surface.cloud.size(); ++s) {
            if (surface.link_of[s] == l) best = std::min(best, idx.nearest(surface.cloud.points[s]).distance);
        }
        sum += best * best;
    }
    return std::sqrt(sum / static_cast<double>(tips.size()));
}

double max_penetration_depth(const PointCloud& scene, const HandModel& hand, const GraspPose& pose) {
    if (scene.empty()) return 0.0;
    const auto prims = world_primitives(hand, forward_kinematics(hand, pose));
    return kernels::max_penetration(scene.points, prims);
}

}  // namespace ibsgrasp

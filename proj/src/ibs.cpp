#include "ibsgrasp/ibs.hpp"

#include "ibsgrasp/error.hpp"
#include "ibsgrasp/normals.hpp"
#include "ibsgrasp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace ibsgrasp {

namespace {

const std::vector<std::string>& ibs_channel_names() {
    static const std::vector<std::string> names{"ibs_surface", "thumb_contact", "other_contact"};
    return names;
}

bool in_cube(const Point3& p, double half) {
    return p.x() >= -half && p.x() < half && p.y() >= -half && p.y() < half && p.z() >= -half && p.z() < half;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void validate_ibs_grid(const VoxelGrid& grid) {
    if (grid.channel_names() != ibs_channel_names()) {
        throw Error(ErrorCode::ValidationError, "IBS grid needs channels ibs_surface, thumb_contact, other_contact");
    }
    const auto surface = grid.channel(kIbsSurface);
    for (std::size_t c : {kThumbContact, kOtherContact}) {
        const auto contact = grid.channel(c);
        for (std::size_t i = 0; i < contact.size(); ++i) {
            if (contact[i] && !surface[i]) {
                throw Error(ErrorCode::ValidationError,
                            grid.channel_names()[c] + " voxel " + std::to_string(i) + " is not an ibs_surface voxel");
            }
        }
    }
}

SparseIbsVolume::SparseIbsVolume(VoxelGrid grid, CanonicalFrame frame) : grid_(std::move(grid)), frame_(frame) {
    validate_ibs_grid(grid_);
    if (!frame_.is_valid()) throw Error(ErrorCode::ValidationError, "canonical frame rotation is not a rotation");
}

SparseIbsVolume SparseIbsVolume::empty(const CanonicalFrame& frame, double voxel_size, int resolution) {
    return {VoxelGrid::centered(voxel_size, resolution, ibs_channel_names()), frame};
}

PointCloud canonicalize_and_crop(const PointCloud& scene, const CanonicalFrame& frame, double volume_edge) {
    if (scene.empty()) throw Error(ErrorCode::EmptyInput, "scene cloud is empty");
    const RigidTransform to_c = frame.to_canonical();
    const double half = 0.5 * volume_edge;
    PointCloud out;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Point3 p = to_c.apply(scene.points[i]);
        if (!in_cube(p, half)) continue;
        out.points.push_back(p);
        if (scene.has_normals()) out.normals.push_back(to_c.rotate(scene.normals[i]));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyCrop, "no scene points inside the volume");
    return out;
}

VoxelGrid voxelize(const PointCloud& cloud, double voxel_size, int resolution) {
    VoxelGrid grid = VoxelGrid::centered(voxel_size, resolution, {"occupancy"});
    for (const auto& p : cloud.points) {
        if (auto v = grid.world_to_voxel(p)) grid.set(0, grid.linear(*v), true);
    }
    return grid;
}

SparseIbsVolume compute_ibs(const HandSurface& hand, const PointCloud& scene, const CanonicalFrame& frame,
                            const IbsConfig& cfg) {
    if (hand.cloud.empty() || scene.empty()) throw Error(ErrorCode::EmptyInput, "hand or scene cloud is empty");
    if (!frame.is_valid()) throw Error(ErrorCode::ValidationError, "canonical frame rotation is not a rotation");
    if (!(cfg.voxel_size > 0.0) || cfg.resolution < 2) throw Error(ErrorCode::ValidationError, "bad IBS config");

    const double vs = cfg.voxel_size;
    const double half = 0.5 * cfg.edge_length();
    const PointCloud scene_c = canonicalize_and_crop(scene, frame, cfg.edge_length());

    const RigidTransform to_c = frame.to_canonical();
    std::vector<Point3> hand_pts, thumb_pts, other_pts;
    for (std::size_t i = 0; i < hand.cloud.size(); ++i) {
        const Point3 p = to_c.apply(hand.cloud.points[i]);
        if (!in_cube(p, half)) continue;
        hand_pts.push_back(p);
        if (hand.tags[i] == FingerTag::Thumb) thumb_pts.push_back(p);
        if (hand.tags[i] == FingerTag::OtherFinger) other_pts.push_back(p);
    }
    if (hand_pts.empty()) throw Error(ErrorCode::EmptyCrop, "no hand points inside the volume");

    VoxelGrid grid = VoxelGrid::centered(vs, cfg.resolution, ibs_channel_names());
    const SpatialIndex scene_idx(scene_c.points);
    const SpatialIndex hand_idx(hand_pts);
    const std::size_t count = grid.voxel_count();

    std::vector<double> d_scene(count), d_hand(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
        const Point3 c = grid.voxel_center(static_cast<std::size_t>(i));
        d_scene[static_cast<std::size_t>(i)] = scene_idx.nearest(c).distance;
        d_hand[static_cast<std::size_t>(i)] = hand_idx.nearest(c).distance;
    }

    // f = d_scene - d_hand. Voxels inside both clouds carry no surface.
    std::vector<double> f(count);
    std::vector<int> sign(count);
    std::vector<char> excluded(count);
    for (std::size_t i = 0; i < count; ++i) {
        f[i] = d_scene[i] - d_hand[i];
        sign[i] = sign_of(f[i]);
        excluded[i] = d_scene[i] < 0.5 * vs && d_hand[i] < 0.5 * vs;
    }

    // Voxel centres strictly inside a hand primitive never carry surface.
    std::vector<char> inside(count, 0);
    if (!hand.primitives.empty()) {
        const RigidTransform to_w = frame.to_world();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
            const auto k = static_cast<std::size_t>(i);
            if (excluded[k] || std::abs(f[k]) > 2.0 * vs) continue;
            const Point3 w = to_w.apply(grid.voxel_center(k));
            for (const auto& prim : hand.primitives) {
                if (prim.signed_distance(w) < 0.0) {
                    inside[k] = 1;
                    break;
                }
            }
        }
    }

    // Each crossing between 6-neighbours marks the end with the smaller |f|
    // (lower index on ties). Since f is 2-Lipschitz, that end has |f| <= vs.
    std::vector<char> marked(count, 0);
    const int n = cfg.resolution;
    for (std::size_t i = 0; i < count; ++i) {
        if (excluded[i]) continue;
        const VoxelIndex v = grid.unlinear(i);
        const VoxelIndex steps[3] = {{v.x + 1, v.y, v.z}, {v.x, v.y + 1, v.z}, {v.x, v.y, v.z + 1}};
        for (const auto& u_idx : steps) {
            if (u_idx.x >= n || u_idx.y >= n || u_idx.z >= n) continue;
            const std::size_t u = grid.linear(u_idx);
            if (excluded[u] || sign[i] == sign[u]) continue;
            std::size_t pick = std::abs(f[u]) < std::abs(f[i]) ? u : i;
            if (inside[pick]) pick = pick == u ? i : u;
            if (inside[pick]) continue;
            if (std::min(d_scene[pick], d_hand[pick]) <= cfg.relevance_radius) marked[pick] = 1;
        }
    }

    const double tau = cfg.contact_factor * vs;
    const std::optional<SpatialIndex> thumb_idx =
        thumb_pts.empty() ? std::nullopt : std::optional<SpatialIndex>(std::in_place, thumb_pts);
    const std::optional<SpatialIndex> other_idx =
        other_pts.empty() ? std::nullopt : std::optional<SpatialIndex>(std::in_place, other_pts);
    const double inf = std::numeric_limits<double>::infinity();
    std::size_t surface = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (!marked[i]) continue;
        ++surface;
        grid.set(kIbsSurface, i, true);
        if (d_scene[i] > tau) continue;
        const Point3 c = grid.voxel_center(i);
        const double dt = thumb_idx ? thumb_idx->nearest(c).distance : inf;
        const double dother = other_idx ? other_idx->nearest(c).distance : inf;
        const bool thumb_ok = dt <= tau;
        const bool other_ok = dother <= tau;
        if (thumb_ok && (!other_ok || dt <= dother)) {
            grid.set(kThumbContact, i, true);
        } else if (other_ok) {
            grid.set(kOtherContact, i, true);
        }
    }
    if (surface == 0) return SparseIbsVolume::empty(frame, vs, cfg.resolution);
    return {std::move(grid), frame};
}

Point3 grasp_seed_point(const PointCloud& scene, const GraspPose& pose) {
    const SpatialIndex idx = build_index(scene);
    return idx.point(idx.nearest(pose.wrist.translation).index);
}

SparseIbsVolume ground_truth_ibs(const HandModel& hand, const GraspPose& pose, const PointCloud& scene,
                                 const IbsConfig& cfg) {
    const HandSurface surface = sample_hand_surface(hand, pose);
    const CanonicalFrame frame{grasp_seed_point(scene, pose), pose.wrist.rotation};
    return compute_ibs(surface, scene, frame, cfg);
}

IbsPointSet extract_ibs_points(const SparseIbsVolume& volume, const Point3& hand_hint, std::size_t k) {
    const VoxelGrid& grid = volume.grid();
    IbsPointSet out;
    std::vector<std::size_t> voxel_of;
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        if (!grid.get(kIbsSurface, i)) continue;
        voxel_of.push_back(i);
        out.cloud.points.push_back(grid.voxel_center(i));
    }
    const std::size_t m = out.cloud.size();
    if (m < k || k < 3) {
        throw Error(ErrorCode::InsufficientPoints, "IBS has " + std::to_string(m) + " surface voxels, need " +
                                                       std::to_string(k));
    }

    const std::size_t nk = std::min(m, std::max(k, kIbsNormalNeighbors));
    const auto raw = estimate_normals_lenient(out.cloud, nk);
    const SpatialIndex idx(out.cloud.points);
    std::vector<std::vector<Neighbor>> nbrs(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        nbrs[static_cast<std::size_t>(i)] = idx.knn(out.cloud.points[static_cast<std::size_t>(i)], nk);
    }

    // Degenerate (collinear) neighbourhoods borrow the nearest usable normal.
    std::vector<Vec3> normals(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (raw[i]) {
            normals[i] = *raw[i];
            continue;
        }
        std::optional<Vec3> borrowed;
        for (const auto& nb : nbrs[i]) {
            if (raw[nb.index]) {
                borrowed = raw[nb.index];
                break;
            }
        }
        if (!borrowed) {
            const Vec3 to_hint = hand_hint - out.cloud.points[i];
            borrowed = to_hint.norm() > 1e-12 ? Vec3(to_hint.normalized()) : Vec3::UnitZ();
        }
        normals[i] = *borrowed;
    }

    std::vector<std::vector<std::size_t>> adj(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& nb : nbrs[i]) {
            if (nb.index == i) continue;
            adj[i].push_back(nb.index);
            adj[nb.index].push_back(i);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }

    std::vector<char> visited(m, 0);
    using Item = std::tuple<double, std::size_t, std::size_t>;  // (weight, node, parent)
    for (std::size_t root = 0; root < m; ++root) {
        if (visited[root]) continue;
        std::vector<std::size_t> component;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        heap.emplace(0.0, root, root);
        while (!heap.empty()) {
            const auto [w, v, parent] = heap.top();
            heap.pop();
            if (visited[v]) continue;
            visited[v] = 1;
            component.push_back(v);
            if (v != parent && normals[v].dot(normals[parent]) < 0.0) normals[v] = -normals[v];
            for (std::size_t u : adj[v]) {
                if (!visited[u]) heap.emplace(1.0 - std::abs(normals[v].dot(normals[u])), u, v);
            }
        }
        double vote = 0.0, vote_z = 0.0;
        for (std::size_t v : component) {
            const Vec3 to_hint = hand_hint - out.cloud.points[v];
            const double len = to_hint.norm();
            if (len > 1e-12) vote += normals[v].dot(to_hint) / len;
            vote_z += normals[v].z();
        }
        const bool flip = std::abs(vote) > 1e-12 ? vote < 0.0 : vote_z < 0.0;
        if (flip) {
            for (std::size_t v : component) normals[v] = -normals[v];
        }
    }
    out.cloud.normals = std::move(normals);

    // A voxel flagged in both contact channels counts as thumb.
    for (std::size_t p = 0; p < m; ++p) {
        if (grid.get(kThumbContact, voxel_of[p])) {
            out.thumb_contacts.push_back(p);
        } else if (grid.get(kOtherContact, voxel_of[p])) {
            out.other_contacts.push_back(p);
        }
    }
    return out;
}

std::vector<float> signed_occupancy(const SparseIbsVolume& volume) {
    const VoxelGrid& grid = volume.grid();
    std::vector<float> out;
    out.reserve(3 * grid.voxel_count());
    for (std::size_t c = 0; c < 3; ++c) {
        for (auto bit : grid.channel(c)) out.push_back(bit ? 1.0f : -1.0f);
    }
    return out;
}

}  // namespace ibsgrasp

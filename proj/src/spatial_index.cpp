#include "ibsgrasp/spatial_index.hpp"

#include "ibsgrasp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

namespace ibsgrasp {

namespace {

constexpr std::size_t kLeafSize = 12;

struct Candidate {
    double d2;
    std::size_t index;
};

// Lexicographic (d2, index): the exhaustive-scan tie-break.
inline bool better(const Candidate& a, const Candidate& b) {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index);
}

struct WorseFirst {
    bool operator()(const Candidate& a, const Candidate& b) const { return better(a, b); }
};

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw Error(ErrorCode::EmptyInput, "cannot index an empty point set");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
}

std::size_t SpatialIndex::build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];

    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

// Left child holds coordinates <= split and the right child >= split, so the
// plane distance bounds every point on the far side.

Neighbor SpatialIndex::nearest(const Point3& query) const {
    Candidate best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    std::vector<std::pair<std::size_t, double>> stack;
    stack.reserve(64);
    stack.emplace_back(0, 0.0);
    while (!stack.empty()) {
        auto [id, bound] = stack.back();
        stack.pop_back();
        if (bound > best.d2) continue;
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Candidate c{squared_distance(query, points_[idx]), idx};
                if (better(c, best)) best = c;
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const double plane = diff * diff;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        stack.emplace_back(far, std::max(bound, plane));
        stack.emplace_back(near, bound);
    }
    return {best.index, std::sqrt(best.d2)};
}

std::vector<Neighbor> SpatialIndex::knn(const Point3& query, std::size_t k) const {
    k = std::min(k, points_.size());
    std::vector<Neighbor> out;
    if (k == 0) return out;
    std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap;
    auto worst = [&]() {
        return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().d2;
    };
    std::vector<std::pair<std::size_t, double>> stack;
    stack.emplace_back(0, 0.0);
    while (!stack.empty()) {
        auto [id, bound] = stack.back();
        stack.pop_back();
        if (bound > worst()) continue;
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Candidate c{squared_distance(query, points_[idx]), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (better(c, heap.top())) {
                    heap.pop();
                    heap.push(c);
                }
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const double plane = diff * diff;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        stack.emplace_back(far, std::max(bound, plane));
        stack.emplace_back(near, bound);
    }
    std::vector<Candidate> sorted;
    sorted.reserve(heap.size());
    while (!heap.empty()) {
        sorted.push_back(heap.top());
        heap.pop();
    }
    std::sort(sorted.begin(), sorted.end(), better);
    out.reserve(sorted.size());
    for (const auto& c : sorted) out.push_back({c.index, std::sqrt(c.d2)});
    return out;
}

std::vector<std::size_t> SpatialIndex::within_radius(const Point3& query, double radius) const {
    std::vector<std::size_t> out;
    if (!(radius >= 0.0)) return out;
    // Slightly inflated so rounding in the plane bound never prunes a hit.
    const double r2 = radius * radius * (1.0 + 1e-12);
    std::vector<std::pair<std::size_t, double>> stack;
    stack.emplace_back(0, 0.0);
    while (!stack.empty()) {
        auto [id, bound] = stack.back();
        stack.pop_back();
        if (bound > r2) continue;
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (std::sqrt(squared_distance(query, points_[idx])) <= radius) out.push_back(idx);
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const double plane = diff * diff;
        stack.emplace_back(node.left, diff <= 0.0 ? bound : std::max(bound, plane));
        stack.emplace_back(node.right, diff >= 0.0 ? bound : std::max(bound, plane));
    }
    std::sort(out.begin(), out.end());
    return out;
}

SpatialIndex build_index(const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "cannot index an empty point cloud");
    return SpatialIndex(cloud.points);
}

}  // namespace ibsgrasp

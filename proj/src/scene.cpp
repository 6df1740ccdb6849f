#include "ibsgrasp/scene.hpp"

#include "ibsgrasp/cloud_io.hpp"
#include "ibsgrasp/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ibsgrasp {

namespace {

constexpr double kTableHalf = 0.2;

double spacing() { return 1.0 / std::sqrt(kSceneDensity); }

Mat3 yaw_matrix(double yaw) { return axis_angle(Vec3::UnitZ(), yaw); }

bool inside_footprint(const Point3& p, const SceneObject& box) {
    const Vec3 local = yaw_matrix(box.yaw).transpose() * (p - box.center);
    return std::abs(local.x()) <= box.half_extents.x() && std::abs(local.y()) <= box.half_extents.y();
}

void add(Scene& s, const Point3& p, SceneLabel label) {
    s.cloud.points.push_back(p);
    s.labels.push_back(label);
}

void sample_table(Scene& s) {
    const double h = spacing();
    const int n = static_cast<int>(std::floor(2.0 * kTableHalf / h)) + 1;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Point3 p(-kTableHalf + i * h, -kTableHalf + j * h, 0.0);
            bool hidden = false;
            for (const SceneObject* o : {&s.target, s.obstacle ? &*s.obstacle : nullptr}) {
                if (o && o->shape == SceneObject::Shape::Box && inside_footprint(p, *o)) hidden = true;
            }
            if (!hidden) add(s, p, SceneLabel::Table);
        }
    }
}

void sample_sphere(Scene& s, const SceneObject& o, SceneLabel label) {
    const double area = 4.0 * std::numbers::pi * o.radius * o.radius;
    const int count = static_cast<int>(std::ceil(area * kSceneDensity));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = i * golden;
        add(s, o.center + o.radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z), label);
    }
}

// Every face but the bottom one, on a regular grid.
void sample_box(Scene& s, const SceneObject& o, SceneLabel label) {
    const Mat3 r = yaw_matrix(o.yaw);
    const double h = spacing();
    const Vec3& e = o.half_extents;
    auto face = [&](int axis, double sign) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        const int nu = static_cast<int>(std::ceil(2.0 * e[u] / h)) + 1;
        const int nv = static_cast<int>(std::ceil(2.0 * e[v] / h)) + 1;
        for (int a = 0; a < nu; ++a) {
            for (int b = 0; b < nv; ++b) {
                Vec3 local;
                local[axis] = sign * e[axis];
                local[u] = -e[u] + 2.0 * e[u] * a / (nu - 1);
                local[v] = -e[v] + 2.0 * e[v] * b / (nv - 1);
                add(s, o.center + r * local, label);
            }
        }
    };
    face(2, 1.0);
    for (int axis = 0; axis < 2; ++axis) {
        face(axis, 1.0);
        face(axis, -1.0);
    }
}

}  // namespace

PointCloud Scene::subset(SceneLabel label) const {
    PointCloud out;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (labels[i] == label) out.points.push_back(cloud.points[i]);
    }
    return out;
}

const std::vector<std::string>& scene_recipes() {
    static const std::vector<std::string> names{"sphere_on_plane", "box_on_plane", "clutter"};
    return names;
}

Scene make_scene(std::string_view recipe, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Scene s;
    s.name = std::string(recipe);
    s.seed = seed;
    const Vec3 jitter(uniform(-0.02, 0.02), uniform(-0.02, 0.02), 0.0);
    if (recipe == "sphere_on_plane") {
        s.target.shape = SceneObject::Shape::Sphere;
        s.target.radius = uniform(0.03, 0.04);
        s.target.center = jitter + Vec3(0, 0, s.target.radius);
    } else if (recipe == "box_on_plane") {
        s.target.shape = SceneObject::Shape::Box;
        s.target.half_extents = Vec3(uniform(0.02, 0.03), uniform(0.02, 0.03), uniform(0.025, 0.04));
        s.target.yaw = uniform(-std::numbers::pi, std::numbers::pi);
        s.target.center = jitter + Vec3(0, 0, s.target.half_extents.z());
    } else if (recipe == "clutter") {
        s.target.shape = SceneObject::Shape::Sphere;
        s.target.radius = uniform(0.03, 0.035);
        s.target.center = jitter + Vec3(0, 0, s.target.radius);
        SceneObject box;
        box.shape = SceneObject::Shape::Box;
        box.half_extents = Vec3(uniform(0.015, 0.02), uniform(0.02, 0.03), uniform(0.012, 0.018));
        box.yaw = uniform(-std::numbers::pi, std::numbers::pi);
        const double gap = uniform(0.025, 0.035);
        const Vec3 dir(std::cos(box.yaw), std::sin(box.yaw), 0.0);
        box.center = s.target.center + (s.target.radius + gap + box.half_extents.x()) * dir;
        box.center.z() = box.half_extents.z();
        s.obstacle = box;
    } else {
        throw Error(ErrorCode::ValidationError, "unknown scene recipe '" + std::string(recipe) + "'");
    }

    sample_table(s);
    auto sample = [&](const SceneObject& o, SceneLabel label) {
        if (o.shape == SceneObject::Shape::Sphere) {
            sample_sphere(s, o, label);
        } else {
            sample_box(s, o, label);
        }
    };
    sample(s.target, SceneLabel::Target);
    if (s.obstacle) sample(*s.obstacle, SceneLabel::Obstacle);
    return s;
}

Scene load_scene(std::string_view spec) {
    constexpr std::string_view prefix = "recipe:";
    if (spec.starts_with(prefix)) {
        const std::string_view rest = spec.substr(prefix.size());
        const auto colon = rest.rfind(':');
        if (colon == std::string_view::npos) {
            throw Error(ErrorCode::ValidationError, "scene recipe must look like recipe:<name>:<seed>");
        }
        const std::string seed_text(rest.substr(colon + 1));
        std::size_t used = 0;
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(seed_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (seed_text.empty() || used != seed_text.size()) {
            throw Error(ErrorCode::ValidationError, "scene seed '" + seed_text + "' is not an unsigned integer");
        }
        return make_scene(rest.substr(0, colon), seed);
    }
    Scene s;
    s.name = std::string(spec);
    s.cloud = read_cloud(std::filesystem::path(spec));
    s.labels.assign(s.cloud.size(), SceneLabel::Target);
    return s;
}

}  // namespace ibsgrasp

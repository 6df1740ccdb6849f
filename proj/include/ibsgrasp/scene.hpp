#pragma once

#include "ibsgrasp/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ibsgrasp {

enum class SceneLabel : std::uint8_t { Table, Target, Obstacle };

// Analytic description of one object, kept so fixtures can aim grasps.
struct SceneObject {
    enum class Shape { Sphere, Box };

    Shape shape = Shape::Sphere;
    Point3 center = Point3::Zero();
    double radius = 0.0;                 // sphere
    Vec3 half_extents = Vec3::Zero();    // box, in its own frame
    double yaw = 0.0;                    // box rotation about +z
};

// A table plane at z = 0 with objects resting on it. Labels run parallel to
// the cloud's points.
struct Scene {
    std::string name;
    std::uint64_t seed = 0;
    PointCloud cloud;
    std::vector<SceneLabel> labels;
    SceneObject target;
    std::optional<SceneObject> obstacle;

    PointCloud subset(SceneLabel label) const;
};

// Points per square metre; above the 1e4 floor with room to spare.
inline constexpr double kSceneDensity = 1.1e5;

// Recipes: "sphere_on_plane", "box_on_plane", "clutter" (target sphere plus
// a low box beside it). Deterministic for a given seed; throws
// ValidationError for an unknown recipe.
Scene make_scene(std::string_view recipe, std::uint64_t seed);

// "recipe:<name>:<seed>" or a point-cloud file. Files carry no object
// metadata; every point is labelled Target.
Scene load_scene(std::string_view spec);

const std::vector<std::string>& scene_recipes();

}  // namespace ibsgrasp

#pragma once

#include "ibsgrasp/hand_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <vector>

namespace ibsgrasp {

// {"wrist": {"rotation": [9 row-major], "translation": [3]}, "joints": [...]}
nlohmann::json pose_to_json(const GraspPose& pose);
// Throws ParseError (line 0) on missing or malformed fields.
GraspPose pose_from_json(const nlohmann::json& j);

// A pose file holds a JSON array of poses; a single object is accepted too.
std::vector<GraspPose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<GraspPose>& poses);

}  // namespace ibsgrasp

#pragma once

// Command implementations behind the ibsgrasp tool. Each returns what it
// wrote so tests can drive the pipeline without spawning processes.

#include "ibsgrasp/energy.hpp"
#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"
#include "ibsgrasp/optimizer.hpp"
#include "ibsgrasp/quality.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ibsgrasp {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// From SIBS_LOG (error, info, debug); info when unset or unrecognised.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

struct RunConfig {
    IbsConfig ibs;
    EnergyWeights weights;
    OptimizerConfig optimizer;
    double standoff = 0.12;  // --init-from-frame wrist offset along -z

    void validate() const;
};

// {"ibs": {...}, "weights": {...}, "optimizer": {...}, "standoff": x}; every
// section optional, unknown keys rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

struct DatasetGenRequest {
    std::string hand;   // hand config path
    std::string scene;  // file or recipe:<name>:<seed>
    std::string poses;  // pose file, or fixture:<N> for generated grasps
    std::uint64_t seed = 0;
    RunConfig config;
};

struct DatasetGenReport {
    std::vector<std::filesystem::path> written;
    std::vector<std::pair<std::size_t, std::string>> skipped;  // pose index, reason
    nlohmann::json manifest;
};

// Writes ibs_NNNN.sibs per pose, poses.json and manifest.json into `out`.
// Throws the last per-pose error when every pose fails.
DatasetGenReport dataset_gen(const DatasetGenRequest& req, const std::filesystem::path& out);
// Request recorded in a manifest written by dataset_gen.
DatasetGenRequest request_from_manifest(const nlohmann::json& manifest);

struct RankReport {
    std::vector<std::string> files;  // readable inputs, in input order
    std::vector<RankedIbs> ranking;  // indices into `files`
    std::vector<std::pair<std::string, std::string>> errors;  // file, reason
    nlohmann::json to_json() const;
};

// Unreadable files are reported and left out. Throws EmptyInput when none
// can be read.
RankReport ibs_rank(const std::vector<std::string>& files, const Point3& hand_hint);

// Canonical-frame pose: wrist at (0, 0, -standoff), identity rotation,
// mid-range joints.
GraspPose init_from_frame(const HandModel& hand, double standoff);

struct OptimizeReport {
    MultiStartResult result;
    CanonicalFrame frame;
    nlohmann::json grasp;  // grasp.json content
};

// `init_world` is in world coordinates; nullopt means init_from_frame. Writes
// grasp.json and trace_<t>.csv per successful trial into `out`.
OptimizeReport grasp_optimize(const std::string& sibs_file, const std::string& hand_file,
                              const std::optional<GraspPose>& init_world, const RunConfig& cfg,
                              const std::filesystem::path& out);

// Pose from a grasp.json ("pose") or the first pose of a pose file.
GraspPose read_grasp_pose(const std::filesystem::path& path);

// Penetration against the whole scene (plus per label for recipe scenes) and,
// when an IBS file is given, the energy breakdown and fingertip_contact_rms
// against it.
nlohmann::json metrics(const std::string& scene_spec, const std::string& hand_file, const GraspPose& world_pose,
                       const std::optional<std::string>& sibs_file, const RunConfig& cfg);

// Surface voxel centres in the canonical frame, coloured by channel.
void export_ibs_ply(const SparseIbsVolume& volume, const std::filesystem::path& out);
// Hand surface samples in world coordinates, coloured by finger tag.
void export_hand_ply(const HandModel& hand, const GraspPose& pose, const std::filesystem::path& out);

inline constexpr std::array<std::uint8_t, 3> kSurfaceColor{40, 180, 60};
inline constexpr std::array<std::uint8_t, 3> kThumbColor{140, 40, 200};
inline constexpr std::array<std::uint8_t, 3> kOtherColor{220, 40, 40};

}  // namespace ibsgrasp

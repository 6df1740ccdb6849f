#include "ibsgrasp/pipeline.hpp"

#include "ibsgrasp/cloud_io.hpp"
#include "ibsgrasp/error.hpp"
#include "ibsgrasp/fixtures.hpp"
#include "ibsgrasp/hand_config.hpp"
#include "ibsgrasp/pose_io.hpp"
#include "ibsgrasp/scene.hpp"
#include "ibsgrasp/sibs_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>

namespace ibsgrasp {

using nlohmann::json;
namespace fs = std::filesystem;

LogLevel log_level() {
    const char* env = std::getenv("SIBS_LOG");
    if (!env) return LogLevel::Info;
    const std::string_view v(env);
    if (v == "error") return LogLevel::Error;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log(LogLevel level, const std::string& message) {
    static std::mutex mu;
    if (level > log_level()) return;
    static constexpr const char* names[] = {"error", "info", "debug"};
    const std::lock_guard lock(mu);
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ValidationError, std::string("config key '") + key + "': " + e.what());
    }
}

void require_object(const json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw Error(ErrorCode::ValidationError, std::string("unknown ") + what + " key '" + key + "'");
        }
    }
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

// Library errors already lead with their code name.
std::string describe(const std::exception& e) { return e.what(); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json breakdown_json(const EnergyBreakdown& b) {
    return json{{"e_joint", b.e_joint},
                {"e_selfpen", b.e_selfpen},
                {"e_sidedness", b.e_sidedness},
                {"e_contact", b.e_contact},
                {"total", b.total}};
}

json scene_input(const std::string& spec) {
    json j{{"spec", spec}};
    if (!spec.starts_with("recipe:")) j["fnv1a"] = file_digest(spec);
    return j;
}

std::string sibs_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ibs_%04zu.sibs", i);
    return buf;
}

std::vector<GraspPose> fixture_poses(const HandModel& hand, const DatasetGenRequest& req, std::size_t count) {
    if (!req.scene.starts_with("recipe:")) {
        throw Error(ErrorCode::ValidationError, "fixture poses need a recipe scene");
    }
    const Scene scene = load_scene(req.scene);
    FixtureConfig fcfg;
    fcfg.ibs = req.config.ibs;
    std::vector<std::optional<GraspPose>> found(count);
    std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            found[u] = make_fixture(hand, scene, req.seed + u, fcfg).pose;
        } catch (const Error& e) {
            errors[u] = describe(e);
        }
    }
    std::vector<GraspPose> poses;
    for (std::size_t i = 0; i < count; ++i) {
        if (found[i]) {
            poses.push_back(*found[i]);
        } else {
            log(LogLevel::Error, "fixture " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return poses;
}

}  // namespace

void RunConfig::validate() const {
    if (!(ibs.voxel_size > 0.0) || ibs.resolution < 2 || !(ibs.relevance_radius > 0.0) ||
        !(ibs.contact_factor > 0.0)) {
        throw Error(ErrorCode::ValidationError, "bad IBS config");
    }
    weights.validate();
    optimizer.validate();
    if (!(standoff >= 0.0)) throw Error(ErrorCode::ValidationError, "standoff must be >= 0");
}

RunConfig run_config_from_json(const json& j) {
    require_object(j, {"ibs", "weights", "optimizer", "standoff"}, "config");
    RunConfig c;
    if (j.contains("ibs")) {
        const json& s = j["ibs"];
        require_object(s, {"voxel_size", "resolution", "relevance_radius", "contact_factor"}, "ibs");
        take(s, "voxel_size", c.ibs.voxel_size);
        take(s, "resolution", c.ibs.resolution);
        take(s, "relevance_radius", c.ibs.relevance_radius);
        take(s, "contact_factor", c.ibs.contact_factor);
    }
    if (j.contains("weights")) c.weights = energy_weights_from_json(j["weights"]);
    if (j.contains("optimizer")) c.optimizer = optimizer_config_from_json(j["optimizer"]);
    take(j, "standoff", c.standoff);
    c.validate();
    return c;
}

json to_json(const RunConfig& c) {
    return json{{"ibs",
                 {{"voxel_size", c.ibs.voxel_size},
                  {"resolution", c.ibs.resolution},
                  {"relevance_radius", c.ibs.relevance_radius},
                  {"contact_factor", c.ibs.contact_factor}}},
                {"weights", to_json(c.weights)},
                {"optimizer", to_json(c.optimizer)},
                {"standoff", c.standoff}};
}

RunConfig load_run_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_bytes(path));
    } catch (const json::parse_error& e) {
        throw ParseError(0, "config is not valid JSON: " + std::string(e.what()));
    }
    return run_config_from_json(j);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const fs::path& path) { return fnv1a_hex(read_bytes(path)); }

DatasetGenReport dataset_gen(const DatasetGenRequest& req, const fs::path& out) {
    req.config.validate();
    const HandModel hand = load_hand_file(req.hand);
    const Scene scene = load_scene(req.scene);

    std::vector<GraspPose> poses;
    json poses_input{{"spec", req.poses}};
    constexpr std::string_view fixture_prefix = "fixture:";
    if (req.poses.starts_with(fixture_prefix)) {
        const std::string count_text = req.poses.substr(fixture_prefix.size());
        std::size_t used = 0;
        unsigned long count = 0;
        try {
            count = std::stoul(count_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (count_text.empty() || used != count_text.size() || count == 0) {
            throw Error(ErrorCode::ValidationError, "expected fixture:<N> with N >= 1");
        }
        poses = fixture_poses(hand, req, count);
    } else {
        poses = read_poses(req.poses);
        poses_input["fnv1a"] = file_digest(req.poses);
    }
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (static_cast<std::size_t>(poses[i].joints.size()) != hand.dof()) {
            throw Error(ErrorCode::ValidationError, "pose " + std::to_string(i) + " has " +
                                                        std::to_string(poses[i].joints.size()) + " joints, hand has " +
                                                        std::to_string(hand.dof()));
        }
    }

    fs::create_directories(out);
    std::vector<std::optional<std::string>> blobs(poses.size());
    std::vector<std::string> errors(poses.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(poses.size()); ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            const SparseIbsVolume v = ground_truth_ibs(hand, poses[u], scene.cloud, req.config.ibs);
            if (!v.has_surface()) throw Error(ErrorCode::NoSurface, "hand and scene leave no IBS in the volume");
            std::ostringstream buf(std::ios::binary);
            write_sibs(buf, v);
            blobs[u] = buf.str();
        } catch (const std::exception& e) {
            errors[u] = describe(e);
        }
    }

    DatasetGenReport report;
    json outputs = json::array();
    json skipped = json::array();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (!blobs[i]) {
            log(LogLevel::Error, "pose " + std::to_string(i) + " skipped: " + errors[i]);
            report.skipped.emplace_back(i, errors[i]);
            skipped.push_back({{"pose", i}, {"error", errors[i]}});
            continue;
        }
        const std::string name = sibs_name(i);
        write_text(out / name, *blobs[i]);
        report.written.push_back(out / name);
        outputs.push_back({{"file", name}, {"pose", i}, {"fnv1a", fnv1a_hex(*blobs[i])}});
        log(LogLevel::Debug, "wrote " + (out / name).string());
    }
    write_poses(out / "poses.json", poses);
    outputs.push_back({{"file", "poses.json"}, {"fnv1a", file_digest(out / "poses.json")}});

    report.manifest = json{{"tool", "ibsgrasp"},
                           {"version", kToolVersion},
                           {"command", "dataset-gen"},
                           {"inputs",
                            {{"hand", {{"path", req.hand}, {"fnv1a", file_digest(req.hand)}}},
                             {"scene", scene_input(req.scene)},
                             {"poses", poses_input}}},
                           {"seed", req.seed},
                           {"config", to_json(req.config)},
                           {"outputs", outputs},
                           {"skipped", skipped}};
    write_text(out / "manifest.json", report.manifest.dump(2) + "\n");

    if (report.written.empty()) {
        throw Error(ErrorCode::NoSurface, poses.empty() ? "no poses to process"
                                                        : "every pose failed; last: " + errors.back());
    }
    return report;
}

DatasetGenRequest request_from_manifest(const json& m) {
    try {
        DatasetGenRequest r;
        r.hand = m.at("inputs").at("hand").at("path").get<std::string>();
        r.scene = m.at("inputs").at("scene").at("spec").get<std::string>();
        r.poses = m.at("inputs").at("poses").at("spec").get<std::string>();
        r.seed = m.at("seed").get<std::uint64_t>();
        r.config = run_config_from_json(m.at("config"));
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ValidationError, std::string("malformed manifest: ") + e.what());
    }
}

json RankReport::to_json() const {
    json ranked = json::array();
    for (const auto& r : ranking) {
        ranked.push_back({{"index", r.index},
                          {"file", files[r.index]},
                          {"score", number_or_null(r.score.value)},
                          {"feasible", r.score.feasible}});
    }
    json errs = json::array();
    for (const auto& [file, why] : errors) errs.push_back({{"file", file}, {"error", why}});
    return json{{"ranking", ranked}, {"errors", errs}};
}

RankReport ibs_rank(const std::vector<std::string>& files, const Point3& hand_hint) {
    RankReport report;
    std::vector<SparseIbsVolume> volumes;
    for (const auto& f : files) {
        try {
            volumes.push_back(read_sibs(fs::path(f)));
            report.files.push_back(f);
        } catch (const std::exception& e) {
            log(LogLevel::Error, f + ": " + describe(e));
            report.errors.emplace_back(f, describe(e));
        }
    }
    if (volumes.empty()) throw Error(ErrorCode::EmptyInput, "no readable IBS files");
    report.ranking = rank_ibs(volumes, hand_hint);
    return report;
}

GraspPose init_from_frame(const HandModel& hand, double standoff) {
    GraspPose p;
    p.wrist.translation = Vec3(0.0, 0.0, -standoff);
    p.joints = hand.mid_range();
    return p;
}

OptimizeReport grasp_optimize(const std::string& sibs_file, const std::string& hand_file,
                              const std::optional<GraspPose>& init_world, const RunConfig& cfg, const fs::path& out) {
    cfg.validate();
    const SparseIbsVolume volume = read_sibs(fs::path(sibs_file));
    const HandModel hand = load_hand_file(hand_file);
    const GraspPose init =
        init_world ? to_canonical(*init_world, volume.frame()) : init_from_frame(hand, cfg.standoff);
    if (static_cast<std::size_t>(init.joints.size()) != hand.dof()) {
        throw Error(ErrorCode::ValidationError, "initial pose joint count does not match the hand");
    }

    OptimizeReport report{multi_start(hand, init, volume, cfg.weights, cfg.optimizer), volume.frame(), {}};
    const MultiStartResult& ms = report.result;
    fs::create_directories(out);

    json residuals = json::array();
    json trials = json::array();
    for (std::size_t t = 0; t < ms.trials.size(); ++t) {
        const TrialOutcome& trial = ms.trials[t];
        residuals.push_back(number_or_null(trial.residual));
        json row{{"index", t}, {"residual", number_or_null(trial.residual)}};
        if (trial.result) {
            row["iterations"] = trial.result->iterations;
            row["best_iteration"] = trial.result->best_iteration;
            row["energy"] = breakdown_json(trial.result->breakdown);
            const std::string trace = "trace_" + std::to_string(t) + ".csv";
            std::ofstream csv(out / trace);
            if (!csv) throw Error(ErrorCode::IoError, "cannot write " + (out / trace).string());
            write_trace_csv(csv, trial.result->trace);
            row["trace"] = trace;
        } else {
            row["error"] = trial.error;
            log(LogLevel::Info, "trial " + std::to_string(t) + " failed: " + trial.error);
        }
        trials.push_back(row);
    }
    json ranking = json::array();
    for (const auto& r : ms.ranking) ranking.push_back(r.index);

    const TrialOutcome& best = ms.selected();
    report.grasp = json{{"tool", "ibsgrasp"},
                        {"version", kToolVersion},
                        {"inputs",
                         {{"sibs", {{"path", sibs_file}, {"fnv1a", file_digest(sibs_file)}}},
                          {"hand", {{"path", hand_file}, {"fnv1a", file_digest(hand_file)}}},
                          {"init", init_world ? "file" : "frame"}}},
                        {"config", to_json(cfg)},
                        {"selected", ms.ranking.front().index},
                        {"pose", pose_to_json(to_world(best.result->pose, volume.frame()))},
                        {"pose_canonical", pose_to_json(best.result->pose)},
                        {"energy", breakdown_json(best.result->breakdown)},
                        {"residuals", residuals},
                        {"ranking", ranking},
                        {"trials", trials}};
    write_text(out / "grasp.json", report.grasp.dump(2) + "\n");
    return report;
}

GraspPose read_grasp_pose(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_bytes(path));
    } catch (const json::parse_error& e) {
        throw ParseError(0, "grasp file is not valid JSON: " + std::string(e.what()));
    }
    if (doc.is_object() && doc.contains("pose")) return pose_from_json(doc["pose"]);
    if (doc.is_array()) {
        if (doc.empty()) throw Error(ErrorCode::EmptyInput, "pose file is empty");
        return pose_from_json(doc.front());
    }
    return pose_from_json(doc);
}

json metrics(const std::string& scene_spec, const std::string& hand_file, const GraspPose& world_pose,
             const std::optional<std::string>& sibs_file, const RunConfig& cfg) {
    const Scene scene = load_scene(scene_spec);
    const HandModel hand = load_hand_file(hand_file);
    if (static_cast<std::size_t>(world_pose.joints.size()) != hand.dof()) {
        throw Error(ErrorCode::ValidationError, "pose joint count does not match the hand");
    }
    json j{{"max_penetration_depth", max_penetration_depth(scene.cloud, hand, world_pose)}};
    if (scene_spec.starts_with("recipe:")) {
        json per_label;
        const std::pair<SceneLabel, const char*> labels[] = {
            {SceneLabel::Table, "table"}, {SceneLabel::Target, "target"}, {SceneLabel::Obstacle, "obstacle"}};
        for (const auto& [label, name] : labels) {
            const PointCloud part = scene.subset(label);
            if (!part.empty()) per_label[name] = max_penetration_depth(part, hand, world_pose);
        }
        j["penetration_by_label"] = per_label;
    }
    if (sibs_file) {
        const SparseIbsVolume volume = read_sibs(fs::path(*sibs_file));
        const GraspPose pose = to_canonical(world_pose, volume.frame());
        EnergyModel model(hand, extract_ibs_points(volume, pose.wrist.translation), cfg.weights);
        j["energy"] = breakdown_json(model.evaluate(pose));
        const double rms = fingertip_contact_rms(hand, pose, volume);
        j["fingertip_contact_rms"] = std::isfinite(rms) ? json(rms) : json(nullptr);
    }
    return j;
}

void export_ibs_ply(const SparseIbsVolume& volume, const fs::path& out) {
    const VoxelGrid& grid = volume.grid();
    PointCloud cloud;
    std::vector<Rgb> colors;
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        if (!grid.get(kIbsSurface, i)) continue;
        cloud.points.push_back(grid.voxel_center(i));
        colors.push_back(grid.get(kThumbContact, i)   ? kThumbColor
                         : grid.get(kOtherContact, i) ? kOtherColor
                                                      : kSurfaceColor);
    }
    write_ply(out, cloud, colors);
}

void export_hand_ply(const HandModel& hand, const GraspPose& pose, const fs::path& out) {
    const HandSurface s = sample_hand_surface(hand, pose);
    std::vector<Rgb> colors;
    for (FingerTag t : s.tags) {
        colors.push_back(t == FingerTag::Thumb ? kThumbColor : t == FingerTag::OtherFinger ? kOtherColor : kSurfaceColor);
    }
    write_ply(out, s.cloud, colors);
}

}  // namespace ibsgrasp

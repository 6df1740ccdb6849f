#include "ibsgrasp/pose_io.hpp"

#include "ibsgrasp/error.hpp"

#include <fstream>

namespace ibsgrasp {

using nlohmann::json;

json pose_to_json(const GraspPose& pose) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rot.push_back(pose.wrist.rotation(r, c));
    }
    json t = json::array({pose.wrist.translation.x(), pose.wrist.translation.y(), pose.wrist.translation.z()});
    json joints = json::array();
    for (Eigen::Index i = 0; i < pose.joints.size(); ++i) joints.push_back(pose.joints[i]);
    return json{{"wrist", {{"rotation", rot}, {"translation", t}}}, {"joints", joints}};
}

GraspPose pose_from_json(const json& j) {
    auto numbers = [](const json& arr, std::size_t n, const char* what) {
        if (!arr.is_array() || (n != 0 && arr.size() != n)) {
            throw ParseError(0, std::string("pose field '") + what + "' has the wrong shape");
        }
        std::vector<double> out;
        for (const auto& v : arr) {
            if (!v.is_number()) throw ParseError(0, std::string("pose field '") + what + "' is not numeric");
            out.push_back(v.get<double>());
        }
        return out;
    };
    if (!j.is_object() || !j.contains("wrist") || !j.contains("joints") || !j["wrist"].is_object() ||
        !j["wrist"].contains("rotation") || !j["wrist"].contains("translation")) {
        throw ParseError(0, "pose object needs wrist.rotation, wrist.translation and joints");
    }
    const auto rot = numbers(j["wrist"]["rotation"], 9, "wrist.rotation");
    const auto t = numbers(j["wrist"]["translation"], 3, "wrist.translation");
    const auto joints = numbers(j["joints"], 0, "joints");
    GraspPose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.wrist.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
    }
    pose.wrist.translation = Vec3(t[0], t[1], t[2]);
    pose.joints = Eigen::Map<const Eigen::VectorXd>(joints.data(), static_cast<Eigen::Index>(joints.size()));
    if (!pose.wrist.is_valid(1e-6)) throw Error(ErrorCode::ValidationError, "pose wrist rotation is not a rotation");
    return pose;
}

std::vector<GraspPose> read_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open pose file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("pose file is not valid JSON: ") + e.what());
    }
    std::vector<GraspPose> poses;
    if (doc.is_array()) {
        for (const auto& item : doc) poses.push_back(pose_from_json(item));
    } else {
        poses.push_back(pose_from_json(doc));
    }
    return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<GraspPose>& poses) {
    json doc = json::array();
    for (const auto& p : poses) doc.push_back(pose_to_json(p));
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

}  // namespace ibsgrasp

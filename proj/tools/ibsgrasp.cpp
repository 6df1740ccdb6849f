#include "ibsgrasp/error.hpp"
#include "ibsgrasp/hand_config.hpp"
#include "ibsgrasp/pipeline.hpp"
#include "ibsgrasp/pose_io.hpp"
#include "ibsgrasp/sibs_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ibsgrasp;

namespace {

struct Common {
    std::string hand;
    std::string scene;
    std::string out;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;

    RunConfig run_config() const {
        RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
        if (seed) c.optimizer.seed = *seed;
        if (trials) c.optimizer.trials = *trials;
        c.validate();
        return c;
    }
};

void emit(const nlohmann::json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
    f << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IBS grasp synthesis: ground-truth IBS generation, ranking and grasp optimization"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Common c;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON run config (ibs, weights, optimizer, standoff)")
            ->check(CLI::ExistingFile);
    };

    auto* gen = app.add_subcommand("dataset-gen", "Ground-truth SIBS volumes for a set of grasp poses");
    std::string poses, manifest;
    std::uint64_t gen_seed = 0;
    gen->add_option("--hand", c.hand, "hand config file");
    gen->add_option("--scene", c.scene, "point-cloud file or recipe:<name>:<seed>");
    gen->add_option("--poses", poses, "JSON pose file or fixture:<N>");
    gen->add_option("--seed", gen_seed, "seed for generated fixture poses");
    gen->add_option("--manifest", manifest, "re-run the request recorded in a manifest")->check(CLI::ExistingFile);
    gen->add_option("--out", c.out, "output directory")->required();
    add_config(gen);

    auto* rank = app.add_subcommand("ibs-rank", "Rank IBS candidates by force-closure score");
    std::vector<std::string> files;
    std::vector<double> hint{0.0, 0.0, -0.12};
    rank->add_option("files", files, "SIBS files")->required();
    rank->add_option("--hint", hint, "hand position in the canonical frame")->expected(3);
    rank->add_option("--out", c.out, "ranking JSON (stdout when omitted)");

    auto* opt = app.add_subcommand("grasp-optimize", "Fit a hand to an IBS from several starts");
    std::string sibs, init;
    bool from_frame = false;
    opt->add_option("--sibs", sibs, "SIBS file")->required()->check(CLI::ExistingFile);
    opt->add_option("--hand", c.hand, "hand config file")->required()->check(CLI::ExistingFile);
    auto* init_opt = opt->add_option("--init", init, "initial pose file (world frame)")->check(CLI::ExistingFile);
    auto* frame_opt = opt->add_flag("--init-from-frame", from_frame, "start at the canonical frame with a standoff");
    init_opt->excludes(frame_opt);
    opt->add_option("--seed", c.seed, "perturbation seed");
    opt->add_option("--trials", c.trials, "number of starts");
    opt->add_option("--out", c.out, "output directory")->required();
    add_config(opt);

    auto* met = app.add_subcommand("metrics", "Penetration depth and energy of a grasp");
    std::string grasp, met_sibs;
    met->add_option("--scene", c.scene, "point-cloud file or recipe:<name>:<seed>")->required();
    met->add_option("--hand", c.hand, "hand config file")->required()->check(CLI::ExistingFile);
    met->add_option("--grasp", grasp, "grasp.json or pose file")->required()->check(CLI::ExistingFile);
    met->add_option("--sibs", met_sibs, "IBS to evaluate the energy against")->check(CLI::ExistingFile);
    met->add_option("--out", c.out, "metrics JSON (stdout when omitted)");
    add_config(met);

    auto* exp = app.add_subcommand("export", "PLY clouds of an IBS volume or a posed hand");
    std::string exp_sibs, exp_grasp;
    exp->add_option("--sibs", exp_sibs, "SIBS file")->check(CLI::ExistingFile);
    exp->add_option("--hand", c.hand, "hand config file")->check(CLI::ExistingFile);
    exp->add_option("--grasp", exp_grasp, "grasp.json or pose file")->check(CLI::ExistingFile);
    exp->add_option("--out", c.out, "output PLY")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            DatasetGenRequest req;
            if (!manifest.empty()) {
                std::ifstream in(manifest);
                req = request_from_manifest(nlohmann::json::parse(in));
            } else {
                if (c.hand.empty() || c.scene.empty() || poses.empty()) {
                    throw Error(ErrorCode::ValidationError, "dataset-gen needs --hand, --scene and --poses or --manifest");
                }
                req = {c.hand, c.scene, poses, gen_seed, c.run_config()};
            }
            const auto report = dataset_gen(req, c.out);
            log(LogLevel::Info, "wrote " + std::to_string(report.written.size()) + " SIBS files, skipped " +
                                    std::to_string(report.skipped.size()));
        } else if (rank->parsed()) {
            const auto report = ibs_rank(files, Point3(hint[0], hint[1], hint[2]));
            emit(report.to_json(), c.out);
        } else if (opt->parsed()) {
            if (init.empty() && !from_frame) throw Error(ErrorCode::ValidationError, "need --init or --init-from-frame");
            std::optional<GraspPose> init_pose;
            if (!init.empty()) init_pose = read_grasp_pose(init);
            const auto report = grasp_optimize(sibs, c.hand, init_pose, c.run_config(), c.out);
            log(LogLevel::Info, "selected trial " + std::to_string(report.result.ranking.front().index) +
                                    ", residual " + std::to_string(report.result.selected().residual));
        } else if (met->parsed()) {
            const std::optional<std::string> s = met_sibs.empty() ? std::nullopt : std::optional(met_sibs);
            emit(metrics(c.scene, c.hand, read_grasp_pose(grasp), s, c.run_config()), c.out);
        } else if (exp->parsed()) {
            if (!exp_sibs.empty()) {
                export_ibs_ply(read_sibs(fs::path(exp_sibs)), c.out);
            } else if (!c.hand.empty() && !exp_grasp.empty()) {
                export_hand_ply(load_hand_file(c.hand), read_grasp_pose(exp_grasp), c.out);
            } else {
                throw Error(ErrorCode::ValidationError, "export needs --sibs, or --hand with --grasp");
            }
        }
    } catch (const std::exception& e) {
        log(LogLevel::Error, e.what());
        return 1;
    }
    return 0;
}

#pragma once

#include "ibsgrasp/energy.hpp"
#include "ibsgrasp/hand_model.hpp"
#include "ibsgrasp/ibs.hpp"
#include "ibsgrasp/quality.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ibsgrasp {

struct OptimizerConfig {
    enum class Method { Adam, Gradient };

    std::size_t trials = 5;
    int max_iters = 300;
    double step_size = 5e-3;
    int decay_every = 100;
    double decay_factor = 0.5;
    double tolerance = 1e-8;  // |dE| below this for `patience` iterations stops
    int patience = 10;
    double sigma_translation = 0.01;
    double sigma_rotation = 0.1;
    double sigma_joints = 0.1;
    std::uint64_t seed = 0;
    Method method = Method::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.9;
    // Translation steps are this fraction of the angular step (metres per radian).
    double translation_step_scale = 0.2;
    // Joints are projected onto [min - margin, max + margin] after each step.
    double joint_margin = 0.0;
    // Initial joints further than this outside their limits are rejected.
    double init_joint_slack = 0.5;

    // Throws ValidationError on k < 1, max_iters < 1 or step_size <= 0.
    void validate() const;
};

// Missing keys keep their defaults; unknown keys are a ValidationError.
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerConfig& cfg);
EnergyWeights energy_weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnergyWeights& w);

struct TraceRow {
    int iteration = 0;
    double e_joint = 0.0;
    double e_selfpen = 0.0;
    double e_sidedness = 0.0;
    double e_contact = 0.0;
    double total = 0.0;
};

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

struct OptimizeResult {
    GraspPose pose;             // best seen, not the last iterate
    EnergyBreakdown breakdown;  // at `pose`
    std::vector<TraceRow> trace;  // row 0 is the initial pose
    int iterations = 0;
    int best_iteration = 0;
};

// Descends from `init` against an already extracted IBS (same frame as the
// pose). Throws BadInit when the initial energy is not finite or joints sit
// more than init_joint_slack outside their limits.
OptimizeResult optimize_grasp(const HandModel& hand, const GraspPose& init, const IbsPointSet& ibs,
                              const EnergyWeights& weights, const OptimizerConfig& cfg);
// Extracts the IBS with the initial wrist position as hand hint. Throws
// CannotOptimize for a volume without a usable surface.
OptimizeResult optimize_grasp(const HandModel& hand, const GraspPose& init, const SparseIbsVolume& volume,
                              const EnergyWeights& weights, const OptimizerConfig& cfg);

struct TrialOutcome {
    GraspPose init;
    std::optional<OptimizeResult> result;
    std::string error;
    double residual = 0.0;  // final total energy, NaN when the trial failed
};

struct MultiStartResult {
    std::vector<TrialOutcome> trials;  // by trial index
    std::vector<RankedGrasp> ranking;  // rank_grasps over trials

    const TrialOutcome& selected() const { return trials[ranking.front().index]; }
};

// Initial pose of trial t: trial 0 is `seed_pose`; the others add Gaussian
// noise drawn from a generator seeded with (cfg.seed, t).
GraspPose perturbed_init(const HandModel& hand, const GraspPose& seed_pose, const OptimizerConfig& cfg,
                         std::size_t trial);

// k trials, possibly in parallel, merged by trial index. The IBS is extracted
// once with `seed_pose`'s wrist as hand hint. Throws OptimizationFailed when
// no trial produces a result.
MultiStartResult multi_start(const HandModel& hand, const GraspPose& seed_pose, const SparseIbsVolume& volume,
                             const EnergyWeights& weights, const OptimizerConfig& cfg);

}  // namespace ibsgrasp

#include "ibsgrasp/optimizer.hpp"

#include "ibsgrasp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace ibsgrasp {

using nlohmann::json;

void OptimizerConfig::validate() const {
    if (trials < 1) throw Error(ErrorCode::ValidationError, "optimizer needs at least one trial");
    if (max_iters < 1) throw Error(ErrorCode::ValidationError, "max_iters must be >= 1");
    if (!(step_size > 0.0)) throw Error(ErrorCode::ValidationError, "step_size must be > 0");
    if (decay_every < 1 || !(decay_factor > 0.0)) throw Error(ErrorCode::ValidationError, "bad step decay");
    if (patience < 1 || !(tolerance >= 0.0)) throw Error(ErrorCode::ValidationError, "bad convergence rule");
    if (sigma_translation < 0.0 || sigma_rotation < 0.0 || sigma_joints < 0.0) {
        throw Error(ErrorCode::ValidationError, "perturbation scales must be >= 0");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw Error(ErrorCode::ValidationError, "Adam betas must lie in [0, 1)");
    }
    if (!(translation_step_scale > 0.0) || joint_margin < 0.0 || init_joint_slack < 0.0) {
        throw Error(ErrorCode::ValidationError, "bad step scaling or joint margins");
    }
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

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw Error(ErrorCode::ValidationError, std::string("unknown ") + what + " key '" + key + "'");
        }
    }
}

}  // namespace

OptimizerConfig optimizer_config_from_json(const json& j) {
    reject_unknown(j,
                   {"trials", "max_iters", "step_size", "decay_every", "decay_factor", "tolerance", "patience",
                    "sigma_translation", "sigma_rotation", "sigma_joints", "seed", "method",
                    "translation_step_scale", "joint_margin", "init_joint_slack", "adam_beta1", "adam_beta2"},
                   "optimizer");
    OptimizerConfig c;
    take(j, "trials", c.trials);
    take(j, "max_iters", c.max_iters);
    take(j, "step_size", c.step_size);
    take(j, "decay_every", c.decay_every);
    take(j, "decay_factor", c.decay_factor);
    take(j, "tolerance", c.tolerance);
    take(j, "patience", c.patience);
    take(j, "sigma_translation", c.sigma_translation);
    take(j, "sigma_rotation", c.sigma_rotation);
    take(j, "sigma_joints", c.sigma_joints);
    take(j, "seed", c.seed);
    take(j, "translation_step_scale", c.translation_step_scale);
    take(j, "joint_margin", c.joint_margin);
    take(j, "init_joint_slack", c.init_joint_slack);
    take(j, "adam_beta1", c.adam_beta1);
    take(j, "adam_beta2", c.adam_beta2);
    if (j.contains("method")) {
        std::string m;
        take(j, "method", m);
        if (m == "adam") {
            c.method = OptimizerConfig::Method::Adam;
        } else if (m == "gd") {
            c.method = OptimizerConfig::Method::Gradient;
        } else {
            throw Error(ErrorCode::ValidationError, "optimizer method must be 'adam' or 'gd'");
        }
    }
    c.validate();
    return c;
}

json to_json(const OptimizerConfig& c) {
    return json{{"trials", c.trials},
                {"max_iters", c.max_iters},
                {"step_size", c.step_size},
                {"decay_every", c.decay_every},
                {"decay_factor", c.decay_factor},
                {"tolerance", c.tolerance},
                {"patience", c.patience},
                {"sigma_translation", c.sigma_translation},
                {"sigma_rotation", c.sigma_rotation},
                {"sigma_joints", c.sigma_joints},
                {"seed", c.seed},
                {"method", c.method == OptimizerConfig::Method::Adam ? "adam" : "gd"},
                {"translation_step_scale", c.translation_step_scale},
                {"joint_margin", c.joint_margin},
                {"init_joint_slack", c.init_joint_slack},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2}};
}

EnergyWeights energy_weights_from_json(const json& j) {
    reject_unknown(j, {"lambda1", "lambda2", "lambda3", "lambda4", "alpha1", "alpha2", "alpha3", "delta"}, "weights");
    EnergyWeights w;
    take(j, "lambda1", w.lambda1);
    take(j, "lambda2", w.lambda2);
    take(j, "lambda3", w.lambda3);
    take(j, "lambda4", w.lambda4);
    take(j, "alpha1", w.alpha1);
    take(j, "alpha2", w.alpha2);
    take(j, "alpha3", w.alpha3);
    take(j, "delta", w.delta);
    w.validate();
    return w;
}

json to_json(const EnergyWeights& w) {
    return json{{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3}, {"lambda4", w.lambda4},
                {"alpha1", w.alpha1},   {"alpha2", w.alpha2},   {"alpha3", w.alpha3},   {"delta", w.delta}};
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iteration,e_joint,e_selfpen,e_sidedness,e_contact,total\n";
    const auto old = out.precision(17);
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.e_joint << ',' << r.e_selfpen << ',' << r.e_sidedness << ',' << r.e_contact
            << ',' << r.total << '\n';
    }
    out.precision(old);
}

namespace {

TraceRow row(int it, const EnergyBreakdown& b) {
    return {it, b.e_joint, b.e_selfpen, b.e_sidedness, b.e_contact, b.total};
}

void project_joints(const HandModel& hand, double margin, Eigen::VectorXd& joints) {
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        joints[i] = std::clamp(joints[i], hand.joints()[j].theta_min - margin, hand.joints()[j].theta_max + margin);
    }
}

}  // namespace

OptimizeResult optimize_grasp(const HandModel& hand, const GraspPose& init, const IbsPointSet& ibs,
                              const EnergyWeights& weights, const OptimizerConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(init.joints.size()) != hand.dof()) {
        throw Error(ErrorCode::BadInit, "initial pose has the wrong number of joints");
    }
    for (std::size_t j = 0; j < hand.dof(); ++j) {
        const double th = init.joints[static_cast<Eigen::Index>(j)];
        const auto& js = hand.joints()[j];
        if (!(th >= js.theta_min - cfg.init_joint_slack && th <= js.theta_max + cfg.init_joint_slack)) {
            throw Error(ErrorCode::BadInit, "initial joint '" + js.name + "' is too far outside its limits");
        }
    }
    if (!init.wrist.is_valid(1e-6)) throw Error(ErrorCode::BadInit, "initial wrist is not a rigid transform");

    const EnergyModel model(hand, ibs, weights);
    EnergyBreakdown cur = model.evaluate(init);
    if (!std::isfinite(cur.total) || !cur.gradient.allFinite()) {
        throw Error(ErrorCode::BadInit, "energy at the initial pose is not finite");
    }

    OptimizeResult res;
    res.pose = init;
    res.breakdown = cur;
    res.trace.push_back(row(0, cur));
    if (cur.total == 0.0) return res;

    const auto dim = static_cast<Eigen::Index>(param_count(hand));
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
    scale.head<3>().setConstant(cfg.translation_step_scale);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    const double beta1 = cfg.adam_beta1, beta2 = cfg.adam_beta2;
    constexpr double eps = 1e-12;

    GraspPose pose = init;
    int still = 0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const double lr = cfg.step_size * std::pow(cfg.decay_factor, (it - 1) / cfg.decay_every);
        const Eigen::VectorXd& g = cur.gradient;
        Eigen::VectorXd step;
        if (cfg.method == OptimizerConfig::Method::Adam) {
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
            const Eigen::VectorXd mh = m / (1.0 - std::pow(beta1, it));
            const Eigen::VectorXd vh = v / (1.0 - std::pow(beta2, it));
            step = -lr * scale.cwiseProduct(mh.cwiseQuotient((vh.cwiseSqrt().array() + eps).matrix()));
        } else {
            step = -lr * scale.cwiseProduct(g);
        }
        PoseParams params = PoseParams::unpack(step);
        const double rot = params.rotation_local.norm();
        if (rot > 0.5) params.rotation_local *= 0.5 / rot;  // keep far inside the chart
        GraspPose next = pose_from_params(pose, params);
        project_joints(hand, cfg.joint_margin, next.joints);

        const EnergyBreakdown nb = model.evaluate(next);
        res.iterations = it;
        if (!std::isfinite(nb.total) || !nb.gradient.allFinite()) break;
        res.trace.push_back(row(it, nb));
        still = std::abs(nb.total - cur.total) < cfg.tolerance ? still + 1 : 0;
        pose = next;
        cur = nb;
        if (cur.total < res.breakdown.total) {
            res.pose = pose;
            res.breakdown = cur;
            res.best_iteration = it;
        }
        if (still >= cfg.patience) break;
    }
    return res;
}

OptimizeResult optimize_grasp(const HandModel& hand, const GraspPose& init, const SparseIbsVolume& volume,
                              const EnergyWeights& weights, const OptimizerConfig& cfg) {
    if (!volume.has_surface()) throw Error(ErrorCode::CannotOptimize, "IBS volume has no surface");
    IbsPointSet ibs;
    try {
        ibs = extract_ibs_points(volume, init.wrist.translation);
    } catch (const Error& e) {
        throw Error(ErrorCode::CannotOptimize, std::string("cannot extract IBS points: ") + e.what());
    }
    return optimize_grasp(hand, init, ibs, weights, cfg);
}

GraspPose perturbed_init(const HandModel& hand, const GraspPose& seed_pose, const OptimizerConfig& cfg,
                         std::size_t trial) {
    if (trial == 0) return seed_pose;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    GraspPose out = seed_pose;
    Vec3 dt, dr;
    for (int i = 0; i < 3; ++i) dt[i] = cfg.sigma_translation * normal(rng);
    for (int i = 0; i < 3; ++i) dr[i] = cfg.sigma_rotation * normal(rng);
    out.wrist.translation += dt;
    out.wrist.rotation = seed_pose.wrist.rotation * exp_so3(dr);
    for (Eigen::Index j = 0; j < out.joints.size(); ++j) out.joints[j] += cfg.sigma_joints * normal(rng);
    project_joints(hand, cfg.joint_margin, out.joints);
    return out;
}

MultiStartResult multi_start(const HandModel& hand, const GraspPose& seed_pose, const SparseIbsVolume& volume,
                             const EnergyWeights& weights, const OptimizerConfig& cfg) {
    cfg.validate();
    IbsPointSet ibs;
    try {
        if (!volume.has_surface()) throw Error(ErrorCode::CannotOptimize, "IBS volume has no surface");
        ibs = extract_ibs_points(volume, seed_pose.wrist.translation);
    } catch (const Error& e) {
        throw Error(ErrorCode::OptimizationFailed, std::string("every trial failed: ") + e.what());
    }

    MultiStartResult out;
    out.trials.resize(cfg.trials);
    const auto k = static_cast<std::ptrdiff_t>(cfg.trials);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < k; ++t) {
        auto& trial = out.trials[static_cast<std::size_t>(t)];
        trial.init = perturbed_init(hand, seed_pose, cfg, static_cast<std::size_t>(t));
        try {
            trial.result = optimize_grasp(hand, trial.init, ibs, weights, cfg);
            trial.residual = trial.result->breakdown.total;
        } catch (const Error& e) {
            trial.error = e.what();
            trial.residual = std::numeric_limits<double>::quiet_NaN();
        }
    }

    std::vector<GraspTrial> ranked;
    bool any = false;
    for (const auto& t : out.trials) {
        ranked.push_back({t.result ? t.result->pose : t.init, t.residual});
        any = any || t.result.has_value();
    }
    if (!any) {
        std::string why;
        for (std::size_t t = 0; t < out.trials.size(); ++t) {
            why += "\n  trial " + std::to_string(t) + ": " + out.trials[t].error;
        }
        throw Error(ErrorCode::OptimizationFailed, "every trial failed:" + why);
    }
    out.ranking = rank_grasps(ranked);
    return out;
}

}  // namespace ibsgrasp

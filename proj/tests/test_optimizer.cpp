#include "support.hpp"

#include "ibsgrasp/energy.hpp"
#include "ibsgrasp/error.hpp"
#include "ibsgrasp/optimizer.hpp"
#include "ibsgrasp/quality.hpp"
#include "ibsgrasp/scene.hpp"

#include <doctest.h>

#include <sstream>

using namespace ibsgrasp;
using namespace testing;

namespace {

GraspPose at_rest(const HandModel& hand, const Vec3& t = Vec3::Zero()) {
    return {RigidTransform::from_translation(t), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hand.dof()))};
}

const GraspFixture& sphere_fixture() {
    static const GraspFixture fx = make_fixture(two_finger(), make_scene("sphere_on_plane", 3), 3);
    return fx;
}

// Ground truth moved by up to 1 cm, 10 degrees and 0.2 rad per joint.
GraspPose disturbed(const HandModel& hand, const GraspPose& gt, std::mt19937_64& rng) {
    GraspPose p = gt;
    p.wrist.translation += random_unit(rng) * uniform(rng, 0.0, 0.01);
    p.wrist.rotation = axis_angle(random_unit(rng), uniform(rng, 0.0, 10.0 * std::numbers::pi / 180.0)) *
                       gt.wrist.rotation;
    for (Eigen::Index j = 0; j < p.joints.size(); ++j) {
        const auto& js = hand.joints()[static_cast<std::size_t>(j)];
        p.joints[j] = std::clamp(p.joints[j] + uniform(rng, -0.2, 0.2), js.theta_min, js.theta_max);
    }
    return p;
}

bool same_pose(const GraspPose& a, const GraspPose& b) {
    return a.wrist.rotation == b.wrist.rotation && a.wrist.translation == b.wrist.translation && a.joints == b.joints;
}

OptimizerConfig quick(std::size_t trials = 1, int iters = 60) {
    OptimizerConfig cfg;
    cfg.trials = trials;
    cfg.max_iters = iters;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("zero-energy initial pose is returned unchanged") {
    const HandModel jaw = load_hand(kJaw);
    const IbsPointSet plane = extract_ibs_points(planar_volume(), Point3(-0.1, 0, 0));
    const GraspPose init = at_rest(jaw, Vec3(-0.1, 0, 0));
    const OptimizeResult r = optimize_grasp(jaw, init, plane, EnergyWeights{}, OptimizerConfig{});
    CHECK(r.breakdown.total == 0.0);
    CHECK(r.iterations == 0);
    CHECK(r.best_iteration == 0);
    CHECK(r.trace.size() == 1);
    CHECK(same_pose(r.pose, init));
}

TEST_CASE("descent keeps the best pose seen") {
    const HandModel& hand = two_finger();
    const GraspFixture& fx = sphere_fixture();
    const IbsPointSet ibs = extract_ibs_points(fx.volume, fx.canonical_pose().wrist.translation);
    const EnergyModel model(hand, ibs, EnergyWeights{});
    std::mt19937_64 rng(5);

    for (auto method : {OptimizerConfig::Method::Adam, OptimizerConfig::Method::Gradient}) {
        OptimizerConfig cfg = quick(1, 80);
        cfg.method = method;
        const GraspPose init = disturbed(hand, fx.canonical_pose(), rng);
        const OptimizeResult r = optimize_grasp(hand, init, ibs, EnergyWeights{}, cfg);

        REQUIRE(r.trace.size() == static_cast<std::size_t>(r.iterations) + 1);
        CHECK(r.trace.front().total == doctest::Approx(model.evaluate(init).total).epsilon(1e-12));
        double best = r.trace.front().total;
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
            CHECK(r.trace[i].iteration == static_cast<int>(i));
            best = std::min(best, r.trace[i].total);
        }
        CHECK(r.breakdown.total == best);
        CHECK(r.trace[static_cast<std::size_t>(r.best_iteration)].total == best);
        CHECK(model.evaluate(r.pose).total == doctest::Approx(r.breakdown.total).epsilon(1e-12));
        CHECK(r.breakdown.total < r.trace.front().total);
        for (std::size_t j = 0; j < hand.dof(); ++j) {
            const double th = r.pose.joints[static_cast<Eigen::Index>(j)];
            CHECK(th >= hand.joints()[j].theta_min);
            CHECK(th <= hand.joints()[j].theta_max);
        }
    }
}

TEST_CASE("bad initial poses") {
    const HandModel& hand = two_finger();
    const GraspFixture& fx = sphere_fixture();
    const GraspPose gt = fx.canonical_pose();
    auto code = [&](const GraspPose& p) {
        try {
            optimize_grasp(hand, p, fx.volume, EnergyWeights{}, quick());
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };

    GraspPose wrong = gt;
    wrong.joints = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hand.dof()) + 1);
    CHECK(code(wrong) == ErrorCode::BadInit);

    GraspPose far = gt;
    far.joints[0] = hand.joints()[0].theta_max + 1.0;
    CHECK(code(far) == ErrorCode::BadInit);

    // Within the slack is accepted and projected back.
    GraspPose near = gt;
    near.joints[0] = hand.joints()[0].theta_max + 0.3;
    CHECK(code(near) == ErrorCode::IoError);

    GraspPose sheared = gt;
    sheared.wrist.rotation(0, 1) += 0.1;
    CHECK(code(sheared) == ErrorCode::BadInit);

    GraspPose nan = gt;
    nan.wrist.translation.x() = std::numeric_limits<double>::quiet_NaN();
    CHECK(code(nan) == ErrorCode::BadInit);
}

TEST_CASE("volumes that cannot be optimized against") {
    const HandModel jaw = load_hand(kJaw);
    const GraspPose init = at_rest(jaw, Vec3(-0.05, 0, 0));
    const SparseIbsVolume empty = planar_volume(0.0);
    REQUIRE_FALSE(empty.has_surface());
    const SparseIbsVolume tiny = planar_volume(0.004);
    REQUIRE(tiny.surface_count() == 4);

    for (const SparseIbsVolume* v : {&empty, &tiny}) {
        try {
            optimize_grasp(jaw, init, *v, EnergyWeights{}, quick());
            FAIL("expected CannotOptimize");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CannotOptimize);
        }
        try {
            multi_start(jaw, init, *v, EnergyWeights{}, quick(3));
            FAIL("expected OptimizationFailed");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OptimizationFailed);
        }
    }
}

TEST_CASE("every trial failing is OptimizationFailed") {
    const HandModel& hand = two_finger();
    GraspPose bad = sphere_fixture().canonical_pose();
    bad.joints[0] = hand.joints()[0].theta_max + 5.0;
    OptimizerConfig cfg = quick(3);
    cfg.joint_margin = 10.0;  // keeps the perturbed joints out of range too
    try {
        multi_start(hand, bad, sphere_fixture().volume, EnergyWeights{}, cfg);
        FAIL("expected OptimizationFailed");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OptimizationFailed);
    }
}

TEST_CASE("perturbed initial poses") {
    const HandModel& hand = four_finger();
    std::mt19937_64 rng(3);
    const GraspPose seed = random_pose(hand, rng);
    OptimizerConfig cfg;
    cfg.seed = 99;

    CHECK(same_pose(perturbed_init(hand, seed, cfg, 0), seed));
    for (std::size_t t = 1; t < 6; ++t) {
        const GraspPose a = perturbed_init(hand, seed, cfg, t);
        CHECK(same_pose(a, perturbed_init(hand, seed, cfg, t)));
        CHECK_FALSE(same_pose(a, seed));
        CHECK_FALSE(same_pose(a, perturbed_init(hand, seed, cfg, t + 1)));
        CHECK(a.wrist.is_valid(1e-9));
        for (std::size_t j = 0; j < hand.dof(); ++j) {
            CHECK(a.joints[static_cast<Eigen::Index>(j)] >= hand.joints()[j].theta_min);
            CHECK(a.joints[static_cast<Eigen::Index>(j)] <= hand.joints()[j].theta_max);
        }
    }
    OptimizerConfig other = cfg;
    other.seed = 100;
    CHECK_FALSE(same_pose(perturbed_init(hand, seed, cfg, 1), perturbed_init(hand, seed, other, 1)));

    OptimizerConfig still = cfg;
    still.sigma_translation = still.sigma_rotation = still.sigma_joints = 0.0;
    GraspPose inside = seed;
    for (std::size_t j = 0; j < hand.dof(); ++j) inside.joints[static_cast<Eigen::Index>(j)] = hand.joints()[j].theta_min;
    CHECK(same_pose(perturbed_init(hand, inside, still, 3), inside));
}

TEST_CASE("multi-start selection and determinism") {
    const HandModel& hand = two_finger();
    const GraspFixture& fx = sphere_fixture();
    std::mt19937_64 rng(8);
    const GraspPose init = disturbed(hand, fx.canonical_pose(), rng);

    const MultiStartResult one = multi_start(hand, init, fx.volume, EnergyWeights{}, quick(1, 20));
    REQUIRE(one.trials.size() == 1);
    CHECK(same_pose(one.trials[0].init, init));
    CHECK(one.ranking.front().index == 0);

    const OptimizerConfig cfg = quick(5, 40);
    const MultiStartResult a = multi_start(hand, init, fx.volume, EnergyWeights{}, cfg);
    const MultiStartResult b = multi_start(hand, init, fx.volume, EnergyWeights{}, cfg);
    REQUIRE(a.trials.size() == 5);
    REQUIRE(a.ranking.size() == 5);
    std::size_t argmin = 0;
    for (std::size_t t = 0; t < 5; ++t) {
        REQUIRE(a.trials[t].result);
        CHECK(a.trials[t].residual == a.trials[t].result->breakdown.total);
        CHECK(same_pose(a.trials[t].result->pose, b.trials[t].result->pose));
        CHECK(a.trials[t].residual == b.trials[t].residual);
        CHECK(same_pose(a.trials[t].init, perturbed_init(hand, init, cfg, t)));
        if (a.trials[t].residual < a.trials[argmin].residual) argmin = t;
    }
    CHECK(a.ranking.front().index == argmin);
    for (std::size_t r = 1; r < a.ranking.size(); ++r) CHECK(a.ranking[r - 1].residual <= a.ranking[r].residual);

    // Scaling every weight by the same factor scales each residual and keeps
    // the order of the returned poses.
    const IbsPointSet ibs = extract_ibs_points(fx.volume, init.wrist.translation);
    EnergyWeights scaled;
    scaled.lambda1 *= 3.0;
    scaled.lambda2 *= 3.0;
    scaled.lambda3 *= 3.0;
    scaled.lambda4 *= 3.0;
    const EnergyModel rescore(hand, ibs, scaled);
    std::vector<GraspTrial> trials;
    for (const auto& t : a.trials) {
        const double e = rescore.evaluate(t.result->pose).total;
        CHECK(e == doctest::Approx(3.0 * t.residual).epsilon(1e-9));
        trials.push_back({t.result->pose, e});
    }
    const auto reranked = rank_grasps(trials);
    for (std::size_t r = 0; r < reranked.size(); ++r) CHECK(reranked[r].index == a.ranking[r].index);
}

TEST_CASE("perturbed ground truth is recovered") {
    const HandModel& hand = two_finger();
    const GraspFixture& fx = sphere_fixture();
    const double vs = fx.volume.voxel_size();
    std::mt19937_64 rng(21);
    const GraspPose init = disturbed(hand, fx.canonical_pose(), rng);
    OptimizerConfig cfg;
    cfg.seed = 3;
    const MultiStartResult ms = multi_start(hand, init, fx.volume, EnergyWeights{}, cfg);
    const OptimizeResult& best = *ms.selected().result;
    CHECK(best.breakdown.e_sidedness <= 1e-3);
    CHECK(fingertip_contact_rms(hand, best.pose, fx.volume) <= 2.0 * vs);
    CHECK(max_penetration_depth(fx.scene.cloud, hand, to_world(best.pose, fx.volume.frame())) <= 0.5 * vs);
}

TEST_CASE("config JSON") {
    OptimizerConfig cfg;
    cfg.trials = 7;
    cfg.step_size = 0.01;
    cfg.seed = 1234567890123ULL;
    cfg.method = OptimizerConfig::Method::Gradient;
    cfg.joint_margin = 0.05;
    const OptimizerConfig back = optimizer_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(back.method == OptimizerConfig::Method::Gradient);
    CHECK(back.seed == cfg.seed);

    const OptimizerConfig partial = optimizer_config_from_json(nlohmann::json{{"max_iters", 50}});
    CHECK(partial.max_iters == 50);
    CHECK(partial.trials == OptimizerConfig{}.trials);

    auto rejects = [](const nlohmann::json& j) {
        try {
            optimizer_config_from_json(j);
        } catch (const Error& e) {
            return e.code() == ErrorCode::ValidationError;
        }
        return false;
    };
    CHECK(rejects({{"trails", 5}}));
    CHECK(rejects({{"trials", 0}}));
    CHECK(rejects({{"step_size", -1.0}}));
    CHECK(rejects({{"method", "lbfgs"}}));
    CHECK(rejects({{"max_iters", "many"}}));
    CHECK(rejects(nlohmann::json::array()));

    EnergyWeights w;
    w.lambda3 = 10.0;
    w.delta = 0.004;
    CHECK(to_json(energy_weights_from_json(to_json(w))) == to_json(w));
    CHECK_THROWS_AS(energy_weights_from_json({{"lambda5", 1.0}}), Error);
    CHECK_THROWS_AS(energy_weights_from_json({{"alpha1", -1.0}}), Error);
}

TEST_CASE("trace CSV") {
    std::vector<TraceRow> rows{{0, 0.1, 0.2, 0.3, 0.4, 1.0}, {1, 0.0, 0.0, 0.0, 0.125, 0.125}};
    std::ostringstream out;
    write_trace_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "iteration,e_joint,e_selfpen,e_sidedness,e_contact,total");
    CHECK(lines[2] == "1,0,0,0,0.125,0.125");
    CHECK(lines[1].rfind("0,0.1", 0) == 0);
}

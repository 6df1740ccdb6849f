#include "support.hpp"

#include "ibsgrasp/error.hpp"
#include "ibsgrasp/pose_io.hpp"

#include <doctest.h>

#include <set>

using namespace ibsgrasp;
using namespace testing;

namespace {

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    return s.replace(at, from.size(), to);
}

ErrorCode code_of(const std::string& text) {
    try {
        load_hand(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("config was accepted");
    return ErrorCode::IoError;
}

double boundary_distance(const HandModel& hand, const FkResult& fk, std::size_t link, const Point3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& prim : hand.links()[link].primitives) {
        best = std::min(best, std::abs(prim.transformed(fk.links[link]).signed_distance(p)));
    }
    return best;
}

}  // namespace

TEST_CASE("load_hand: examples") {
    const HandModel jaw = load_hand(kJaw);
    CHECK(jaw.dof() == 2);
    CHECK(jaw.name() == "jaw");
    CHECK(jaw.links()[*jaw.link_index("thumb")].tag == FingerTag::Thumb);

    CHECK(code_of(replace(kJaw, "limits -1 1", "limits 1 1")) == ErrorCode::ValidationError);
    CHECK(code_of(replace(kJaw, "limits -1 1", "limits 1 -1")) == ErrorCode::ValidationError);
    // palm -> thumb -> palm: the palm becomes its own descendant.
    const std::string cyclic = std::string(kJaw) + "joint back {\n parent thumb\n child palm\n axis 1 0 0\n limits 0 1\n}\n";
    CHECK(code_of(cyclic) == ErrorCode::ValidationError);
    CHECK(code_of(replace(kJaw, "tag thumb", "tag palm")) == ErrorCode::ValidationError);
    CHECK(code_of(replace(kJaw, "sample 0 0 0.035", "sample 0 0 0.05")) == ErrorCode::ValidationError);
    CHECK(code_of(replace(kJaw, "axis 0 0 1", "axis 0 0 2")) == ErrorCode::ValidationError);
    CHECK(code_of(replace(kJaw, "child finger", "child nowhere")) == ErrorCode::ValidationError);
}

TEST_CASE("load_hand: parse errors carry the line") {
    try {
        load_hand(replace(kJaw, "sphere 0 0 0 0.01", "sphere 0 zero 0 0.01"));
        FAIL("accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(load_hand(replace(kJaw, "tag palm", "tag wrist")), ParseError);
    CHECK_THROWS_AS(load_hand(replace(kJaw, "link palm {", "link palm")), ParseError);
    CHECK_THROWS_AS(load_hand(std::string(kJaw) + "bogus 1\n"), ParseError);
}

TEST_CASE("serialize_hand round trips") {
    for (const HandModel* h : shipped_hands()) {
        const HandModel back = load_hand(serialize_hand(*h));
        REQUIRE(back.dof() == h->dof());
        REQUIRE(back.links().size() == h->links().size());
        std::mt19937_64 rng(1);
        const GraspPose pose = random_pose(*h, rng);
        const auto a = sample_hand_surface(*h, pose);
        const auto b = sample_hand_surface(back, pose);
        REQUIRE(a.cloud.size() == b.cloud.size());
        for (std::size_t i = 0; i < a.cloud.size(); ++i) CHECK((a.cloud.points[i] - b.cloud.points[i]).norm() <= 1e-12);
    }
}

TEST_CASE("shipped hands") {
    CHECK(two_finger().dof() == 4);
    CHECK(four_finger().dof() == 16);
    for (const HandModel* h : shipped_hands()) {
        const auto s = sample_hand_surface(*h, GraspPose{{}, h->mid_range()});
        std::set<FingerTag> tags(s.tags.begin(), s.tags.end());
        CHECK(tags.count(FingerTag::Thumb) == 1);
        CHECK(tags.count(FingerTag::OtherFinger) == 1);
        CHECK(s.cloud.size() == h->sample_count());
    }
}

TEST_CASE("forward kinematics") {
    const HandModel jaw = load_hand(kJaw);
    GraspPose zero{{}, Eigen::VectorXd::Zero(2)};
    const FkResult fk = forward_kinematics(jaw, zero);
    CHECK(fk.links[*jaw.link_index("palm")].translation == Vec3::Zero());
    CHECK(fk.links[*jaw.link_index("thumb")].translation == Vec3(-0.03, 0, 0));
    CHECK(fk.links[*jaw.link_index("thumb")].rotation == Mat3::Identity());

    GraspPose quarter = zero;
    quarter.joints[0] = std::numbers::pi / 2;
    const Mat3 r = forward_kinematics(jaw, quarter).links[*jaw.link_index("thumb")].rotation;
    CHECK((r * Vec3::UnitX() - Vec3::UnitY()).norm() <= 1e-12);

    std::mt19937_64 rng(17);
    for (const HandModel* h : shipped_hands()) {
        for (int rep = 0; rep < 50; ++rep) {
            const GraspPose p = random_pose(*h, rng, 0.3);
            const RigidTransform w = random_transform(rng);
            const FkResult a = forward_kinematics(*h, p);
            GraspPose moved = p;
            moved.wrist = w * p.wrist;
            const FkResult b = forward_kinematics(*h, moved);
            GraspPose at_identity = p;
            at_identity.wrist = RigidTransform::identity();
            const FkResult c = forward_kinematics(*h, at_identity);
            for (std::size_t l = 0; l < a.links.size(); ++l) {
                const RigidTransform wa = w * a.links[l];
                REQUIRE((wa.rotation - b.links[l].rotation).norm() <= 1e-12);
                REQUIRE((wa.translation - b.links[l].translation).norm() <= 1e-12);
                const RigidTransform local = p.wrist.inverse() * a.links[l];
                REQUIRE((local.rotation - c.links[l].rotation).norm() <= 1e-12);
                REQUIRE((local.translation - c.links[l].translation).norm() <= 1e-12);
            }
        }
    }
}

TEST_CASE("sample_hand_surface") {
    const HandModel jaw = load_hand(kJaw);
    GraspPose p{{}, Eigen::VectorXd::Zero(2)};
    const auto s0 = sample_hand_surface(jaw, p);
    CHECK(s0.cloud.points[0] == Point3(0, 0, 0.01));
    CHECK(s0.tags[0] == FingerTag::Palm);
    CHECK(s0.tags[1] == FingerTag::Thumb);
    CHECK(s0.tags[3] == FingerTag::OtherFinger);

    p.wrist.translation = Vec3(0.1, 0, 0);
    const auto s1 = sample_hand_surface(jaw, p);
    for (std::size_t i = 0; i < s0.cloud.size(); ++i) CHECK(s1.cloud.points[i] == s0.cloud.points[i] + Vec3(0.1, 0, 0));

    std::mt19937_64 rng(23);
    for (const HandModel* h : shipped_hands()) {
        for (int rep = 0; rep < 20; ++rep) {
            const GraspPose pose = random_pose(*h, rng);
            const FkResult fk = forward_kinematics(*h, pose);
            const auto s = sample_hand_surface(*h, fk);
            const auto again = sample_hand_surface(*h, pose);
            REQUIRE(s.cloud.points == again.cloud.points);
            for (std::size_t i = 0; i < s.cloud.size(); ++i) {
                REQUIRE(boundary_distance(*h, fk, s.link_of[i], s.cloud.points[i]) <= 1e-6);
            }
        }
    }
}

TEST_CASE("pose chart") {
    const HandModel& h = two_finger();
    std::mt19937_64 rng(29);
    const GraspPose ref = random_pose(h, rng);
    const GraspPose same = pose_from_params(ref, PoseParams::zero(h.dof()));
    CHECK(same.wrist.rotation == ref.wrist.rotation);
    CHECK(same.wrist.translation == ref.wrist.translation);
    CHECK(same.joints == ref.joints);

    PoseParams quarter = PoseParams::zero(h.dof());
    quarter.rotation_local = Vec3(0, 0, std::numbers::pi / 2);
    const GraspPose q = pose_from_params(GraspPose{{}, h.mid_range()}, quarter);
    CHECK((q.wrist.rotation - axis_angle(Vec3::UnitZ(), std::numbers::pi / 2)).norm() <= 1e-12);

    PoseParams over = PoseParams::zero(h.dof());
    over.rotation_local = Vec3(std::numbers::pi, 0, 0);
    try {
        pose_from_params(ref, over);
        FAIL("expected ChartOverflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ChartOverflow);
    }

    for (int rep = 0; rep < 100; ++rep) {
        PoseParams p;
        p.translation = random_vec(rng, 0.05);
        p.rotation_local = random_unit(rng) * uniform(rng, 0.0, 0.5);
        p.joints = Eigen::VectorXd::Random(static_cast<Eigen::Index>(h.dof())) * 0.2;
        const PoseParams back = params_from_pose(ref, pose_from_params(ref, p));
        REQUIRE((back.pack() - p.pack()).norm() <= 1e-10);
    }
}

TEST_CASE("surface jacobian") {
    std::mt19937_64 rng(31);
    for (const HandModel* h : shipped_hands()) {
        for (int rep = 0; rep < 100; ++rep) {
            const GraspPose pose = random_pose(*h, rng, 0.2);
            const auto jac = surface_jacobian(*h, pose);
            const auto base = sample_hand_surface(*h, pose);
            REQUIRE(jac.size() == base.cloud.size());
            const auto n = static_cast<Eigen::Index>(param_count(*h));
            // One FD column at a time, all points at once.
            for (Eigen::Index c = 0; c < n; ++c) {
                Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
                d[c] = 1e-5;
                const auto plus = sample_hand_surface(*h, pose_from_params(pose, PoseParams::unpack(d)));
                d[c] = -1e-5;
                const auto minus = sample_hand_surface(*h, pose_from_params(pose, PoseParams::unpack(d)));
                for (std::size_t i = 0; i < jac.size(); i += 3) {
                    const Vec3 fd = (plus.cloud.points[i] - minus.cloud.points[i]) / 2e-5;
                    const Eigen::VectorXd a = jac[i].col(c);
                    REQUIRE(gradient_rel_error(a, fd) <= 1e-3);
                }
            }
            for (std::size_t i = 0; i < jac.size(); ++i) {
                REQUIRE((jac[i].leftCols<3>() - Mat3::Identity()).norm() == 0.0);
            }
        }
    }
}

TEST_CASE("joint column is the rigid rotation velocity") {
    const HandModel jaw = load_hand(kJaw);
    const GraspPose pose{{}, Eigen::VectorXd::Zero(2)};
    const auto jac = surface_jacobian(jaw, pose);
    const auto s = sample_hand_surface(jaw, pose);
    // Finger tip sample (0.03, 0, 0.035), axis +y through (0.03, 0, 0): r = 0.035.
    const Vec3 col = jac[3].col(6 + 1);
    CHECK(col.norm() == doctest::Approx(0.035).epsilon(1e-12));
    CHECK(std::abs(col.dot(Vec3::UnitY())) <= 1e-12);
    CHECK(std::abs(col.dot(s.cloud.points[3] - Point3(0.03, 0, 0))) <= 1e-12);
    // Thumb samples do not move with the finger joint.
    CHECK(jac[1].col(6 + 1).norm() == 0.0);
}

TEST_CASE("pose JSON") {
    std::mt19937_64 rng(37);
    const GraspPose p = random_pose(four_finger(), rng);
    const GraspPose back = pose_from_json(pose_to_json(p));
    CHECK(back.wrist.rotation == p.wrist.rotation);
    CHECK(back.wrist.translation == p.wrist.translation);
    CHECK(back.joints == p.joints);
    auto j = pose_to_json(p);
    j["wrist"]["rotation"][0] = 2.0;
    CHECK_THROWS_AS(pose_from_json(j), Error);
    j.erase("joints");
    CHECK_THROWS_AS(pose_from_json(j), ParseError);
}

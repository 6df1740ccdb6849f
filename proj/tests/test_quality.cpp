#include "support.hpp"

#include "ibsgrasp/error.hpp"
#include "ibsgrasp/kernels.hpp"
#include "ibsgrasp/quality.hpp"
#include "ibsgrasp/scene.hpp"

#include <doctest.h>

#include <set>

using namespace ibsgrasp;
using namespace testing;

namespace {

ContactSet contacts(const std::vector<Vec3>& thumb, const std::vector<Vec3>& others) {
    ContactSet c;
    for (const auto& n : thumb) c.thumb.push_back({Point3::Zero(), n.normalized()});
    for (const auto& n : others) c.others.push_back({Point3::Zero(), n.normalized()});
    return c;
}

// Written out independently of Primitive::core_distance.
double brute_depth(const Point3& p, const Primitive& prim) {
    double core;
    if (prim.kind == Primitive::Kind::Sphere) {
        core = (p - prim.a).norm();
    } else {
        const Vec3 ab = prim.b - prim.a;
        double best = std::numeric_limits<double>::infinity();
        for (int s = 0; s <= 2000; ++s) best = std::min(best, (p - (prim.a + ab * (s / 2000.0))).norm());
        const double t = std::clamp((p - prim.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        core = std::min(best, (p - (prim.a + t * ab)).norm());
    }
    return prim.radius - core;
}

}  // namespace

TEST_CASE("force-closure score examples") {
    const IbsScore anti = force_closure_score(contacts({{1, 0, 0}}, {{-1, 0, 0}}));
    CHECK(anti.feasible);
    CHECK(anti.value == 0.0);

    const IbsScore parallel = force_closure_score(contacts({{1, 0, 0}}, {{1, 0, 0}}));
    CHECK(parallel.feasible);
    CHECK(parallel.value == doctest::Approx(-1.0).epsilon(1e-15));

    const IbsScore thumb_only = force_closure_score(contacts({{1, 0, 0}}, {}));
    CHECK_FALSE(thumb_only.feasible);
    CHECK(thumb_only.value == -std::numeric_limits<double>::infinity());
    CHECK_FALSE(force_closure_score(ContactSet{}).feasible);

    const double a = 2.0 * std::numbers::pi / 3.0;
    const IbsScore tri = force_closure_score(
        contacts({{1, 0, 0}}, {{std::cos(a), std::sin(a), 0}, {std::cos(2 * a), std::sin(2 * a), 0}}));
    CHECK(std::abs(tri.value) <= 1e-12);
}

TEST_CASE("force-closure score: rotation invariance and antipodal dominance") {
    std::mt19937_64 rng(61);
    for (int rep = 0; rep < 200; ++rep) {
        ContactSet c;
        const int nt = 1 + static_cast<int>(rng() % 4), no = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < nt; ++i) c.thumb.push_back({random_vec(rng, 0.1), random_unit(rng)});
        for (int i = 0; i < no; ++i) c.others.push_back({random_vec(rng, 0.1), random_unit(rng)});
        const IbsScore s = force_closure_score(c);

        const Mat3 r = random_rotation(rng);
        ContactSet rc = c;
        for (auto* g : {&rc.thumb, &rc.others}) {
            for (auto& k : *g) {
                k.point = r * k.point;
                k.normal = r * k.normal;
            }
        }
        CHECK(std::abs(force_closure_score(rc).value - s.value) <= 1e-12);

        Vec3 sum = Vec3::Zero();
        for (const auto* g : {&c.thumb, &c.others}) {
            for (const auto& k : *g) sum += k.normal;
        }
        const double count = static_cast<double>(c.thumb.size() + c.others.size());
        ContactSet more = c;
        more.others.push_back({Point3::Zero(), -sum / count});
        CHECK(force_closure_score(more).value >= s.value - 1e-15);
        // A unit-length counter-normal only helps once |sum| >= N / (2N + 1).
        if (sum.norm() >= count / (2.0 * count + 1.0)) {
            ContactSet unit = c;
            unit.others.push_back({Point3::Zero(), -sum.normalized()});
            CHECK(force_closure_score(unit).value >= s.value - 1e-15);
        }
    }
}

TEST_CASE("contact set validation") {
    ContactSet c = contacts({{1, 0, 0}}, {});
    CHECK_NOTHROW(c.validate());
    c.others.push_back({Point3::Zero(), Vec3(1.001, 0, 0)});
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("rank_scores and rank_grasps") {
    const std::vector<IbsScore> s{{-0.3, true}, {0.0, true}, {-1.0, true}};
    std::vector<std::size_t> order;
    for (const auto& r : rank_scores(s)) order.push_back(r.index);
    CHECK(order == std::vector<std::size_t>{1, 0, 2});

    const std::vector<IbsScore> tied(4, IbsScore{-0.5, true});
    order.clear();
    for (const auto& r : rank_scores(tied)) order.push_back(r.index);
    CHECK(order == std::vector<std::size_t>{0, 1, 2, 3});

    const std::vector<IbsScore> with_infeasible{{}, {-0.2, true}, {}};
    CHECK(rank_scores(with_infeasible).front().index == 1);

    const std::vector<GraspTrial> trials{{GraspPose{}, 3.0}, {GraspPose{}, 1.0}, {GraspPose{}, 2.0}};
    order.clear();
    for (const auto& r : rank_grasps(trials)) order.push_back(r.index);
    CHECK(order == std::vector<std::size_t>{1, 2, 0});

    const std::vector<GraspTrial> nan{{GraspPose{}, std::nan("")}, {GraspPose{}, 5.0},
                                      {GraspPose{}, std::numeric_limits<double>::infinity()}, {GraspPose{}, 4.0}};
    order.clear();
    for (const auto& r : rank_grasps(nan)) order.push_back(r.index);
    CHECK(order == std::vector<std::size_t>{3, 1, 0, 2});

    CHECK_THROWS_AS(rank_grasps(std::vector<GraspTrial>{}), Error);
    CHECK_THROWS_AS(rank_ibs(std::vector<SparseIbsVolume>{}, Point3::Zero()), Error);
}

TEST_CASE("ranking soundness on random inputs") {
    std::mt19937_64 rng(67);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<IbsScore> s;
        std::vector<GraspTrial> t;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse values so ties happen.
            s.push_back(rng() % 5 == 0 ? IbsScore{} : IbsScore{-0.25 * static_cast<double>(rng() % 4), true});
            t.push_back({GraspPose{}, 0.5 * static_cast<double>(rng() % 4)});
        }
        const auto rs = rank_scores(s);
        const auto rg = rank_grasps(t);
        std::set<std::size_t> seen_s, seen_g;
        for (std::size_t i = 0; i < n; ++i) {
            seen_s.insert(rs[i].index);
            seen_g.insert(rg[i].index);
            if (i == 0) continue;
            CHECK(rs[i - 1].score.value >= rs[i].score.value);
            if (rs[i - 1].score.value == rs[i].score.value) CHECK(rs[i - 1].index < rs[i].index);
            CHECK(rg[i - 1].residual <= rg[i].residual);
            if (rg[i - 1].residual == rg[i].residual) CHECK(rg[i - 1].index < rg[i].index);
        }
        CHECK(seen_s.size() == n);
        CHECK(seen_g.size() == n);
    }
}

TEST_CASE("contact_set_from_volume") {
    CHECK(contact_set_from_volume(planar_volume(), Point3(-0.1, 0, 0)).thumb.empty());

    const SparseIbsVolume base = planar_volume();
    const SparseIbsVolume v = planar_volume(0.03, {planar_voxel(base, 0, 0)}, {});
    const ContactSet c = contact_set_from_volume(v, Point3(-0.1, 0, 0));
    REQUIRE(c.thumb.size() == 1);
    CHECK(c.others.empty());
    CHECK((c.thumb[0].normal - Vec3(1, 0, 0)).norm() <= 1e-6);
    CHECK(c.thumb[0].point == v.grid().voxel_center(planar_voxel(base, 0, 0)));
}

// Per-voxel contact normals follow the bisector sheet, which tilts away from
// the radial direction at the edges of a contact patch. Each normal is checked
// against the analytic sheet (sphere and table against the hand primitives),
// and the patch mean against the direction to the sphere centre.
TEST_CASE("contact normals on sphere fixtures point at the centre") {
    const double cos15 = std::cos(15.0 * std::numbers::pi / 180.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const GraspFixture fx = make_fixture(two_finger(), make_scene("sphere_on_plane", seed), seed);
        const RigidTransform to_c = fx.volume.frame().to_canonical();
        const Point3 center = to_c.apply(fx.scene.target.center);
        const double radius = fx.scene.target.radius;
        const Point3 table_origin = to_c.apply(Point3::Zero());
        const Vec3 table_up = to_c.rotation * Vec3::UnitZ();
        const GraspPose pose = fx.canonical_pose();
        const auto prims = world_primitives(two_finger(), forward_kinematics(two_finger(), pose));
        const ContactSet c = contact_set_from_volume(fx.volume, pose.wrist.translation);
        REQUIRE_FALSE(c.thumb.empty());
        REQUIRE_FALSE(c.others.empty());
        std::size_t on_sheet = 0, total = 0;
        for (const auto* g : {&c.thumb, &c.others}) {
            Vec3 mean = Vec3::Zero();
            Point3 centroid = Point3::Zero();
            std::size_t on_sphere = 0;
            for (const auto& k : *g) {
                const Primitive* nearest = &prims.front();
                for (const auto& prim : prims) {
                    if (prim.signed_distance(k.point) < nearest->signed_distance(k.point)) nearest = &prim;
                }
                Point3 foot = nearest->a;
                if (nearest->kind == Primitive::Kind::Capsule) {
                    const Vec3 ab = nearest->b - nearest->a;
                    foot += std::clamp((k.point - nearest->a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) * ab;
                }
                const double d_sphere = (k.point - center).norm() - radius;
                const double d_table = table_up.dot(k.point - table_origin);
                const Vec3 away_scene = d_sphere <= d_table ? Vec3((k.point - center).normalized()) : table_up;
                const Vec3 inward = ((k.point - foot).normalized() - away_scene).normalized();
                ++total;
                on_sheet += k.normal.dot(inward) >= cos15;
                if (d_sphere > d_table) continue;
                ++on_sphere;
                mean += k.normal;
                centroid += k.point;
            }
            REQUIRE(on_sphere > 0);
            centroid /= static_cast<double>(on_sphere);
            CHECK(mean.normalized().dot((center - centroid).normalized()) >= cos15);
        }
        CHECK(static_cast<double>(on_sheet) >= 0.9 * static_cast<double>(total));
    }
}

TEST_CASE("rank_ibs matches independent rescoring") {
    std::vector<SparseIbsVolume> volumes;
    std::vector<Point3> hints;
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const GraspFixture fx = make_fixture(two_finger(), make_scene("sphere_on_plane", seed), seed);
        volumes.push_back(fx.volume);
    }
    const Point3 hint(0, 0, -0.12);
    const auto ranked = rank_ibs(volumes, hint);
    REQUIRE(ranked.size() == 5);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        const double s = force_closure_score(contact_set_from_volume(volumes[i], hint)).value;
        if (s > best) {
            best = s;
            arg = i;
        }
    }
    CHECK(ranked.front().index == arg);
    CHECK(ranked.front().score.value == best);
}

TEST_CASE("max_penetration_depth examples") {
    const HandModel jaw = load_hand(kJaw);
    GraspPose pose{RigidTransform::identity(), Eigen::VectorXd::Zero(2)};
    // Palm sphere radius 0.01 at the origin.
    CHECK(max_penetration_depth(PointCloud({Point3(0, 0, 0.02)}), jaw, pose) == 0.0);
    CHECK(max_penetration_depth(PointCloud({Point3::Zero()}), jaw, pose) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(max_penetration_depth(PointCloud{}, jaw, pose) == 0.0);
}

TEST_CASE("max_penetration_depth agrees with brute force") {
    std::mt19937_64 rng(71);
    for (const HandModel* hand : shipped_hands()) {
        for (int rep = 0; rep < 20; ++rep) {
            const GraspPose pose = random_pose(*hand, rng);
            const auto prims = world_primitives(*hand, forward_kinematics(*hand, pose));
            std::vector<Point3> pts;
            for (int i = 0; i < 200; ++i) {
                const auto& prim = prims[rng() % prims.size()];
                pts.push_back(prim.a + random_vec(rng, 0.02));
            }
            double expect = 0.0;
            for (const auto& p : pts) {
                for (const auto& prim : prims) expect = std::max(expect, brute_depth(p, prim));
            }
            CHECK(std::abs(max_penetration_depth(PointCloud(pts), *hand, pose) - expect) <= 1e-9);

            // Shrinking every radius never deepens the intrusion.
            auto shrunk = prims;
            for (auto& prim : shrunk) prim.radius *= uniform(rng, 0.3, 1.0);
            CHECK(kernels::max_penetration(pts, shrunk) <= kernels::max_penetration(pts, prims));
        }
    }
}

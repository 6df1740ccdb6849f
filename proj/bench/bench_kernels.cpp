// OpenMP kernels against their serial references, plus the end-to-end IBS
// and energy paths they feed.

#include "ibsgrasp/energy.hpp"
#include "ibsgrasp/fixtures.hpp"
#include "ibsgrasp/hand_config.hpp"
#include "ibsgrasp/ibs.hpp"
#include "ibsgrasp/kernels.hpp"
#include "ibsgrasp/scene.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace ibsgrasp;

namespace {

std::vector<Point3> random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
    return pts;
}

std::vector<Primitive> random_primitives(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<Primitive> prims;
    for (std::size_t i = 0; i < n; ++i) {
        const Point3 a(u(rng), u(rng), u(rng));
        prims.push_back(i % 2 ? Primitive::sphere(a, 0.01) : Primitive::capsule(a, a + Point3(0.02, 0, 0), 0.008));
    }
    return prims;
}

void BM_NearestBatch(benchmark::State& state) {
    const auto cloud = random_cloud(20000, 1);
    const auto queries = random_cloud(static_cast<std::size_t>(state.range(0)), 2);
    const SpatialIndex index(cloud);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::nearest_batch(index, queries));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NearestBatchReference(benchmark::State& state) {
    const auto cloud = random_cloud(20000, 1);
    const auto queries = random_cloud(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::nearest_batch(cloud, queries));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProximityPairs(benchmark::State& state) {
    const auto pts = random_cloud(static_cast<std::size_t>(state.range(0)), 3);
    std::vector<std::size_t> group(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) group[i] = i % 8;
    kernels::PairMask mask(8);
    for (std::size_t g = 0; g < 8; ++g) mask.exclude(g, g);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::proximity_pairs(pts, group, mask, 0.003));
}

void BM_ProximityPairsReference(benchmark::State& state) {
    const auto pts = random_cloud(static_cast<std::size_t>(state.range(0)), 3);
    std::vector<std::size_t> group(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) group[i] = i % 8;
    kernels::PairMask mask(8);
    for (std::size_t g = 0; g < 8; ++g) mask.exclude(g, g);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::proximity_pairs(pts, group, mask, 0.003));
}

void BM_MaxPenetration(benchmark::State& state) {
    const auto pts = random_cloud(static_cast<std::size_t>(state.range(0)), 4);
    const auto prims = random_primitives(40, 5);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::max_penetration(pts, prims));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MaxPenetrationReference(benchmark::State& state) {
    const auto pts = random_cloud(static_cast<std::size_t>(state.range(0)), 4);
    const auto prims = random_primitives(40, 5);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::max_penetration(pts, prims));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct FixtureData {
    HandModel hand;
    GraspFixture fixture;
};

const FixtureData& fixture_data() {
    static const FixtureData d = [] {
        HandModel hand = load_hand_file(std::string(IBSGRASP_DATA_DIR) + "/hands/four_finger_16dof.hand");
        GraspFixture fx = make_fixture(hand, make_scene("sphere_on_plane", 1), 1);
        return FixtureData{std::move(hand), std::move(fx)};
    }();
    return d;
}

void BM_GroundTruthIbs(benchmark::State& state) {
    const FixtureData& d = fixture_data();
    for (auto _ : state) benchmark::DoNotOptimize(ground_truth_ibs(d.hand, d.fixture.pose, d.fixture.scene.cloud));
}

void BM_EnergyEvaluate(benchmark::State& state) {
    const FixtureData& d = fixture_data();
    const GraspPose pose = d.fixture.canonical_pose();
    const EnergyModel model(d.hand, extract_ibs_points(d.fixture.volume, pose.wrist.translation), EnergyWeights{});
    for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(pose));
}

}  // namespace

BENCHMARK(BM_NearestBatch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NearestBatchReference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ProximityPairs)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ProximityPairsReference)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPenetration)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPenetrationReference)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GroundTruthIbs)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnergyEvaluate)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

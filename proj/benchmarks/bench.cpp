#include <benchmark/benchmark.h>

#include <random>

#include "dronav/localize/amcl.hpp"
#include "dronav/mapping/slam.hpp"
#include "dronav/nav/costmap.hpp"
#include "dronav/nav/dwa.hpp"
#include "dronav/nav/planner.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/runtime/sim.hpp"
#include "dronav/sensing/lidar.hpp"
#include "nav_oracles.hpp"
#include "runtime_fixtures.hpp"

using namespace dronav;

namespace {

mapping::OccupancyGrid SampleGrid() {
  mapping::OccupancyGrid g({0.05, 200, 200, {0.0, 0.0}}, mapping::CellState::kFree);
  for (int i = 0; i < 200; ++i) {
    g.set({i, 0}, mapping::CellState::kOccupied);
    g.set({i, 199}, mapping::CellState::kOccupied);
    g.set({0, i}, mapping::CellState::kOccupied);
    g.set({199, i}, mapping::CellState::kOccupied);
  }
  for (const auto& s : testing::SampleWorld().obstacles) runtime::rasterize_shape(g, s);
  return g;
}

void BM_RaycastScan(benchmark::State& st) {
  const auto w = testing::SampleWorld();
  const sensing::LidarSpec spec;
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(sensing::raycast_scan(w, {2.5, 2.5, 0.3}, spec, ++seed));
  st.SetItemsProcessed(st.iterations() * spec.num_beams);
}
BENCHMARK(BM_RaycastScan);

void BM_BuildCostmap(benchmark::State& st) {
  const auto g = SampleGrid();
  for (auto _ : st) benchmark::DoNotOptimize(nav::build_costmap(g));
}
BENCHMARK(BM_BuildCostmap)->Unit(benchmark::kMillisecond);

void BM_AStarAcrossRoom(benchmark::State& st) {
  const auto cm = nav::build_costmap(SampleGrid());
  for (auto _ : st) benchmark::DoNotOptimize(nav::plan_global(cm, {1.0, 1.0, 0.0}, {9.0, 9.0, 0.0}));
}
BENCHMARK(BM_AStarAcrossRoom)->Unit(benchmark::kMillisecond);

void BM_DwaQuery(benchmark::State& st) {
  const auto cm = nav::build_costmap(SampleGrid());
  const auto path = nav::plan_global(cm, {1.0, 1.0, 0.0}, {9.0, 9.0, 0.0});
  const nav::DwaState s{{1.0, 1.0, 0.5}, 0.2, 0.0};
  for (auto _ : st) benchmark::DoNotOptimize(nav::plan_local(cm, s, path, {}));
}
BENCHMARK(BM_DwaQuery)->Unit(benchmark::kMicrosecond);

void BM_AmclUpdate(benchmark::State& st) {
  const localize::LikelihoodField field(SampleGrid());
  const auto scan = sensing::raycast_scan(testing::SampleWorld(), {2.5, 2.5, 0.0}, {}, 1);
  auto ps = localize::init_particles({2.5, 2.5, 0.0}, {0.2, 0.2, 0.1}, static_cast<int>(st.range(0)), 3);
  for (auto _ : st) {
    localize::motion_update(ps, {0.01, 0.0, 0.0}, {}, 5);
    benchmark::DoNotOptimize(localize::measurement_update(ps, scan, field));
  }
}
BENCHMARK(BM_AmclUpdate)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SlamTick(benchmark::State& st) {
  const auto w = testing::SampleWorld();
  auto slam = mapping::make_slam_state({}, {2.5, 2.5, 0.0});
  std::uint64_t k = 0;
  double x = 2.5;
  for (auto _ : st) {
    const double dx = (k % 40 < 20) ? 0.02 : -0.02;
    x += dx;
    const auto scan = sensing::raycast_scan(w, {x, 2.5, 0.0}, {}, ++k);
    benchmark::DoNotOptimize(mapping::slam_tick(slam, geom::Transform2D{dx, 0.0, 0.0}, scan));
  }
}
BENCHMARK(BM_SlamTick)->Unit(benchmark::kMillisecond);

// One simulated second of closed-loop mapping per iteration; the
// real-time factor is 1 s divided by the reported time.
void BM_SimSecond(benchmark::State& st) {
  runtime::Sim sim(runtime::parse_scenario(testing::SampleScenarioText()));
  sim.run_for(5.0);
  for (auto _ : st) sim.run_for(1.0);
  st.counters["rtf"] = benchmark::Counter(static_cast<double>(st.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "netvis/barnes_hut.hpp"
#include "netvis/hier_layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/render.hpp"
#include "netvis/synth.hpp"
#include "netvis/xml_io.hpp"

namespace netvis {
namespace {

void BM_BuildHierarchy(benchmark::State& state) {
  auto s = generate_topology(SynthParams{.devices = static_cast<std::size_t>(state.range(0)), .seed = 1});
  for (auto _ : state) benchmark::DoNotOptimize(build_hierarchy(s, GroupingConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildHierarchy)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_ViewportQuery(benchmark::State& state) {
  auto s = generate_topology(SynthParams{.devices = static_cast<std::size_t>(state.range(0)), .seed = 2});
  auto tree = build_hierarchy(s, GroupingConfig{});
  LayoutParams p;
  p.iterations = 50;
  auto layout = *layout_hierarchy(s, tree, p, *make_force_directed_layout());
  SceneIndex scene(s, tree, layout);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0, layout.width);
  std::uniform_real_distribution<double> zoom(-3, 1);
  for (auto _ : state) {
    Viewport v;
    v.center = {pos(rng), pos(rng)};
    v.scale = std::pow(10.0, zoom(rng));
    benchmark::DoNotOptimize(viewport_query(scene, v, ExpansionState{}));
  }
}
BENCHMARK(BM_ViewportQuery)->Arg(10000)->Arg(50000)->Unit(benchmark::kMicrosecond);

void BM_BarnesHutForces(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10000);
  std::vector<Point> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& pt : pts) pt = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(repulsive_forces(pts, 50.0, 0.7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BarnesHutForces)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ParseTopology(benchmark::State& state) {
  auto doc = serialize_topology(generate_topology(SynthParams{.devices = static_cast<std::size_t>(state.range(0)),
                                                              .seed = 5}));
  for (auto _ : state) benchmark::DoNotOptimize(parse_topology(doc));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(doc.size()));
}
BENCHMARK(BM_ParseTopology)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace netvis

BENCHMARK_MAIN();

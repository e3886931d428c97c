#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "netvis/layout.hpp"
#include "netvis/synth.hpp"

namespace netvis {
namespace {

LayoutGraph path_graph(std::size_t n) {
  LayoutGraph g;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back("n" + std::to_string(1000 + i));
  for (std::uint32_t i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
  return g;
}

LayoutGraph random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LayoutGraph g;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back("r" + std::to_string(i));
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  while (g.edges.size() < m) {
    auto a = static_cast<std::uint32_t>(rng() % n);
    auto b = static_cast<std::uint32_t>(rng() % n);
    if (a == b || !seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
    g.edges.push_back({a, b, 1.0});
  }
  return g;
}

LayoutParams quick_params() {
  LayoutParams p;
  p.iterations = 80;
  p.width = 2000;
  p.height = 1500;
  p.seed = 7;
  return p;
}

// Hop distances from `seeds` over the undirected graph, by breadth-first search.
std::vector<int> hop_distance(const LayoutGraph& g, const std::vector<std::uint32_t>& seeds) {
  std::vector<std::vector<std::uint32_t>> adj(g.node_count());
  for (const auto& e : g.edges) {
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  std::vector<int> dist(g.node_count(), -1);
  std::deque<std::uint32_t> queue;
  for (auto s : seeds) {
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

TEST(Registry, BuiltinsAndDuplicates) {
  auto registry = LayoutRegistry::with_builtins();
  EXPECT_EQ(registry.names(), (std::vector<std::string>{"fdp-bh", "grid"}));
  EXPECT_NE(registry.find("fdp-bh"), nullptr);
  EXPECT_EQ(registry.find("stress"), nullptr);
  auto again = registry.register_algorithm(make_grid_layout());
  ASSERT_FALSE(again);
  EXPECT_EQ(again.error().code, LayoutErrorCode::kDuplicateName);

  LayoutRegistry empty;
  EXPECT_TRUE(empty.names().empty());
  ASSERT_TRUE(empty.register_algorithm(make_force_directed_layout()));
  EXPECT_EQ(empty.names(), std::vector<std::string>{"fdp-bh"});
}

TEST(ComputeLayout, EmptyGraph) {
  auto r = compute_layout(LayoutGraph{}, LayoutParams{});
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->positions.empty());
}

TEST(ComputeLayout, TwoNodeEquilibriumNearIdealLength) {
  auto g = path_graph(2);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    LayoutParams p;
    p.seed = seed;
    auto r = compute_layout(g, p);
    ASSERT_TRUE(r);
    double k = p.edge_length_for(2);
    EXPECT_DOUBLE_EQ(r->ideal_edge_length, k);
    double d = distance(r->positions.at(DeviceId(g.node_ids[0])), r->positions.at(DeviceId(g.node_ids[1])));
    EXPECT_GE(d, 0.5 * k) << seed;
    EXPECT_LE(d, 2.0 * k) << seed;
  }
}

TEST(ComputeLayout, DeterministicAndInsideBounds) {
  auto g = random_graph(400, 600, 3);
  auto p = quick_params();
  auto a = compute_layout(g, p);
  auto b = compute_layout(g, p);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(*a, *b);
  for (const auto& [id, pos] : a->positions) {
    EXPECT_TRUE(std::isfinite(pos.x) && std::isfinite(pos.y));
    EXPECT_GE(pos.x, 0.0);
    EXPECT_LE(pos.x, p.width);
    EXPECT_GE(pos.y, 0.0);
    EXPECT_LE(pos.y, p.height);
  }
  p.seed = 8;
  auto c = compute_layout(g, p);
  ASSERT_TRUE(c);
  EXPECT_NE(a->positions, c->positions);
}

TEST(ComputeLayout, InternalParallelismMatchesSequential) {
  // Above the threading threshold forces are accumulated on several workers.
  auto g = random_graph(5000, 6000, 4);
  auto p = quick_params();
  p.iterations = 3;
  auto a = compute_layout(g, p);
  auto b = compute_layout(g, p);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->positions, b->positions);
}

TEST(ComputeLayout, ConnectedPairsSitCloserThanRandomPairs) {
  auto s = generate_topology(SynthParams{.devices = 500, .seed = 12});
  auto dg = make_device_graph(s);
  auto r = compute_layout(dg.graph, LayoutParams{});
  ASSERT_TRUE(r);
  std::vector<Point> pos;
  for (const auto& id : dg.graph.node_ids) pos.push_back(r->positions.at(DeviceId(id)));
  double connected = 0;
  for (const auto& e : dg.graph.edges) connected += distance(pos[e.source], pos[e.target]);
  connected /= static_cast<double>(dg.graph.edges.size());
  std::mt19937_64 rng(1);
  double random = 0;
  const int samples = 20000;
  for (int i = 0; i < samples; ++i) random += distance(pos[rng() % pos.size()], pos[rng() % pos.size()]);
  random /= samples;
  EXPECT_LT(connected, random);
}

TEST(ComputeLayout, RejectsInvalidInput) {
  auto g = path_graph(3);
  LayoutParams p;
  p.cooling = 1.0;
  EXPECT_EQ(compute_layout(g, p).error().code, LayoutErrorCode::kInvalidParams);
  p = LayoutParams{};
  p.theta = 1.5;
  EXPECT_FALSE(compute_layout(g, p));
  p = LayoutParams{};
  p.width = std::nan("");
  EXPECT_FALSE(compute_layout(g, p));
  g.edges[0].weight = std::nan("");
  EXPECT_EQ(compute_layout(g, LayoutParams{}).error().code, LayoutErrorCode::kNonFiniteInput);
}

TEST(ForceDirected, DisplacementCapShrinksEveryIteration) {
  // run(i + 1) continues run(i) by one step, so the per-node gap between the
  // two is that step's displacement, capped by T0 * cooling^i.
  auto g = random_graph(60, 90, 5);
  auto algo = make_force_directed_layout();
  LayoutParams p = quick_params();
  PlacementHints hints;
  const double t0 = 25.0;
  hints.temperature = t0;
  std::vector<Point> previous;
  double previous_max = INFINITY;
  for (unsigned i = 0; i <= 30; ++i) {
    p.iterations = i;
    auto pos = algo->place(g, p, &hints);
    ASSERT_TRUE(pos);
    if (i > 0) {
      const double cap = t0 * std::pow(p.cooling, i - 1);
      double max_step = 0;
      for (std::size_t n = 0; n < pos->size(); ++n) max_step = std::max(max_step, distance((*pos)[n], previous[n]));
      EXPECT_LE(max_step, cap * (1 + 1e-9)) << i;
      EXPECT_GT(max_step, 0.5 * cap) << i;
      EXPECT_LT(cap, previous_max);
      previous_max = cap;
    }
    previous = *pos;
  }
}

TEST(Grid, RowMajorByIdAndDeterministic) {
  LayoutGraph g;
  g.node_ids = {"c", "a", "d", "b"};
  LayoutParams p;
  p.width = 200;
  p.height = 200;
  auto r = compute_layout(g, p, *make_grid_layout());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->positions.at(DeviceId("a")), (Point{50, 50}));
  EXPECT_EQ(r->positions.at(DeviceId("b")), (Point{150, 50}));
  EXPECT_EQ(r->positions.at(DeviceId("c")), (Point{50, 150}));
  EXPECT_EQ(r->positions.at(DeviceId("d")), (Point{150, 150}));
  EXPECT_EQ(r->algorithm, "grid");
}

TEST(Quality, Definitions) {
  LayoutGraph g = path_graph(2);
  LayoutResult r;
  r.ideal_edge_length = 40;
  r.positions[DeviceId(g.node_ids[0])] = {10, 10};
  r.positions[DeviceId(g.node_ids[1])] = {10, 50};
  auto q = layout_quality(g, r);
  EXPECT_DOUBLE_EQ(q.mean_edge_ratio, 1.0);
  EXPECT_EQ(q.overlap_count, 0u);

  LayoutGraph many = path_graph(9);
  LayoutResult same;
  same.ideal_edge_length = 1;
  for (const auto& id : many.node_ids) same.positions[DeviceId(id)] = {3.5, 3.5};
  EXPECT_EQ(layout_quality(many, same).overlap_count, 9u * 8u / 2u);
}

TEST(Quality, OverlapCountMatchesPairScan) {
  auto g = random_graph(300, 10, 9);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 40);
  LayoutResult r;
  r.ideal_edge_length = 1;
  std::vector<Point> pts;
  for (const auto& id : g.node_ids) {
    pts.push_back({u(rng), u(rng)});
    r.positions[DeviceId(id)] = pts.back();
  }
  std::uint64_t want = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) want += distance(pts[i], pts[j]) < 1.0;
  }
  EXPECT_EQ(layout_quality(g, r).overlap_count, want);
}

TEST(PositionTable, SortedById) {
  LayoutResult r;
  r.positions[DeviceId("b")] = {1, 2};
  r.positions[DeviceId("a")] = {3.5, 4};
  EXPECT_EQ(format_position_table(r), "a 3.5 4\nb 1 2\n");
}

struct IncrementalFixture {
  NetworkSnapshot snapshot = generate_topology(SynthParams{.devices = 400, .links = 480, .seed = 31});
  LayoutParams params = quick_params();
  DeviceGraph graph = make_device_graph(snapshot);
  LayoutResult base = *compute_layout(graph.graph, params);
};

TEST(Incremental, ZeroEditsReturnsPrevious) {
  IncrementalFixture f;
  auto r = incremental_layout(f.base, f.graph, {}, f.params);
  ASSERT_TRUE(r);
  EXPECT_EQ(*r, f.base);
}

TEST(Incremental, VersionMismatchIsRejected) {
  IncrementalFixture f;
  EditOp op;
  op.payload = MoveNode{f.snapshot.devices.begin()->first, Point{1, 1}};
  std::vector<EditOp> edits = {op};
  auto r = incremental_layout(f.base, f.graph, edits, f.params);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, LayoutErrorCode::kVersionMismatch);
}

TEST(Incremental, MoveNodePinsExactlyAndLeavesFarNodes) {
  IncrementalFixture f;
  const DeviceId target = std::next(f.snapshot.devices.begin(), 17)->first;
  EditOp op;
  op.payload = MoveNode{target, Point{123.5, 456.25}};
  auto next = apply_edit(f.snapshot, op);
  ASSERT_TRUE(next);
  auto graph = make_device_graph(*next, &f.snapshot);
  std::vector<EditOp> edits = {op};
  auto r = incremental_layout(f.base, graph, edits, f.params);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->positions.at(target), (Point{123.5, 456.25}));
  auto dist = hop_distance(graph.graph, {*graph.find(target)});
  for (std::uint32_t i = 0; i < graph.graph.node_count(); ++i) {
    DeviceId id(graph.graph.node_ids[i]);
    if (dist[i] < 0 || dist[i] >= 3) EXPECT_EQ(r->positions.at(id), f.base.positions.at(id)) << id;
  }
}

TEST(Incremental, AddLinkMovesOnlyTheTwoHopNeighbourhood) {
  IncrementalFixture f;
  // Two devices at least six hops apart.
  const auto& g = f.graph.graph;
  auto from_first = hop_distance(g, {0});
  std::uint32_t far = 0;
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    if (from_first[i] >= 6) {
      far = i;
      break;
    }
  }
  ASSERT_NE(far, 0u);
  const Device& da = f.snapshot.devices.at(DeviceId(g.node_ids[0]));
  const Device& db = f.snapshot.devices.at(DeviceId(g.node_ids[far]));
  EditOp op;
  op.payload = AddLink{LinkId("new-link"), da.interfaces.front(), db.interfaces.front()};
  auto next = apply_edit(f.snapshot, op);
  ASSERT_TRUE(next);
  auto graph = make_device_graph(*next, &f.snapshot);
  std::vector<EditOp> edits = {op};
  auto r = incremental_layout(f.base, graph, edits, f.params);
  ASSERT_TRUE(r);

  auto dist = hop_distance(graph.graph, {*graph.find(da.id), *graph.find(db.id)});
  std::size_t changed = 0;
  std::size_t neighbourhood = 0;
  for (std::uint32_t i = 0; i < graph.graph.node_count(); ++i) {
    DeviceId id(graph.graph.node_ids[i]);
    bool near = dist[i] >= 0 && dist[i] <= 2;
    neighbourhood += near;
    if (r->positions.at(id) != f.base.positions.at(id)) {
      ++changed;
      EXPECT_TRUE(near) << id;
    }
  }
  EXPECT_GT(changed, 0u);
  EXPECT_LE(changed, neighbourhood);
}

TEST(Incremental, RandomSingleEditsStayInsideTheNeighbourhood) {
  IncrementalFixture f;
  std::mt19937_64 rng(4);
  auto prev_snapshot = f.snapshot;
  auto prev_layout = f.base;
  for (int step = 0; step < 25; ++step) {
    auto op = testing::random_valid_edit(prev_snapshot, rng);
    auto next = apply_edit(prev_snapshot, op);
    ASSERT_TRUE(next);
    auto graph = make_device_graph(*next, &prev_snapshot);
    std::vector<EditOp> edits = {op};
    auto r = incremental_layout(prev_layout, graph, edits, f.params);
    ASSERT_TRUE(r);
    std::vector<std::uint32_t> seeds;
    for (const auto& d : layout_footprint(prev_snapshot, op)) seeds.push_back(*graph.find(d));
    auto dist = hop_distance(graph.graph, seeds);
    for (std::uint32_t i = 0; i < graph.graph.node_count(); ++i) {
      DeviceId id(graph.graph.node_ids[i]);
      if (r->positions.at(id) != prev_layout.positions.at(id)) EXPECT_TRUE(dist[i] >= 0 && dist[i] <= 2) << id;
    }
    prev_snapshot = std::move(*next);
    prev_layout = std::move(*r);
  }
}

TEST(WithinHops, MatchesBreadthFirstSearch) {
  auto g = random_graph(200, 260, 6);
  std::vector<std::uint32_t> seeds = {3, 77};
  auto dist = hop_distance(g, seeds);
  for (unsigned hops = 0; hops <= 3; ++hops) {
    auto mask = within_hops(g, seeds, hops);
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
      EXPECT_EQ(mask[i] != 0, dist[i] >= 0 && dist[i] <= static_cast<int>(hops)) << i;
    }
  }
}

TEST(DeviceGraph, ParallelLinksCollapseIntoWeightedEdges) {
  auto s = testing::small_network();
  EditOp op;
  op.payload = AddLink{LinkId("l6"), InterfaceId("d1-i1"), InterfaceId("d2-i3")};
  auto next = apply_edit(s, op);
  ASSERT_TRUE(next);
  auto dg = make_device_graph(*next);
  EXPECT_EQ(dg.graph.node_count(), 6u);
  EXPECT_EQ(dg.graph.edges.size(), 5u);
  double total = 0;
  for (const auto& e : dg.graph.edges) total += e.weight;
  EXPECT_EQ(total, 6.0);
  EXPECT_EQ(dg.link_endpoints.size(), 6u);
}

}  // namespace
}  // namespace netvis

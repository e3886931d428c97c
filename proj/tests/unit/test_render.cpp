#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "netvis/render.hpp"
#include "netvis/synth.hpp"
#include "oracles.hpp"

namespace netvis {
namespace {

using testing::check_delta;
using testing::check_render_set;

struct Scene {
  NetworkSnapshot snapshot;
  ClusterTree tree;
  HierarchyLayout layout;
  std::unique_ptr<SceneIndex> index;

  Scene(NetworkSnapshot s, GroupingConfig cfg) : snapshot(std::move(s)), tree(build_hierarchy(snapshot, cfg)) {
    LayoutParams p;
    p.iterations = 60;
    layout = *layout_hierarchy(snapshot, tree, p, *make_force_directed_layout());
    index = std::make_unique<SceneIndex>(snapshot, tree, layout);
  }

  RenderSet query(const Viewport& v, const ExpansionState& state = {}) const {
    auto r = viewport_query(*index, v, state);
    if (!r) throw std::runtime_error(r.error().message);
    return *r;
  }
  Viewport whole() const { return fit_viewport(layout.width, layout.height, 1024, 768); }
};

GroupingConfig click_policy() {
  GroupingConfig cfg;
  cfg.expand_policy = ExpandPolicy::kClick;
  return cfg;
}

std::set<std::string> cluster_ids(const RenderSet& rs) {
  std::set<std::string> out;
  for (const auto& c : rs.clusters) out.insert(c.id.str());
  return out;
}

ExpansionState expanded(std::initializer_list<const char*> ids) {
  ExpansionState s;
  for (const char* id : ids) s.expanded.insert(ClusterId(id));
  return s;
}

TEST(ViewportQuery, ZoomedOutClickPolicyShowsLevelZeroAndItsMetaEdges) {
  Scene scene(generate_topology(SynthParams{.devices = 2000, .seed = 3}), click_policy());
  auto rs = scene.query(scene.whole());
  std::set<std::string> level0;
  for (auto c : scene.tree.level(0)) level0.insert(scene.tree.cluster(c).id.str());
  EXPECT_EQ(cluster_ids(rs), level0);
  EXPECT_TRUE(rs.devices.empty());
  EXPECT_TRUE(rs.edges.empty());
  EXPECT_EQ(rs.meta_edges, compute_meta_edges(scene.snapshot, scene.tree, 0));
  for (const auto& c : rs.clusters) EXPECT_EQ(c.level, 0u);
}

TEST(ViewportQuery, EmptyRegionGivesEmptySet) {
  Scene scene(testing::small_network(), GroupingConfig{});
  Viewport far;
  far.center = {-1e7, -1e7};
  far.scale = 0.5;
  auto rs = scene.query(far);
  EXPECT_EQ(rs.element_count(), 0u);
}

TEST(ViewportQuery, ExpandingARootShowsItsChildrenInstead) {
  Scene scene(testing::small_network(), click_policy());
  auto rs = scene.query(scene.whole(), expanded({"ip:10.0.0.0/8"}));
  EXPECT_EQ(cluster_ids(rs), (std::set<std::string>{"ip:10.1.0.0/16", "ip:10.2.0.0/16", "unassigned@0"}));
}

TEST(ViewportQuery, ExpandingALeafShowsItsDevices) {
  Scene scene(testing::small_network(), click_policy());
  auto rs = scene.query(scene.whole(), expanded({"ip:10.0.0.0/8", "ip:10.1.0.0/16", "ip:10.1.0.0/24"}));
  std::set<std::string> devices;
  for (const auto& d : rs.devices) devices.insert(d.id.str());
  EXPECT_EQ(devices, (std::set<std::string>{"d1", "d2"}));
  ASSERT_EQ(rs.edges.size(), 1u);
  EXPECT_EQ(rs.edges[0].id, LinkId("l1"));
  EXPECT_FALSE(cluster_ids(rs).contains("ip:10.1.0.0/24"));
  EXPECT_TRUE(cluster_ids(rs).contains("ip:10.1.9.0/24"));
  EXPECT_TRUE(check_render_set(rs, 2000).empty());
}

TEST(ViewportQuery, ExpandThenCollapseRestoresTheSet) {
  Scene scene(testing::small_network(), click_policy());
  ExpansionState none;
  auto before = scene.query(scene.whole(), none);
  auto open = expand(scene.tree, ClusterId("ip:10.0.0.0/8"), none);
  ASSERT_TRUE(open);
  auto during = scene.query(scene.whole(), *open);
  EXPECT_NE(before, during);
  auto closed = collapse(scene.tree, ClusterId("ip:10.0.0.0/8"), *open);
  ASSERT_TRUE(closed);
  EXPECT_EQ(scene.query(scene.whole(), *closed), before);
}

TEST(ViewportQuery, ZoomPolicyOpensCloudsAsTheViewNarrows) {
  GroupingConfig cfg;
  cfg.expand_policy = ExpandPolicy::kZoom;
  Scene scene(generate_topology(SynthParams{.devices = 3000, .seed = 5}), cfg);
  auto far = scene.query(scene.whole());
  Viewport close = scene.whole();
  const auto& leaf = scene.tree.cluster(scene.tree.level(scene.tree.leaf_level()).front());
  close.center = scene.layout.cluster_position[*scene.tree.find(leaf.id)];
  close.scale = scene.layout.cluster_region[*scene.tree.find(leaf.id)].width() / 600;
  auto near = scene.query(close);
  EXPECT_TRUE(far.devices.empty());
  EXPECT_FALSE(near.devices.empty());
  EXPECT_GT(detail_level(*scene.index, close), detail_level(*scene.index, scene.whole()));
}

TEST(ViewportQuery, BoundHoldsOverRandomViewports) {
  GroupingConfig cfg;
  cfg.max_render_elements = 400;
  Scene scene(generate_topology(SynthParams{.devices = 6000, .seed = 9}), cfg);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0, scene.layout.width);
  std::uniform_real_distribution<double> zoom(-3, 1.5);
  for (int i = 0; i < 100; ++i) {
    Viewport v;
    v.center = {pos(rng), pos(rng)};
    v.scale = std::pow(10.0, zoom(rng));
    ExpansionState state;
    if (i % 3 == 0) state.expanded.insert(scene.tree.cluster(scene.tree.level(0)[rng() % scene.tree.level(0).size()]).id);
    auto rs = scene.query(v, state);
    auto failures = check_render_set(rs, cfg.max_render_elements);
    EXPECT_TRUE(failures.empty()) << i << ": " << failures.front();
    EXPECT_EQ(rs, scene.query(v, state));
  }
}

TEST(ViewportQuery, BudgetCoarsensInsteadOfTruncating) {
  GroupingConfig cfg;
  cfg.max_render_elements = 60;
  cfg.expand_policy = ExpandPolicy::kClick;
  Scene scene(generate_topology(SynthParams{.devices = 3000, .seed = 4}), cfg);
  ExpansionState all;
  for (const auto& c : scene.tree.clusters()) all.expanded.insert(c.id);
  auto rs = scene.query(scene.whole(), all);
  EXPECT_LE(rs.element_count(), 60u);
  // Every device shown belongs to a leaf that is fully shown.
  std::map<std::uint32_t, std::size_t> shown;
  for (const auto& d : rs.devices) ++shown[scene.tree.leaf_of(*scene.tree.device_ordinal(d.id))];
  for (const auto& [leaf, count] : shown) EXPECT_EQ(count, scene.tree.cluster(leaf).device_count);
  bool any_budget_closed = false;
  for (const auto& c : rs.clusters) any_budget_closed = any_budget_closed || c.expanded;
  EXPECT_TRUE(any_budget_closed);
}

TEST(ViewportQuery, IncompleteSceneIsMissingLayout) {
  auto s = testing::small_network();
  auto tree = build_hierarchy(s, GroupingConfig{});
  HierarchyLayout empty;
  SceneIndex index(s, tree, empty);
  auto r = viewport_query(index, Viewport{}, {});
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, LodErrorCode::kMissingLayout);
}

TEST(Viewport, Validity) {
  EXPECT_TRUE(is_valid(Viewport{}));
  Viewport v;
  v.scale = 0;
  EXPECT_FALSE(is_valid(v));
  v.scale = std::nan("");
  EXPECT_FALSE(is_valid(v));
  v = Viewport{};
  v.pixel_width = -5;
  EXPECT_FALSE(is_valid(v));
  v = Viewport{};
  v.center.x = INFINITY;
  EXPECT_FALSE(is_valid(v));
  auto fit = fit_viewport(10000, 10000, 1000, 500);
  EXPECT_EQ(fit.center, (Point{5000, 5000}));
  EXPECT_DOUBLE_EQ(fit.scale, 20);
  Rect b = fit.bounds();
  EXPECT_LE(b.min_x, 0);
  EXPECT_GE(b.max_x, 10000);
  EXPECT_DOUBLE_EQ(b.min_y, 0);
}

TEST(RenderDelta, IdenticalSetsGiveAnEmptyDelta) {
  Scene scene(testing::small_network(), GroupingConfig{});
  auto rs = scene.query(scene.whole());
  auto d = render_delta(rs, rs);
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.size(), 0u);
}

TEST(RenderDelta, OneAddedDevice) {
  RenderSet prev;
  prev.devices.push_back({DeviceId("a"), {1, 1}, DeviceKind::kHost, "a"});
  RenderSet next = prev;
  next.devices.push_back({DeviceId("b"), {2, 2}, DeviceKind::kRouter, "b"});
  auto d = render_delta(prev, next);
  ASSERT_EQ(d.added_devices.size(), 1u);
  EXPECT_EQ(d.added_devices[0].id, DeviceId("b"));
  EXPECT_EQ(d.size(), 1u);
  EXPECT_TRUE(d.removed_devices.empty());
  EXPECT_TRUE(d.moved_devices.empty());
  EXPECT_EQ(apply_delta(prev, d), next);
}

RenderSet random_set(std::mt19937_64& rng) {
  RenderSet rs;
  rs.snapshot_version = rng() % 5;
  rs.layout_version = rng() % 5;
  std::vector<ClusterId> clusters;
  for (int i = 0; i < 12; ++i) {
    if (rng() % 2) continue;
    ClusterId id("c" + std::to_string(10 + i));
    clusters.push_back(id);
    rs.clusters.push_back({id, static_cast<std::uint32_t>(rng() % 3), {double(rng() % 3), 0}, rng() % 3 + 1,
                           rng() % 4 == 0, "c"});
  }
  std::vector<DeviceId> devices;
  for (int i = 0; i < 12; ++i) {
    if (rng() % 2) continue;
    DeviceId id("d" + std::to_string(10 + i));
    devices.push_back(id);
    rs.devices.push_back({id, {double(rng() % 2), double(rng() % 2)}, DeviceKind::kHost, "n"});
  }
  for (int i = 0; i < 10 && devices.size() > 1; ++i) {
    if (rng() % 2) continue;
    rs.edges.push_back({LinkId("e" + std::to_string(i)), devices[rng() % devices.size()], devices[0]});
  }
  for (std::size_t a = 0; a < clusters.size(); ++a) {
    for (std::size_t b = a + 1; b < clusters.size(); ++b) {
      if (rng() % 3) continue;
      rs.meta_edges.push_back({clusters[a], clusters[b], rng() % 3 + 1, {}});
    }
  }
  return rs;
}

TEST(RenderDelta, RandomPairsReconstructTheNextSet) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    auto prev = random_set(rng);
    auto next = random_set(rng);
    auto d = render_delta(prev, next);
    auto failures = check_delta(prev, next, d);
    EXPECT_TRUE(failures.empty()) << failures.front();
  }
}

TEST(RenderDelta, RandomViewportWalkReconstructs) {
  Scene scene(generate_topology(SynthParams{.devices = 2500, .seed = 15}), GroupingConfig{});
  std::mt19937_64 rng(3);
  Viewport v = scene.whole();
  RenderSet client = scene.query(v);
  for (int i = 0; i < 60; ++i) {
    v.center.x += std::uniform_real_distribution<double>(-1500, 1500)(rng);
    v.center.y += std::uniform_real_distribution<double>(-1500, 1500)(rng);
    v.scale *= std::pow(2.0, std::uniform_real_distribution<double>(-1.5, 1.5)(rng));
    v.scale = std::clamp(v.scale, 0.01, 50.0);
    auto next = scene.query(v);
    auto d = render_delta(client, next);
    auto failures = check_delta(client, next, d);
    EXPECT_TRUE(failures.empty()) << failures.front();
    client = apply_delta(client, d);
    EXPECT_EQ(client, next);
  }
}

}  // namespace
}  // namespace netvis

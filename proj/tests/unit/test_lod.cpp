#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "netvis/lod.hpp"
#include "netvis/synth.hpp"
#include "oracles.hpp"

namespace netvis {
namespace {

using testing::check_clustering;

Device device_at(const char* id, std::optional<Ipv4Address> ip, std::optional<GeoPoint> geo = std::nullopt) {
  Device d;
  d.id = DeviceId(id);
  d.name = id;
  d.mgmt_ip = ip;
  d.geo = geo;
  return d;
}

NetworkSnapshot devices_only(std::vector<Device> devices) {
  SnapshotBuilder b;
  for (auto& d : devices) b.add_device(std::move(d));
  return *std::move(b).build();
}

GroupingConfig prefix_levels(std::vector<double> levels) {
  GroupingConfig cfg;
  cfg.levels = std::move(levels);
  return cfg;
}

TEST(BuildHierarchy, SameSixteenShareACluster) {
  auto s = devices_only({device_at("a", Ipv4Address(10, 1, 2, 3)), device_at("b", Ipv4Address(10, 1, 9, 9))});
  auto tree = build_hierarchy(s, prefix_levels({16}));
  ASSERT_EQ(tree.level(0).size(), 1u);
  const auto& c = tree.cluster(tree.level(0).front());
  EXPECT_EQ(c.label, "10.1.0.0/16");
  EXPECT_EQ(std::get<PrefixKey>(c.key), (PrefixKey{Ipv4Address(10, 1, 0, 0), 16}));
  EXPECT_EQ(c.device_count, 2u);
}

TEST(BuildHierarchy, DifferentSixteensSplit) {
  auto s = devices_only({device_at("a", Ipv4Address(10, 1, 2, 3)), device_at("b", Ipv4Address(10, 2, 0, 1))});
  auto tree = build_hierarchy(s, prefix_levels({16}));
  EXPECT_EQ(tree.level(0).size(), 2u);
  EXPECT_NE(tree.cluster_at(0, 0), tree.cluster_at(1, 0));
}

TEST(BuildHierarchy, GeoCellIndicesFloorCoordinates) {
  auto s = devices_only({device_at("a", std::nullopt, GeoPoint{40.7, -74.0}),
                         device_at("b", std::nullopt, GeoPoint{-0.5, 179.99})});
  GroupingConfig cfg = GroupingConfig::geo_defaults();
  cfg.levels = {1};
  auto tree = build_hierarchy(s, cfg);
  const auto& a = tree.cluster(tree.cluster_at(0, 0));
  auto key = std::get<GeoCellKey>(a.key);
  EXPECT_EQ(key.lat_index, 40);
  EXPECT_EQ(key.lon_index, -74);
  EXPECT_EQ(a.label, "cell(40,-74)@1°");
  auto kb = std::get<GeoCellKey>(tree.cluster(tree.cluster_at(1, 0)).key);
  EXPECT_EQ(kb.lat_index, -1);
  EXPECT_EQ(kb.lon_index, 179);
}

TEST(BuildHierarchy, DevicesWithoutTheAttributeAreUnassigned) {
  auto s = devices_only({device_at("a", Ipv4Address(10, 0, 0, 1)), device_at("b", std::nullopt),
                         device_at("c", std::nullopt)});
  auto tree = build_hierarchy(s, GroupingConfig{});
  for (std::uint32_t level = 0; level < 3; ++level) {
    auto c = tree.cluster_at(1, level);
    EXPECT_TRUE(tree.cluster(c).unassigned());
    EXPECT_EQ(tree.cluster(c).label, "unassigned");
    EXPECT_EQ(c, tree.cluster_at(2, level));
  }
  EXPECT_TRUE(check_clustering(s, tree).empty());
}

TEST(BuildHierarchy, RandomTopologiesPartitionAndRefine) {
  for (std::uint64_t seed : {1u, 2u}) {
    auto s = generate_topology(SynthParams{.devices = 3000, .seed = seed, .ip_fraction = 0.9, .geo_fraction = 0.85});
    for (const auto& cfg : {GroupingConfig::ip_prefix_defaults(), GroupingConfig::geo_defaults()}) {
      auto tree = build_hierarchy(s, cfg);
      auto failures = check_clustering(s, tree);
      EXPECT_TRUE(failures.empty()) << failures.size() << " failures, first: " << failures.front();
    }
  }
}

TEST(BuildHierarchy, UniformRandomAddressesAndCells) {
  std::mt19937_64 rng(77);
  std::vector<Device> devices;
  for (int i = 0; i < 2000; ++i) {
    std::string id = "dev" + std::to_string(i);
    std::optional<Ipv4Address> ip;
    std::optional<GeoPoint> geo;
    if (rng() % 10) ip = Ipv4Address(static_cast<std::uint32_t>(rng()));
    if (rng() % 10) {
      geo = GeoPoint{static_cast<double>(static_cast<std::int64_t>(rng() % 180000001) - 90000000) / 1e6,
                     static_cast<double>(static_cast<std::int64_t>(rng() % 360000001) - 180000000) / 1e6};
    }
    devices.push_back(device_at(id.c_str(), ip, geo));
  }
  auto s = devices_only(devices);
  GroupingConfig ip = prefix_levels({4, 12, 20, 28});
  GroupingConfig geo = GroupingConfig::geo_defaults();
  geo.levels = {30, 5, 0.5, 0.05};
  for (const auto& cfg : {ip, geo, GroupingConfig::ip_prefix_defaults(), GroupingConfig::geo_defaults()}) {
    ASSERT_TRUE(validate(cfg));
    auto failures = check_clustering(s, build_hierarchy(s, cfg));
    EXPECT_TRUE(failures.empty()) << failures.front();
  }
}

TEST(BuildHierarchy, Deterministic) {
  auto s = generate_topology(SynthParams{.devices = 800, .seed = 3});
  auto a = build_hierarchy(s, GroupingConfig{});
  auto b = build_hierarchy(s, GroupingConfig{});
  ASSERT_EQ(a.clusters().size(), b.clusters().size());
  for (std::size_t i = 0; i < a.clusters().size(); ++i) {
    EXPECT_EQ(a.clusters()[i].id, b.clusters()[i].id);
    EXPECT_EQ(a.clusters()[i].members, b.clusters()[i].members);
    EXPECT_EQ(a.clusters()[i].children, b.clusters()[i].children);
  }
}

TEST(GroupingConfig, Validation) {
  EXPECT_TRUE(validate(GroupingConfig::ip_prefix_defaults()));
  EXPECT_TRUE(validate(GroupingConfig::geo_defaults()));
  EXPECT_EQ(GroupingConfig::geo_defaults().levels, (std::vector<double>{10, 1, 0.1}));
  EXPECT_FALSE(validate(prefix_levels({})));
  EXPECT_FALSE(validate(prefix_levels({16, 8})));
  EXPECT_FALSE(validate(prefix_levels({8, 8})));
  EXPECT_FALSE(validate(prefix_levels({33})));
  EXPECT_FALSE(validate(prefix_levels({8.5})));
  GroupingConfig geo = GroupingConfig::geo_defaults();
  geo.levels = {10, 3};
  EXPECT_FALSE(validate(geo));
  geo.levels = {1, 10};
  EXPECT_FALSE(validate(geo));
  geo.levels = {0.0000005};
  EXPECT_FALSE(validate(geo));
  geo.levels = {-1};
  EXPECT_FALSE(validate(geo));
  GroupingConfig zero;
  zero.max_render_elements = 0;
  EXPECT_FALSE(validate(zero));
}

TEST(GroupingConfig, KeyDistinguishesConfigs) {
  auto a = GroupingConfig::ip_prefix_defaults();
  auto b = a;
  EXPECT_EQ(a.key(), b.key());
  b.levels = {8, 16};
  EXPECT_NE(a.key(), b.key());
  EXPECT_NE(a.key(), GroupingConfig::geo_defaults().key());
}

NetworkSnapshot two_groups_with_links(int cross, int intra) {
  SnapshotBuilder b;
  auto add = [&](const std::string& id, Ipv4Address ip, int ifaces) {
    Device d;
    d.id = DeviceId(id);
    d.name = id;
    d.mgmt_ip = ip;
    b.add_device(d);
    for (int i = 0; i < ifaces; ++i) {
      b.add_interface(Interface{InterfaceId(id + "-" + std::to_string(i)), d.id, "e", {}, {}});
    }
  };
  add("a1", Ipv4Address(10, 1, 0, 1), 8);
  add("a2", Ipv4Address(10, 1, 0, 2), 8);
  add("b1", Ipv4Address(10, 2, 0, 1), 8);
  int n = 0;
  for (int i = 0; i < cross; ++i) {
    b.add_link(LinkId("x" + std::to_string(n++)), InterfaceId("a1-" + std::to_string(i)),
               InterfaceId("b1-" + std::to_string(i)));
  }
  for (int i = 0; i < intra; ++i) {
    b.add_link(LinkId("y" + std::to_string(n++)), InterfaceId("a1-" + std::to_string(7 - i)),
               InterfaceId("a2-" + std::to_string(i)));
  }
  return *std::move(b).build();
}

TEST(MetaEdges, ThreeCrossLinksMakeOneEdge) {
  auto s = two_groups_with_links(3, 0);
  auto tree = build_hierarchy(s, prefix_levels({16}));
  auto edges = compute_meta_edges(s, tree, 0);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].a, ClusterId("ip:10.1.0.0/16"));
  EXPECT_EQ(edges[0].b, ClusterId("ip:10.2.0.0/16"));
  EXPECT_EQ(edges[0].multiplicity, 3u);
  EXPECT_EQ(edges[0].sample_links, (std::vector<LinkId>{LinkId("x0"), LinkId("x1"), LinkId("x2")}));
}

TEST(MetaEdges, IntraClusterLinksProduceNone) {
  auto s = two_groups_with_links(0, 4);
  auto tree = build_hierarchy(s, prefix_levels({16}));
  EXPECT_TRUE(compute_meta_edges(s, tree, 0).empty());
}

TEST(MetaEdges, SamplesAreCapped) {
  auto s = two_groups_with_links(8, 2);
  auto tree = build_hierarchy(s, prefix_levels({16}));
  auto edges = compute_meta_edges(s, tree, 0);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].multiplicity, 8u);
  EXPECT_EQ(edges[0].sample_links.size(), kMetaEdgeSamples);
  EXPECT_TRUE(check_clustering(s, tree).empty());
}

TEST(Expansion, ExpandCollapseErrors) {
  auto s = testing::small_network();
  auto tree = build_hierarchy(s, GroupingConfig{});
  ExpansionState state;
  auto r = expand(tree, ClusterId("nope"), state);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, LodErrorCode::kUnknownCluster);
  auto e = expand(tree, ClusterId("ip:10.0.0.0/8"), state);
  ASSERT_TRUE(e);
  EXPECT_TRUE(e->expanded.contains(ClusterId("ip:10.0.0.0/8")));
  auto again = expand(tree, ClusterId("ip:10.0.0.0/8"), *e);
  ASSERT_FALSE(again);
  EXPECT_EQ(again.error().code, LodErrorCode::kAlreadyExpanded);
  auto c = collapse(tree, ClusterId("ip:10.0.0.0/8"), *e);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, state);
  auto not_expanded = collapse(tree, ClusterId("ip:10.0.0.0/8"), *c);
  ASSERT_FALSE(not_expanded);
  EXPECT_EQ(not_expanded.error().code, LodErrorCode::kNotExpanded);
}

TEST(Labels, TextForms) {
  EXPECT_EQ(cluster_label(PrefixKey{Ipv4Address(10, 1, 0, 0), 16}), "10.1.0.0/16");
  EXPECT_EQ(cluster_label(GeoCellKey{51, -1, 0.1}), "cell(51,-1)@0.1°");
  EXPECT_EQ(cluster_label(UnassignedKey{}), "unassigned");
}

TEST(Policies, TextRoundTrip) {
  for (auto m : {GroupingMethod::kIpPrefix, GroupingMethod::kGeo}) EXPECT_EQ(parse_grouping_method(to_string(m)), m);
  for (auto p : {ExpandPolicy::kClick, ExpandPolicy::kZoom, ExpandPolicy::kBoth}) {
    EXPECT_EQ(parse_expand_policy(to_string(p)), p);
  }
  EXPECT_EQ(to_string(GroupingMethod::kIpPrefix), "ip-prefix");
  EXPECT_FALSE(parse_grouping_method("community"));
}

}  // namespace
}  // namespace netvis

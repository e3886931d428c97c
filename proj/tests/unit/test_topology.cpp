#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "netvis/topology.hpp"

namespace netvis {
namespace {

using testing::small_network;

bool has_violation(const std::vector<Violation>& vs, Rule rule, const std::string& id) {
  for (const auto& v : vs) {
    if (v.rule == rule && v.id == id) return true;
  }
  return false;
}

Device make_device(const char* id) {
  Device d;
  d.id = DeviceId(id);
  d.name = id;
  return d;
}

Interface make_iface(const char* id, const char* device) {
  Interface i;
  i.id = InterfaceId(id);
  i.device = DeviceId(device);
  i.name = id;
  return i;
}

TEST(Validate, EmptySnapshotIsValid) { EXPECT_TRUE(validate(NetworkSnapshot{}).empty()); }

TEST(Validate, FixtureIsValid) { EXPECT_TRUE(validate(small_network()).empty()); }

TEST(Validate, DanglingLinkEndpointNamesTheLink) {
  SnapshotBuilder b;
  b.add_device(make_device("d1")).add_interface(make_iface("i1", "d1"));
  b.add_link(LinkId("l1"), InterfaceId("i1"), InterfaceId("if-99"));
  auto s = std::move(b).build_unchecked();
  auto vs = validate(s);
  EXPECT_TRUE(has_violation(vs, Rule::kDanglingReference, "l1"));
}

TEST(Validate, LatitudeOutOfRangeNamesTheDevice) {
  auto d = make_device("d1");
  d.geo = GeoPoint{95.0, 0.0};
  SnapshotBuilder b;
  b.add_device(d);
  auto built = std::move(b).build();
  ASSERT_FALSE(built);
  EXPECT_TRUE(has_violation(built.error(), Rule::kGeoOutOfRange, "d1"));
}

TEST(Validate, GeoBoundariesAreInclusive) {
  EXPECT_TRUE((GeoPoint{90, 180}).in_range());
  EXPECT_TRUE((GeoPoint{-90, -180}).in_range());
  EXPECT_FALSE((GeoPoint{90.000001, 0}).in_range());
  EXPECT_FALSE((GeoPoint{0, -180.000001}).in_range());
  EXPECT_FALSE((GeoPoint{std::nan(""), 0}).in_range());
}

TEST(Validate, SelfLoopIsRejected) {
  SnapshotBuilder b;
  b.add_device(make_device("d1")).add_interface(make_iface("i1", "d1"));
  b.add_link(LinkId("l1"), InterfaceId("i1"), InterfaceId("i1"));
  auto vs = validate(std::move(b).build_unchecked());
  EXPECT_TRUE(has_violation(vs, Rule::kSelfLoop, "l1"));
}

TEST(Validate, DuplicateEndpointPairIsRejected) {
  SnapshotBuilder b;
  b.add_device(make_device("d1")).add_interface(make_iface("i1", "d1"));
  b.add_device(make_device("d2")).add_interface(make_iface("i2", "d2"));
  b.add_link(LinkId("l1"), InterfaceId("i1"), InterfaceId("i2"));
  b.add_link(LinkId("l2"), InterfaceId("i2"), InterfaceId("i1"));
  auto vs = validate(std::move(b).build_unchecked());
  EXPECT_TRUE(has_violation(vs, Rule::kDuplicateLink, "l2"));
}

TEST(Validate, NonCanonicalLinkIsRejected) {
  auto s = small_network();
  auto& l = s.links.at(LinkId("l1"));
  std::swap(l.a, l.b);
  EXPECT_TRUE(has_violation(validate(s), Rule::kNonCanonicalLink, "l1"));
}

TEST(Validate, InterfaceOwnerMustListIt) {
  auto s = small_network();
  s.devices.at(DeviceId("d1")).interfaces.pop_back();
  EXPECT_FALSE(validate(s).empty());
}

TEST(Validate, UtilizationAndVlanTagRanges) {
  auto s = small_network();
  s.links.at(LinkId("l1")).stats.utilization_pct = 100.5;
  EXPECT_TRUE(has_violation(validate(s), Rule::kUtilizationOutOfRange, "l1"));
  s = small_network();
  s.vlans.at(VlanId("v10")).tag = 4095;
  EXPECT_TRUE(has_violation(validate(s), Rule::kVlanTagOutOfRange, "v10"));
  s.vlans.at(VlanId("v10")).tag = 0;
  EXPECT_TRUE(has_violation(validate(s), Rule::kVlanTagOutOfRange, "v10"));
}

TEST(Validate, NonFinitePinIsRejected) {
  auto s = small_network();
  s.pins[DeviceId("d1")] = Point{std::numeric_limits<double>::infinity(), 0};
  EXPECT_TRUE(has_violation(validate(s), Rule::kNonFinitePin, "d1"));
}

TEST(Validate, InvalidTextIsRejected) {
  auto s = small_network();
  s.devices.at(DeviceId("d2")).name = std::string("bad\x01name");
  EXPECT_TRUE(has_violation(validate(s), Rule::kInvalidText, "d2"));
}

TEST(Validate, MapKeyMustMatchEntityId) {
  auto s = small_network();
  auto d = s.devices.at(DeviceId("d6"));
  d.id = DeviceId("other");
  s.devices.at(DeviceId("d6")) = d;
  EXPECT_FALSE(validate(s).empty());
}

TEST(Validate, ValidationDoesNotMutate) {
  auto s = small_network();
  s.links.at(LinkId("l1")).stats.utilization_pct = 140;
  auto copy = s;
  (void)validate(s);
  EXPECT_TRUE(structurally_equal(s, copy));
  EXPECT_EQ(s.version, copy.version);
}

TEST(Link, MakeLinkCanonicalizesEndpoints) {
  auto l = make_link(LinkId("l"), InterfaceId("z"), InterfaceId("a"));
  EXPECT_EQ(l.a, InterfaceId("a"));
  EXPECT_EQ(l.b, InterfaceId("z"));
  EXPECT_TRUE(l.same_endpoints(make_link(LinkId("m"), InterfaceId("a"), InterfaceId("z"))));
}

TEST(Snapshot, LookupsAndOwners) {
  auto s = small_network();
  EXPECT_NE(s.find(DeviceId("d1")), nullptr);
  EXPECT_EQ(s.find(DeviceId("nope")), nullptr);
  EXPECT_EQ(s.owner(InterfaceId("d4-i2")), DeviceId("d4"));
  EXPECT_FALSE(s.owner(InterfaceId("zz")));
  EXPECT_EQ(s.find_link_between(InterfaceId("d2-i1"), InterfaceId("d1-i1")), LinkId("l1"));
  EXPECT_FALSE(s.find_link_between(InterfaceId("d2-i1"), InterfaceId("d5-i1")));
}

TEST(Snapshot, StructuralEqualityIgnoresVersion) {
  auto a = small_network();
  auto b = small_network();
  b.version = 42;
  EXPECT_TRUE(structurally_equal(a, b));
  b.pins[DeviceId("d1")] = Point{1, 2};
  EXPECT_FALSE(structurally_equal(a, b));
}

TEST(Text, RepresentableText) {
  EXPECT_TRUE(is_representable_text("plain"));
  EXPECT_TRUE(is_representable_text("caf\xc3\xa9\tline\n"));
  EXPECT_FALSE(is_representable_text("\xc3"));
  EXPECT_FALSE(is_representable_text("\xff\xfe"));
  EXPECT_FALSE(is_representable_text(std::string("a\0b", 3)));
  EXPECT_FALSE(is_representable_text("\x1b[0m"));
}

TEST(DeviceKind, TextRoundTrip) {
  for (auto k : {DeviceKind::kRouter, DeviceKind::kSwitch, DeviceKind::kHost, DeviceKind::kPeripheral}) {
    EXPECT_EQ(parse_device_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_device_kind("toaster"));
}

}  // namespace
}  // namespace netvis

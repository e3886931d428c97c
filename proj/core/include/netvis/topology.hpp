#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/geometry.hpp"
#include "netvis/ids.hpp"
#include "netvis/ipv4.hpp"
#include "netvis/result.hpp"

namespace netvis {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

enum class DeviceKind { kRouter, kSwitch, kHost, kPeripheral };

std::string_view to_string(DeviceKind kind);
std::optional<DeviceKind> parse_device_kind(std::string_view text);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool in_range() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Device {
  DeviceId id;
  std::string name;
  DeviceKind kind = DeviceKind::kHost;
  std::optional<Ipv4Address> mgmt_ip;
  std::optional<GeoPoint> geo;
  std::optional<std::string> isp_tag;
  std::map<std::string, std::string> attributes;
  std::vector<InterfaceId> interfaces;

  friend bool operator==(const Device&, const Device&) = default;
};

struct Interface {
  InterfaceId id;
  DeviceId device;
  std::string name;
  std::optional<Ipv4Prefix> ip;
  std::optional<std::uint64_t> speed_bps;

  friend bool operator==(const Interface&, const Interface&) = default;
};

struct LinkStats {
  std::optional<double> utilization_pct;
  std::optional<Timestamp> last_updated;

  friend bool operator==(const LinkStats&, const LinkStats&) = default;
};

/// Undirected interface-to-interface link. Links built through make_link()
/// or the builder are canonical: a < b.
struct Link {
  LinkId id;
  InterfaceId a;
  InterfaceId b;
  LinkStats stats;

  bool same_endpoints(const Link& other) const {
    return (a == other.a && b == other.b) || (a == other.b && b == other.a);
  }
  friend bool operator==(const Link&, const Link&) = default;
};

Link make_link(LinkId id, InterfaceId x, InterfaceId y, LinkStats stats = {});

struct Vlan {
  VlanId id;
  std::uint16_t tag = 1;
  std::string name;
  std::set<InterfaceId> members;

  friend bool operator==(const Vlan&, const Vlan&) = default;
};

/// Immutable-by-convention value: every edit produces a new snapshot.
/// `pins` holds user-placed device positions; they are part of the state
/// that edits change and that persistence restores.
struct NetworkSnapshot {
  std::uint64_t version = 0;
  std::map<DeviceId, Device> devices;
  std::map<InterfaceId, Interface> interfaces;
  std::map<LinkId, Link> links;
  std::map<VlanId, Vlan> vlans;
  std::map<DeviceId, Point> pins;

  const Device* find(const DeviceId& id) const;
  const Interface* find(const InterfaceId& id) const;
  const Link* find(const LinkId& id) const;
  const Vlan* find(const VlanId& id) const;

  /// Owning device of an interface, if the interface exists.
  std::optional<DeviceId> owner(const InterfaceId& iface) const;
  std::optional<LinkId> find_link_between(const InterfaceId& x, const InterfaceId& y) const;
};

/// Equality of everything except `version`.
bool structurally_equal(const NetworkSnapshot& lhs, const NetworkSnapshot& rhs);

enum class Rule {
  kEmptyId,
  kDanglingReference,
  kInterfaceOwnerMismatch,
  kDuplicateInterfaceEntry,
  kUnlistedInterface,
  kGeoOutOfRange,
  kPrefixLengthOutOfRange,
  kSelfLoop,
  kNonCanonicalLink,
  kDuplicateLink,
  kUtilizationOutOfRange,
  kVlanTagOutOfRange,
  kNonFinitePin,
  kInvalidText,
  kKeyMismatch,
};

std::string_view to_string(Rule rule);

struct Violation {
  Rule rule;
  std::string id;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty iff every snapshot invariant holds. Violations are ordered by
/// entity kind, then id.
std::vector<Violation> validate(const NetworkSnapshot& snapshot);

/// True when `text` is valid UTF-8 without XML-illegal control characters.
bool is_representable_text(std::string_view text);

/// Programmatic construction path for non-XML sources and tests.
/// add_interface() appends to the owning device's interface list.
class SnapshotBuilder {
 public:
  SnapshotBuilder& add_device(Device device);
  SnapshotBuilder& add_interface(Interface iface);
  SnapshotBuilder& add_link(LinkId id, InterfaceId x, InterfaceId y, LinkStats stats = {});
  SnapshotBuilder& add_vlan(Vlan vlan);
  SnapshotBuilder& pin(DeviceId device, Point position);

  Expected<NetworkSnapshot, std::vector<Violation>> build() &&;
  /// Returns the snapshot without validating it. Tests use this to
  /// construct deliberately broken inputs.
  NetworkSnapshot build_unchecked() &&;

 private:
  NetworkSnapshot snapshot_;
  std::vector<Violation> conflicts_;
};

}  // namespace netvis

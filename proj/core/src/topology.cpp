#include "netvis/topology.hpp"

#include <cmath>
#include <utility>

namespace netvis {

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::kRouter: return "router";
    case DeviceKind::kSwitch: return "switch";
    case DeviceKind::kHost: return "host";
    case DeviceKind::kPeripheral: return "peripheral";
  }
  return "host";
}

std::optional<DeviceKind> parse_device_kind(std::string_view text) {
  if (text == "router") return DeviceKind::kRouter;
  if (text == "switch") return DeviceKind::kSwitch;
  if (text == "host") return DeviceKind::kHost;
  if (text == "peripheral") return DeviceKind::kPeripheral;
  return std::nullopt;
}

bool GeoPoint::in_range() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

Link make_link(LinkId id, InterfaceId x, InterfaceId y, LinkStats stats) {
  if (y < x) std::swap(x, y);
  return Link{std::move(id), std::move(x), std::move(y), std::move(stats)};
}

const Device* NetworkSnapshot::find(const DeviceId& id) const {
  auto it = devices.find(id);
  return it == devices.end() ? nullptr : &it->second;
}
const Interface* NetworkSnapshot::find(const InterfaceId& id) const {
  auto it = interfaces.find(id);
  return it == interfaces.end() ? nullptr : &it->second;
}
const Link* NetworkSnapshot::find(const LinkId& id) const {
  auto it = links.find(id);
  return it == links.end() ? nullptr : &it->second;
}
const Vlan* NetworkSnapshot::find(const VlanId& id) const {
  auto it = vlans.find(id);
  return it == vlans.end() ? nullptr : &it->second;
}

std::optional<DeviceId> NetworkSnapshot::owner(const InterfaceId& iface) const {
  const Interface* found = find(iface);
  if (!found) return std::nullopt;
  return found->device;
}

std::optional<LinkId> NetworkSnapshot::find_link_between(const InterfaceId& x,
                                                         const InterfaceId& y) const {
  for (const auto& [id, link] : links) {
    if ((link.a == x && link.b == y) || (link.a == y && link.b == x)) return id;
  }
  return std::nullopt;
}

bool structurally_equal(const NetworkSnapshot& lhs, const NetworkSnapshot& rhs) {
  return lhs.devices == rhs.devices && lhs.interfaces == rhs.interfaces &&
         lhs.links == rhs.links && lhs.vlans == rhs.vlans && lhs.pins == rhs.pins;
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::kEmptyId: return "EmptyId";
    case Rule::kDanglingReference: return "DanglingReference";
    case Rule::kInterfaceOwnerMismatch: return "InterfaceOwnerMismatch";
    case Rule::kDuplicateInterfaceEntry: return "DuplicateInterfaceEntry";
    case Rule::kUnlistedInterface: return "UnlistedInterface";
    case Rule::kGeoOutOfRange: return "GeoOutOfRange";
    case Rule::kPrefixLengthOutOfRange: return "PrefixLengthOutOfRange";
    case Rule::kSelfLoop: return "SelfLoop";
    case Rule::kNonCanonicalLink: return "NonCanonicalLink";
    case Rule::kDuplicateLink: return "DuplicateLink";
    case Rule::kUtilizationOutOfRange: return "UtilizationOutOfRange";
    case Rule::kVlanTagOutOfRange: return "VlanTagOutOfRange";
    case Rule::kNonFinitePin: return "NonFinitePin";
    case Rule::kInvalidText: return "InvalidText";
    case Rule::kKeyMismatch: return "KeyMismatch";
  }
  return "Unknown";
}

bool is_representable_text(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
      ++i;
      continue;
    }
    int extra = 0;
    std::uint32_t cp = 0;
    if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + static_cast<std::size_t>(extra) >= text.size()) return false;
    for (int k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    if (cp == 0xfffe || cp == 0xffff) return false;
    i += extra + 1;
  }
  return true;
}

namespace {

void check_text(std::vector<Violation>& out, const std::string& id, std::string_view field,
                std::string_view text) {
  if (!is_representable_text(text)) {
    out.push_back({Rule::kInvalidText, id, std::string(field) + " is not representable text"});
  }
}

}  // namespace

std::vector<Violation> validate(const NetworkSnapshot& s) {
  std::vector<Violation> out;

  for (const auto& [key, device] : s.devices) {
    const std::string& id = key.str();
    if (key != device.id) out.push_back({Rule::kKeyMismatch, id, "map key differs from device id"});
    if (key.empty()) out.push_back({Rule::kEmptyId, id, "device id is empty"});
    check_text(out, id, "id", id);
    check_text(out, id, "name", device.name);
    if (device.isp_tag) check_text(out, id, "isp", *device.isp_tag);
    for (const auto& [k, v] : device.attributes) {
      check_text(out, id, "attribute key", k);
      check_text(out, id, "attribute value", v);
      if (k.empty()) out.push_back({Rule::kEmptyId, id, "attribute key is empty"});
    }
    if (device.geo && !device.geo->in_range()) {
      out.push_back({Rule::kGeoOutOfRange, id, "latitude/longitude out of range"});
    }
    std::set<InterfaceId> seen;
    for (const auto& iface_id : device.interfaces) {
      if (!seen.insert(iface_id).second) {
        out.push_back({Rule::kDuplicateInterfaceEntry, id, "interface " + iface_id.str() + " listed twice"});
      }
      const Interface* iface = s.find(iface_id);
      if (!iface) {
        out.push_back({Rule::kDanglingReference, id, "interface " + iface_id.str() + " does not exist"});
      } else if (iface->device != device.id) {
        out.push_back({Rule::kInterfaceOwnerMismatch, id,
                       "interface " + iface_id.str() + " belongs to " + iface->device.str()});
      }
    }
  }

  for (const auto& [key, iface] : s.interfaces) {
    const std::string& id = key.str();
    if (key != iface.id) out.push_back({Rule::kKeyMismatch, id, "map key differs from interface id"});
    if (key.empty()) out.push_back({Rule::kEmptyId, id, "interface id is empty"});
    check_text(out, id, "id", id);
    check_text(out, id, "name", iface.name);
    const Device* owner = s.find(iface.device);
    if (!owner) {
      out.push_back({Rule::kDanglingReference, id, "owner device " + iface.device.str() + " does not exist"});
    } else {
      bool listed = false;
      for (const auto& listed_id : owner->interfaces) listed = listed || listed_id == iface.id;
      if (!listed) out.push_back({Rule::kUnlistedInterface, id, "not listed by its owner device"});
    }
    if (iface.ip && iface.ip->length > 32) {
      out.push_back({Rule::kPrefixLengthOutOfRange, id, "prefix length above 32"});
    }
  }

  std::set<std::pair<InterfaceId, InterfaceId>> pairs;
  for (const auto& [key, link] : s.links) {
    const std::string& id = key.str();
    if (key != link.id) out.push_back({Rule::kKeyMismatch, id, "map key differs from link id"});
    if (key.empty()) out.push_back({Rule::kEmptyId, id, "link id is empty"});
    check_text(out, id, "id", id);
    const Interface* a = s.find(link.a);
    const Interface* b = s.find(link.b);
    if (!a || !b) {
      out.push_back({Rule::kDanglingReference, id, "link endpoint does not exist"});
    }
    if (link.a == link.b || (a && b && a->device == b->device)) {
      out.push_back({Rule::kSelfLoop, id, "link endpoints on the same device"});
    }
    if (link.b < link.a) out.push_back({Rule::kNonCanonicalLink, id, "endpoints not in canonical order"});
    auto pair = link.a < link.b ? std::pair{link.a, link.b} : std::pair{link.b, link.a};
    if (!pairs.insert(pair).second) {
      out.push_back({Rule::kDuplicateLink, id, "interface pair already linked"});
    }
    if (link.stats.utilization_pct) {
      double u = *link.stats.utilization_pct;
      if (!(u >= 0.0 && u <= 100.0)) {
        out.push_back({Rule::kUtilizationOutOfRange, id, "utilization outside [0,100]"});
      }
    }
  }

  for (const auto& [key, vlan] : s.vlans) {
    const std::string& id = key.str();
    if (key != vlan.id) out.push_back({Rule::kKeyMismatch, id, "map key differs from vlan id"});
    if (key.empty()) out.push_back({Rule::kEmptyId, id, "vlan id is empty"});
    check_text(out, id, "id", id);
    check_text(out, id, "name", vlan.name);
    if (vlan.tag < 1 || vlan.tag > 4094) {
      out.push_back({Rule::kVlanTagOutOfRange, id, "tag outside [1,4094]"});
    }
    for (const auto& member : vlan.members) {
      if (!s.find(member)) {
        out.push_back({Rule::kDanglingReference, id, "member " + member.str() + " does not exist"});
      }
    }
  }

  for (const auto& [device, pos] : s.pins) {
    if (!s.find(device)) {
      out.push_back({Rule::kDanglingReference, device.str(), "pinned device does not exist"});
    }
    if (!std::isfinite(pos.x) || !std::isfinite(pos.y)) {
      out.push_back({Rule::kNonFinitePin, device.str(), "pinned position not finite"});
    }
  }
  return out;
}

SnapshotBuilder& SnapshotBuilder::add_device(Device device) {
  DeviceId id = device.id;
  if (!snapshot_.devices.emplace(id, std::move(device)).second) {
    conflicts_.push_back({Rule::kKeyMismatch, id.str(), "duplicate device id"});
  }
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_interface(Interface iface) {
  auto it = snapshot_.devices.find(iface.device);
  if (it != snapshot_.devices.end()) it->second.interfaces.push_back(iface.id);
  InterfaceId id = iface.id;
  if (!snapshot_.interfaces.emplace(id, std::move(iface)).second) {
    conflicts_.push_back({Rule::kKeyMismatch, id.str(), "duplicate interface id"});
  }
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_link(LinkId id, InterfaceId x, InterfaceId y, LinkStats stats) {
  LinkId key = id;
  if (!snapshot_.links.emplace(key, make_link(std::move(id), std::move(x), std::move(y), std::move(stats)))
           .second) {
    conflicts_.push_back({Rule::kKeyMismatch, key.str(), "duplicate link id"});
  }
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_vlan(Vlan vlan) {
  VlanId id = vlan.id;
  if (!snapshot_.vlans.emplace(id, std::move(vlan)).second) {
    conflicts_.push_back({Rule::kKeyMismatch, id.str(), "duplicate vlan id"});
  }
  return *this;
}

SnapshotBuilder& SnapshotBuilder::pin(DeviceId device, Point position) {
  snapshot_.pins[std::move(device)] = position;
  return *this;
}

Expected<NetworkSnapshot, std::vector<Violation>> SnapshotBuilder::build() && {
  auto violations = validate(snapshot_);
  violations.insert(violations.begin(), conflicts_.begin(), conflicts_.end());
  if (!violations.empty()) return unexpected(std::move(violations));
  return std::move(snapshot_);
}

NetworkSnapshot SnapshotBuilder::build_unchecked() && { return std::move(snapshot_); }

}  // namespace netvis

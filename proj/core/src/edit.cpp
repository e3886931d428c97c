#include "netvis/edit.hpp"

#include <cmath>
#include <type_traits>

namespace netvis {

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::kAddLink: return "AddLink";
    case EditKind::kRemoveLink: return "RemoveLink";
    case EditKind::kMoveNode: return "MoveNode";
    case EditKind::kSetDeviceAttr: return "SetDeviceAttr";
    case EditKind::kSetVlanMembership: return "SetVlanMembership";
    case EditKind::kSetGeo: return "SetGeo";
  }
  return "Unknown";
}

std::optional<EditKind> parse_edit_kind(std::string_view text) {
  for (auto kind : {EditKind::kAddLink, EditKind::kRemoveLink, EditKind::kMoveNode,
                    EditKind::kSetDeviceAttr, EditKind::kSetVlanMembership, EditKind::kSetGeo}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(EditErrorCode code) {
  switch (code) {
    case EditErrorCode::kUnknownId: return "UnknownId";
    case EditErrorCode::kDuplicateLink: return "DuplicateLink";
    case EditErrorCode::kSelfLoop: return "SelfLoop";
    case EditErrorCode::kInvalidPayload: return "InvalidPayload";
  }
  return "Unknown";
}

namespace {

Unexpected<EditError> fail(EditErrorCode code, std::string message) {
  return unexpected(EditError{code, std::move(message)});
}

// Each apply_* mutates `next`, which is already a copy of the input.
Status<EditError> apply_op(NetworkSnapshot& next, const AddLink& op) {
  if (op.link.empty()) return fail(EditErrorCode::kInvalidPayload, "AddLink needs a link id");
  if (next.find(op.link)) {
    return fail(EditErrorCode::kInvalidPayload, "link id " + op.link.str() + " already in use");
  }
  const Interface* a = next.find(op.a);
  const Interface* b = next.find(op.b);
  if (!a) return fail(EditErrorCode::kUnknownId, "unknown interface " + op.a.str());
  if (!b) return fail(EditErrorCode::kUnknownId, "unknown interface " + op.b.str());
  if (op.a == op.b || a->device == b->device) {
    return fail(EditErrorCode::kSelfLoop, "both endpoints on device " + a->device.str());
  }
  if (auto existing = next.find_link_between(op.a, op.b)) {
    return fail(EditErrorCode::kDuplicateLink, "interfaces already linked by " + existing->str());
  }
  next.links.emplace(op.link, make_link(op.link, op.a, op.b));
  return ok_status;
}

Status<EditError> apply_op(NetworkSnapshot& next, const RemoveLink& op) {
  if (next.links.erase(op.link) == 0) {
    return fail(EditErrorCode::kUnknownId, "unknown link " + op.link.str());
  }
  return ok_status;
}

Status<EditError> apply_op(NetworkSnapshot& next, const MoveNode& op) {
  if (!next.find(op.device)) return fail(EditErrorCode::kUnknownId, "unknown device " + op.device.str());
  if (!std::isfinite(op.position.x) || !std::isfinite(op.position.y)) {
    return fail(EditErrorCode::kInvalidPayload, "MoveNode coordinates must be finite");
  }
  next.pins[op.device] = op.position;
  return ok_status;
}

Status<EditError> apply_op(NetworkSnapshot& next, const SetDeviceAttr& op) {
  auto it = next.devices.find(op.device);
  if (it == next.devices.end()) return fail(EditErrorCode::kUnknownId, "unknown device " + op.device.str());
  if (op.key.empty() || !is_representable_text(op.key) ||
      (op.value && !is_representable_text(*op.value))) {
    return fail(EditErrorCode::kInvalidPayload, "attribute key/value not representable");
  }
  if (op.value) {
    it->second.attributes[op.key] = *op.value;
  } else {
    it->second.attributes.erase(op.key);
  }
  return ok_status;
}

Status<EditError> apply_op(NetworkSnapshot& next, const SetVlanMembership& op) {
  auto it = next.vlans.find(op.vlan);
  if (it == next.vlans.end()) return fail(EditErrorCode::kUnknownId, "unknown vlan " + op.vlan.str());
  if (!next.find(op.iface)) return fail(EditErrorCode::kUnknownId, "unknown interface " + op.iface.str());
  if (op.member) {
    it->second.members.insert(op.iface);
  } else {
    it->second.members.erase(op.iface);
  }
  return ok_status;
}

Status<EditError> apply_op(NetworkSnapshot& next, const SetGeo& op) {
  auto it = next.devices.find(op.device);
  if (it == next.devices.end()) return fail(EditErrorCode::kUnknownId, "unknown device " + op.device.str());
  if (op.geo && !op.geo->in_range()) {
    return fail(EditErrorCode::kInvalidPayload, "geo coordinates out of range");
  }
  it->second.geo = op.geo;
  return ok_status;
}

}  // namespace

Expected<NetworkSnapshot, EditError> apply_edit(const NetworkSnapshot& snapshot, const EditOp& op) {
  NetworkSnapshot next = snapshot;
  auto status = std::visit([&](const auto& payload) { return apply_op(next, payload); }, op.payload);
  if (!status) return unexpected(std::move(status.error()));
  next.version = snapshot.version + 1;
  return next;
}

Expected<NetworkSnapshot, EditError> replay(const NetworkSnapshot& base, std::span<const EditOp> ops) {
  NetworkSnapshot current = base;
  for (const auto& op : ops) {
    auto next = apply_edit(current, op);
    if (!next) return unexpected(std::move(next.error()));
    current = std::move(*next);
  }
  return current;
}

namespace {

bool same_device_shell(Device a, Device b) {
  // Everything that no edit can change.
  a.attributes.clear();
  b.attributes.clear();
  a.geo.reset();
  b.geo.reset();
  return a == b;
}

EditOp make_op(EditPayload payload) { return EditOp{0, std::move(payload), {}, {}}; }

}  // namespace

Expected<std::vector<EditOp>, DiffError> diff(const NetworkSnapshot& from, const NetworkSnapshot& to) {
  if (from.interfaces != to.interfaces) {
    return unexpected(DiffError{"interface sets differ; not expressible as edits"});
  }
  if (from.devices.size() != to.devices.size()) {
    return unexpected(DiffError{"device sets differ; not expressible as edits"});
  }
  for (auto a = from.devices.begin(), b = to.devices.begin(); a != from.devices.end(); ++a, ++b) {
    if (a->first != b->first || !same_device_shell(a->second, b->second)) {
      return unexpected(DiffError{"device " + a->first.str() + " differs outside the editable surface"});
    }
  }
  if (from.vlans.size() != to.vlans.size()) {
    return unexpected(DiffError{"vlan sets differ; not expressible as edits"});
  }
  for (auto a = from.vlans.begin(), b = to.vlans.begin(); a != from.vlans.end(); ++a, ++b) {
    if (a->first != b->first || a->second.tag != b->second.tag || a->second.name != b->second.name) {
      return unexpected(DiffError{"vlan " + a->first.str() + " differs outside membership"});
    }
  }
  for (const auto& [device, pos] : from.pins) {
    if (!to.pins.contains(device)) {
      return unexpected(DiffError{"pin on " + device.str() + " removed; not expressible as edits"});
    }
  }

  std::vector<EditOp> ops;
  // Removals first so that re-added interface pairs are free again.
  for (const auto& [id, link] : from.links) {
    const Link* other = to.find(id);
    if (!other || !other->same_endpoints(link)) ops.push_back(make_op(RemoveLink{id}));
  }
  for (const auto& [id, link] : to.links) {
    const Link* old = from.find(id);
    if (!old || !old->same_endpoints(link)) {
      if (link.stats != LinkStats{}) {
        return unexpected(DiffError{"new link " + id.str() + " carries stats; not expressible"});
      }
      ops.push_back(make_op(AddLink{id, link.a, link.b}));
    } else if (old->stats != link.stats) {
      return unexpected(DiffError{"stats of link " + id.str() + " differ; not expressible"});
    }
  }
  for (const auto& [id, device] : to.devices) {
    const Device& old = from.devices.at(id);
    for (const auto& [key, value] : old.attributes) {
      if (!device.attributes.contains(key)) ops.push_back(make_op(SetDeviceAttr{id, key, std::nullopt}));
    }
    for (const auto& [key, value] : device.attributes) {
      auto it = old.attributes.find(key);
      if (it == old.attributes.end() || it->second != value) {
        ops.push_back(make_op(SetDeviceAttr{id, key, value}));
      }
    }
  }
  for (const auto& [id, vlan] : to.vlans) {
    const Vlan& old = from.vlans.at(id);
    for (const auto& member : old.members) {
      if (!vlan.members.contains(member)) ops.push_back(make_op(SetVlanMembership{id, member, false}));
    }
    for (const auto& member : vlan.members) {
      if (!old.members.contains(member)) ops.push_back(make_op(SetVlanMembership{id, member, true}));
    }
  }
  for (const auto& [id, device] : to.devices) {
    if (from.devices.at(id).geo != device.geo) ops.push_back(make_op(SetGeo{id, device.geo}));
  }
  for (const auto& [id, pos] : to.pins) {
    auto it = from.pins.find(id);
    if (it == from.pins.end() || !(it->second == pos)) ops.push_back(make_op(MoveNode{id, pos}));
  }
  return ops;
}

std::vector<DeviceId> layout_footprint(const NetworkSnapshot& before, const EditOp& op) {
  std::vector<DeviceId> out;
  auto add_iface_owner = [&](const InterfaceId& iface) {
    if (auto owner = before.owner(iface)) out.push_back(*owner);
  };
  std::visit(
      [&](const auto& payload) {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, AddLink>) {
          add_iface_owner(payload.a);
          add_iface_owner(payload.b);
        } else if constexpr (std::is_same_v<T, RemoveLink>) {
          if (const Link* link = before.find(payload.link)) {
            add_iface_owner(link->a);
            add_iface_owner(link->b);
          }
        } else if constexpr (std::is_same_v<T, MoveNode>) {
          out.push_back(payload.device);
        }
      },
      op.payload);
  return out;
}

}  // namespace netvis

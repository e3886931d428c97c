#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netvis/topology.hpp"

namespace netvis {

struct AddLink {
  LinkId link;
  InterfaceId a;
  InterfaceId b;
  friend bool operator==(const AddLink&, const AddLink&) = default;
};

struct RemoveLink {
  LinkId link;
  friend bool operator==(const RemoveLink&, const RemoveLink&) = default;
};

struct MoveNode {
  DeviceId device;
  Point position;
  friend bool operator==(const MoveNode&, const MoveNode&) = default;
};

/// nullopt value erases the key.
struct SetDeviceAttr {
  DeviceId device;
  std::string key;
  std::optional<std::string> value;
  friend bool operator==(const SetDeviceAttr&, const SetDeviceAttr&) = default;
};

struct SetVlanMembership {
  VlanId vlan;
  InterfaceId iface;
  bool member = true;
  friend bool operator==(const SetVlanMembership&, const SetVlanMembership&) = default;
};

/// nullopt geo clears the device location.
struct SetGeo {
  DeviceId device;
  std::optional<GeoPoint> geo;
  friend bool operator==(const SetGeo&, const SetGeo&) = default;
};

using EditPayload =
    std::variant<AddLink, RemoveLink, MoveNode, SetDeviceAttr, SetVlanMembership, SetGeo>;

enum class EditKind { kAddLink, kRemoveLink, kMoveNode, kSetDeviceAttr, kSetVlanMembership, kSetGeo };

std::string_view to_string(EditKind kind);
std::optional<EditKind> parse_edit_kind(std::string_view text);

struct EditOp {
  std::uint64_t seq = 0;
  EditPayload payload;
  std::string author;
  Timestamp at{};

  EditKind kind() const { return static_cast<EditKind>(payload.index()); }
  /// Same kind and payload; seq, author and timestamp are bookkeeping.
  bool same_effect(const EditOp& other) const { return payload == other.payload; }

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

enum class EditErrorCode { kUnknownId, kDuplicateLink, kSelfLoop, kInvalidPayload };

std::string_view to_string(EditErrorCode code);

struct EditError {
  EditErrorCode code;
  std::string message;
};

/// Pure: returns a new snapshot with version + 1 and the op applied.
Expected<NetworkSnapshot, EditError> apply_edit(const NetworkSnapshot& snapshot, const EditOp& op);

struct DiffError {
  std::string message;
};

/// Ops that turn `from` into a snapshot structurally equal to `to`. Only the
/// editable surface can be expressed (links, attributes, VLAN membership,
/// geo, pins); anything else yields a DiffError.
Expected<std::vector<EditOp>, DiffError> diff(const NetworkSnapshot& from, const NetworkSnapshot& to);

/// Applies ops in order; stops at the first failure.
Expected<NetworkSnapshot, EditError> replay(const NetworkSnapshot& base, std::span<const EditOp> ops);

/// Devices whose position or connectivity an op touches, resolved against
/// the snapshot the op was applied to. Attribute, VLAN and geo edits touch
/// no positions and return an empty list.
std::vector<DeviceId> layout_footprint(const NetworkSnapshot& before, const EditOp& op);

}  // namespace netvis

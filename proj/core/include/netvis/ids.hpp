#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

namespace netvis {

/// Opaque string identifier tagged by entity kind so ids of different kinds
/// cannot be mixed up. Ordering is lexicographic on the underlying string.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}
  explicit Id(std::string_view value) : value_(value) {}
  explicit Id(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend bool operator==(const Id&, const Id&) = default;
  friend auto operator<=>(const Id&, const Id&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

struct DeviceTag;
struct InterfaceTag;
struct LinkTag;
struct VlanTag;
struct ClusterTag;

using DeviceId = Id<DeviceTag>;
using InterfaceId = Id<InterfaceTag>;
using LinkId = Id<LinkTag>;
using VlanId = Id<VlanTag>;
using ClusterId = Id<ClusterTag>;

}  // namespace netvis

template <class Tag>
struct std::hash<netvis::Id<Tag>> {
  std::size_t operator()(const netvis::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

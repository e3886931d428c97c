#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "netvis/ids.hpp"
#include "netvis/ipv4.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

namespace netvis {

enum class GroupingMethod { kIpPrefix, kGeo };
enum class ExpandPolicy { kClick, kZoom, kBoth };

std::string_view to_string(GroupingMethod method);
std::optional<GroupingMethod> parse_grouping_method(std::string_view text);
std::string_view to_string(ExpandPolicy policy);
std::optional<ExpandPolicy> parse_expand_policy(std::string_view text);

struct GroupingConfig {
  GroupingMethod method = GroupingMethod::kIpPrefix;
  /// Prefix lengths (ip-prefix, strictly increasing, each <= 32) or cell
  /// sizes in degrees (geo, strictly decreasing, each an integer multiple of
  /// the next and of 1e-6).
  std::vector<double> levels = {8, 16, 24};
  std::uint32_t max_render_elements = 2000;
  ExpandPolicy expand_policy = ExpandPolicy::kBoth;
  /// On-screen footprint above which zoom policies expand a cloud.
  double auto_expand_px = 150.0;

  static GroupingConfig ip_prefix_defaults();
  static GroupingConfig geo_defaults();

  /// Canonical text form, used as a cache key.
  std::string key() const;

  friend bool operator==(const GroupingConfig&, const GroupingConfig&) = default;
};

struct ConfigError {
  std::string message;
};

Status<ConfigError> validate(const GroupingConfig& config);

struct PrefixKey {
  Ipv4Address network;
  std::uint8_t length = 0;
  friend bool operator==(const PrefixKey&, const PrefixKey&) = default;
};

struct GeoCellKey {
  std::int64_t lat_index = 0;
  std::int64_t lon_index = 0;
  double cell_size = 1.0;
  friend bool operator==(const GeoCellKey&, const GeoCellKey&) = default;
};

struct UnassignedKey {
  friend bool operator==(const UnassignedKey&, const UnassignedKey&) = default;
};

using ClusterKey = std::variant<PrefixKey, GeoCellKey, UnassignedKey>;

inline constexpr std::uint32_t kNoCluster = ~0u;

/// One cloud. Inner clusters record child indices and counts; leaf-level
/// clusters materialize their member devices (as device ordinals, see
/// ClusterTree::devices()).
struct Cluster {
  ClusterId id;
  std::uint32_t level = 0;
  ClusterKey key;
  std::uint32_t parent = kNoCluster;
  std::vector<std::uint32_t> children;
  std::vector<std::uint32_t> members;
  std::uint64_t device_count = 0;
  std::string label;

  bool unassigned() const { return std::holds_alternative<UnassignedKey>(key); }
};

/// Immutable multi-level grouping of one snapshot's devices.
class ClusterTree {
 public:
  const GroupingConfig& config() const { return config_; }
  std::uint32_t level_count() const { return static_cast<std::uint32_t>(by_level_.size()); }
  std::uint32_t leaf_level() const { return level_count() - 1; }
  std::uint64_t snapshot_version() const { return snapshot_version_; }

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const Cluster& cluster(std::uint32_t index) const { return clusters_[index]; }
  const std::vector<std::uint32_t>& level(std::uint32_t level) const { return by_level_[level]; }
  std::optional<std::uint32_t> find(const ClusterId& id) const;

  /// Devices in id order; clusters refer to them by position in this list.
  const std::vector<DeviceId>& devices() const { return devices_; }
  std::optional<std::uint32_t> device_ordinal(const DeviceId& id) const;
  std::uint32_t leaf_of(std::uint32_t device_ordinal) const { return leaf_of_[device_ordinal]; }
  /// Cluster containing the device at `level`.
  std::uint32_t cluster_at(std::uint32_t device_ordinal, std::uint32_t level) const;
  bool is_ancestor(std::uint32_t ancestor, std::uint32_t cluster) const;

 private:
  friend ClusterTree build_hierarchy(const NetworkSnapshot&, const GroupingConfig&);

  GroupingConfig config_;
  std::uint64_t snapshot_version_ = 0;
  std::vector<Cluster> clusters_;
  std::vector<std::vector<std::uint32_t>> by_level_;
  std::unordered_map<ClusterId, std::uint32_t> index_;
  std::vector<DeviceId> devices_;
  std::unordered_map<DeviceId, std::uint32_t> device_index_;
  std::vector<std::uint32_t> leaf_of_;
};

/// Precondition: validate(cfg) succeeds. Devices without the grouping
/// attribute land in the per-level "unassigned" cloud.
ClusterTree build_hierarchy(const NetworkSnapshot& snapshot, const GroupingConfig& cfg);

struct MetaEdge {
  ClusterId a;
  ClusterId b;
  std::uint64_t multiplicity = 0;
  std::vector<LinkId> sample_links;  // up to kMetaEdgeSamples, in id order

  friend bool operator==(const MetaEdge&, const MetaEdge&) = default;
};

inline constexpr std::size_t kMetaEdgeSamples = 5;

/// Inter-cluster link aggregation at one level, sorted by (a, b) with a < b.
std::vector<MetaEdge> compute_meta_edges(const NetworkSnapshot& snapshot, const ClusterTree& tree, std::uint32_t level);

/// Per-session set of explicitly expanded clouds.
struct ExpansionState {
  std::set<ClusterId> expanded;
  friend bool operator==(const ExpansionState&, const ExpansionState&) = default;
};

enum class LodErrorCode { kUnknownCluster, kAlreadyExpanded, kNotExpanded, kMissingLayout };

std::string_view to_string(LodErrorCode code);

struct LodError {
  LodErrorCode code;
  std::string message;
};

Expected<ExpansionState, LodError> expand(const ClusterTree& tree, const ClusterId& id, ExpansionState state);
Expected<ExpansionState, LodError> collapse(const ClusterTree& tree, const ClusterId& id, ExpansionState state);

/// "10.1.0.0/16", "cell(40,-74)@1°", "unassigned".
std::string cluster_label(const ClusterKey& key);

}  // namespace netvis

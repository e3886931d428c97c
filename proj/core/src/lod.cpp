#include "netvis/lod.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "netvis/xml_io.hpp"

namespace netvis {

std::string_view to_string(GroupingMethod method) {
  return method == GroupingMethod::kGeo ? "geo" : "ip-prefix";
}

std::optional<GroupingMethod> parse_grouping_method(std::string_view text) {
  if (text == "ip-prefix") return GroupingMethod::kIpPrefix;
  if (text == "geo") return GroupingMethod::kGeo;
  return std::nullopt;
}

std::string_view to_string(ExpandPolicy policy) {
  switch (policy) {
    case ExpandPolicy::kClick: return "click";
    case ExpandPolicy::kZoom: return "zoom";
    case ExpandPolicy::kBoth: return "both";
  }
  return "both";
}

std::optional<ExpandPolicy> parse_expand_policy(std::string_view text) {
  if (text == "click") return ExpandPolicy::kClick;
  if (text == "zoom") return ExpandPolicy::kZoom;
  if (text == "both") return ExpandPolicy::kBoth;
  return std::nullopt;
}

std::string_view to_string(LodErrorCode code) {
  switch (code) {
    case LodErrorCode::kUnknownCluster: return "UnknownCluster";
    case LodErrorCode::kAlreadyExpanded: return "AlreadyExpanded";
    case LodErrorCode::kNotExpanded: return "NotExpanded";
    case LodErrorCode::kMissingLayout: return "MissingLayout";
  }
  return "Unknown";
}

GroupingConfig GroupingConfig::ip_prefix_defaults() { return GroupingConfig{}; }

GroupingConfig GroupingConfig::geo_defaults() {
  GroupingConfig cfg;
  cfg.method = GroupingMethod::kGeo;
  cfg.levels = {10, 1, 0.1};
  return cfg;
}

std::string GroupingConfig::key() const {
  std::string out(to_string(method));
  out += '|';
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i) out += ',';
    out += format_decimal(levels[i]);
  }
  out += '|' + std::to_string(max_render_elements) + '|' + std::string(to_string(expand_policy)) + '|' +
         format_decimal(auto_expand_px);
  return out;
}

namespace {

constexpr double kMicro = 1e6;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t to_micro(double degrees) { return std::llround(degrees * kMicro); }

}  // namespace

Status<ConfigError> validate(const GroupingConfig& cfg) {
  if (cfg.levels.empty()) return unexpected(ConfigError{"at least one grouping level is required"});
  if (cfg.max_render_elements == 0) return unexpected(ConfigError{"max_render_elements must be positive"});
  if (!(std::isfinite(cfg.auto_expand_px) && cfg.auto_expand_px > 0)) {
    return unexpected(ConfigError{"auto-expand threshold must be positive"});
  }
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    double v = cfg.levels[i];
    if (!std::isfinite(v)) return unexpected(ConfigError{"levels must be finite"});
    if (cfg.method == GroupingMethod::kIpPrefix) {
      if (v < 0 || v > 32 || v != std::floor(v)) {
        return unexpected(ConfigError{"prefix lengths must be integers in [0,32]"});
      }
      if (i && !(v > cfg.levels[i - 1])) return unexpected(ConfigError{"prefix lengths must strictly increase"});
    } else {
      if (!(v > 0) || v > 360) return unexpected(ConfigError{"cell sizes must lie in (0,360]"});
      double micro = v * kMicro;
      if (std::abs(micro - std::round(micro)) > 1e-6 * std::max(1.0, micro) || std::llround(micro) == 0) {
        return unexpected(ConfigError{"cell sizes must be multiples of 1e-6 degrees"});
      }
      if (i) {
        double prev = cfg.levels[i - 1];
        if (!(v < prev)) return unexpected(ConfigError{"cell sizes must strictly decrease"});
        if (to_micro(prev) % to_micro(v) != 0) {
          return unexpected(ConfigError{"each cell size must be an integer multiple of the next finer one"});
        }
      }
    }
  }
  return ok_status;
}

std::string cluster_label(const ClusterKey& key) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PrefixKey>) {
          return k.network.to_string() + "/" + std::to_string(k.length);
        } else if constexpr (std::is_same_v<T, GeoCellKey>) {
          return "cell(" + std::to_string(k.lat_index) + "," + std::to_string(k.lon_index) + ")@" +
                 format_decimal(k.cell_size) + "°";
        } else {
          return "unassigned";
        }
      },
      key);
}

namespace {

std::string cluster_id_text(const ClusterKey& key, std::uint32_t level) {
  return std::visit(
      [&](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PrefixKey>) {
          return "ip:" + k.network.to_string() + "/" + std::to_string(k.length);
        } else if constexpr (std::is_same_v<T, GeoCellKey>) {
          return "geo:" + format_decimal(k.cell_size) + ":" + std::to_string(k.lat_index) + ":" +
                 std::to_string(k.lon_index);
        } else {
          return "unassigned@" + std::to_string(level);
        }
      },
      key);
}

ClusterKey key_for(const Device& device, const GroupingConfig& cfg, std::uint32_t level) {
  if (cfg.method == GroupingMethod::kIpPrefix) {
    if (!device.mgmt_ip) return UnassignedKey{};
    auto length = static_cast<std::uint8_t>(cfg.levels[level]);
    return PrefixKey{device.mgmt_ip->masked(length), length};
  }
  if (!device.geo) return UnassignedKey{};
  // Integer micro-degree arithmetic keeps coarser cells exact unions of
  // finer ones.
  std::int64_t cell = to_micro(cfg.levels[level]);
  return GeoCellKey{floor_div(to_micro(device.geo->lat), cell), floor_div(to_micro(device.geo->lon), cell),
                    cfg.levels[level]};
}

}  // namespace

ClusterTree build_hierarchy(const NetworkSnapshot& snapshot, const GroupingConfig& cfg) {
  ClusterTree tree;
  tree.config_ = cfg;
  tree.snapshot_version_ = snapshot.version;
  const auto levels = static_cast<std::uint32_t>(cfg.levels.size());

  tree.devices_.reserve(snapshot.devices.size());
  std::vector<const Device*> devices;
  devices.reserve(snapshot.devices.size());
  for (const auto& [id, device] : snapshot.devices) {
    tree.device_index_.emplace(id, static_cast<std::uint32_t>(tree.devices_.size()));
    tree.devices_.push_back(id);
    devices.push_back(&device);
  }
  const auto n = static_cast<std::uint32_t>(devices.size());

  // Group device ordinals per level by cluster id; std::map gives id order.
  tree.by_level_.resize(levels);
  std::vector<std::uint32_t> cluster_of_prev(n, kNoCluster);
  std::vector<std::uint32_t> cluster_of(n, kNoCluster);
  for (std::uint32_t level = 0; level < levels; ++level) {
    struct Group {
      ClusterKey key;
      std::vector<std::uint32_t> members;
    };
    std::map<std::string, Group> groups;
    for (std::uint32_t d = 0; d < n; ++d) {
      ClusterKey key = key_for(*devices[d], cfg, level);
      auto [it, inserted] = groups.try_emplace(cluster_id_text(key, level));
      if (inserted) it->second.key = key;
      it->second.members.push_back(d);
    }
    for (auto& [id_text, group] : groups) {
      auto index = static_cast<std::uint32_t>(tree.clusters_.size());
      Cluster cluster;
      cluster.id = ClusterId(id_text);
      cluster.level = level;
      cluster.key = group.key;
      cluster.label = cluster_label(group.key);
      cluster.device_count = group.members.size();
      if (level > 0) {
        cluster.parent = cluster_of_prev[group.members.front()];
        tree.clusters_[cluster.parent].children.push_back(index);
      }
      for (auto d : group.members) cluster_of[d] = index;
      if (level + 1 == levels) cluster.members = std::move(group.members);
      tree.index_.emplace(cluster.id, index);
      tree.by_level_[level].push_back(index);
      tree.clusters_.push_back(std::move(cluster));
    }
    std::swap(cluster_of_prev, cluster_of);
  }
  tree.leaf_of_ = std::move(cluster_of_prev);
  if (levels == 0) tree.leaf_of_.assign(n, kNoCluster);
  return tree;
}

std::optional<std::uint32_t> ClusterTree::find(const ClusterId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> ClusterTree::device_ordinal(const DeviceId& id) const {
  auto it = device_index_.find(id);
  if (it == device_index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ClusterTree::cluster_at(std::uint32_t device_ordinal, std::uint32_t level) const {
  std::uint32_t c = leaf_of_[device_ordinal];
  while (c != kNoCluster && clusters_[c].level > level) c = clusters_[c].parent;
  return c;
}

bool ClusterTree::is_ancestor(std::uint32_t ancestor, std::uint32_t cluster) const {
  for (std::uint32_t c = cluster; c != kNoCluster; c = clusters_[c].parent) {
    if (c == ancestor) return true;
  }
  return false;
}

std::vector<MetaEdge> compute_meta_edges(const NetworkSnapshot& snapshot, const ClusterTree& tree, std::uint32_t level) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, MetaEdge> edges;
  for (const auto& [lid, link] : snapshot.links) {
    auto a = snapshot.owner(link.a);
    auto b = snapshot.owner(link.b);
    if (!a || !b) continue;
    auto da = tree.device_ordinal(*a);
    auto db = tree.device_ordinal(*b);
    if (!da || !db) continue;
    std::uint32_t ca = tree.cluster_at(*da, level);
    std::uint32_t cb = tree.cluster_at(*db, level);
    if (ca == cb) continue;
    // Indices within a level follow id order.
    if (cb < ca) std::swap(ca, cb);
    auto& edge = edges[{ca, cb}];
    if (edge.multiplicity == 0) {
      edge.a = tree.cluster(ca).id;
      edge.b = tree.cluster(cb).id;
    }
    ++edge.multiplicity;
    if (edge.sample_links.size() < kMetaEdgeSamples) edge.sample_links.push_back(lid);
  }
  std::vector<MetaEdge> out;
  out.reserve(edges.size());
  for (auto& [key, edge] : edges) out.push_back(std::move(edge));
  return out;
}

Expected<ExpansionState, LodError> expand(const ClusterTree& tree, const ClusterId& id, ExpansionState state) {
  if (!tree.find(id)) return unexpected(LodError{LodErrorCode::kUnknownCluster, "unknown cluster " + id.str()});
  if (!state.expanded.insert(id).second) {
    return unexpected(LodError{LodErrorCode::kAlreadyExpanded, "cluster " + id.str() + " is already expanded"});
  }
  return state;
}

Expected<ExpansionState, LodError> collapse(const ClusterTree& tree, const ClusterId& id, ExpansionState state) {
  if (!tree.find(id)) return unexpected(LodError{LodErrorCode::kUnknownCluster, "unknown cluster " + id.str()});
  if (state.expanded.erase(id) == 0) {
    return unexpected(LodError{LodErrorCode::kNotExpanded, "cluster " + id.str() + " is not expanded"});
  }
  return state;
}

}  // namespace netvis

#include "netvis/hier_layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace netvis {
namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr double kRegionFraction = 0.5;
constexpr double kRegionCap = 0.1;

// Device ordinal pair for every link, resolved through interface owners.
struct LinkEnds {
  std::uint32_t a;
  std::uint32_t b;
};

std::vector<LinkEnds> resolve_links(const NetworkSnapshot& snapshot, const ClusterTree& tree) {
  std::vector<LinkEnds> out;
  out.reserve(snapshot.links.size());
  for (const auto& [id, link] : snapshot.links) {
    auto ia = snapshot.interfaces.find(link.a);
    auto ib = snapshot.interfaces.find(link.b);
    if (ia == snapshot.interfaces.end() || ib == snapshot.interfaces.end()) continue;
    auto da = tree.device_ordinal(ia->second.device);
    auto db = tree.device_ordinal(ib->second.device);
    if (!da || !db || *da == *db) continue;
    out.push_back({*da, *db});
  }
  return out;
}

struct SiblingGraph {
  std::vector<std::uint32_t> nodes;  // cluster indices or device ordinals
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;
};

LayoutGraph to_layout_graph(const SiblingGraph& sg, const std::vector<std::string>& names) {
  LayoutGraph g;
  g.node_ids = names;
  std::map<std::uint32_t, std::uint32_t> local;
  for (std::uint32_t i = 0; i < sg.nodes.size(); ++i) local.emplace(sg.nodes[i], i);
  for (const auto& [pair, weight] : sg.edges) {
    // Dampen heavy meta-edges so one dense pair does not dominate.
    g.edges.push_back({local.at(pair.first), local.at(pair.second), weight > 1.0 ? 1.0 + std::log(weight) : weight});
  }
  return g;
}

class Builder {
 public:
  Builder(const NetworkSnapshot& snapshot, const ClusterTree& tree, const LayoutParams& params,
          const LayoutAlgorithm& algorithm)
      : snapshot_(snapshot), tree_(tree), params_(params), algorithm_(algorithm) {}

  Expected<HierarchyLayout, LayoutError> run() {
    out_.algorithm = algorithm_.name();
    out_.snapshot_version = snapshot_.version;
    out_.width = params_.width;
    out_.height = params_.height;
    const auto nc = tree_.clusters().size();
    out_.cluster_position.assign(nc, Point{});
    out_.cluster_region.assign(nc, Rect::empty());
    out_.cluster_extent.assign(nc, Rect::empty());
    out_.device_position.assign(tree_.devices().size(), Point{});
    if (tree_.level_count() == 0) return out_;

    build_graphs();

    Rect area{0, 0, params_.width, params_.height};
    if (auto s = place_clusters(top_, area, params_.seed); !s) return unexpected(s.error());
    for (std::uint32_t level = 0; level < tree_.level_count(); ++level) {
      for (auto c : tree_.level(level)) {
        const auto& cluster = tree_.cluster(c);
        if (level == tree_.leaf_level()) {
          if (auto s = place_devices(c); !s) return unexpected(s.error());
        } else {
          if (auto s = place_clusters(inner_[c], out_.cluster_region[c], params_.seed ^ fnv1a(cluster.id.str())); !s) {
            return unexpected(s.error());
          }
        }
      }
    }
    compute_extents(tree_, out_);
    return std::move(out_);
  }

 private:
  void build_graphs() {
    top_.nodes = tree_.level(0);
    inner_.assign(tree_.clusters().size(), {});
    leaf_.assign(tree_.clusters().size(), {});
    for (std::uint32_t c = 0; c < tree_.clusters().size(); ++c) {
      const auto& cluster = tree_.cluster(c);
      if (cluster.level == tree_.leaf_level()) {
        leaf_[c].nodes = cluster.members;
      } else {
        inner_[c].nodes = cluster.children;
      }
    }
    for (const auto& link : resolve_links(snapshot_, tree_)) add_link(link);
  }

  void add_link(const LinkEnds& link) {
    std::uint32_t la = tree_.leaf_of(link.a);
    std::uint32_t lb = tree_.leaf_of(link.b);
    if (la == lb) {
      auto key = std::minmax(link.a, link.b);
      leaf_[la].edges[{key.first, key.second}] += 1.0;
      return;
    }
    // Walk both chains up to the first level where they share a parent.
    std::uint32_t ca = la;
    std::uint32_t cb = lb;
    while (tree_.cluster(ca).parent != tree_.cluster(cb).parent) {
      ca = tree_.cluster(ca).parent;
      cb = tree_.cluster(cb).parent;
    }
    std::uint32_t parent = tree_.cluster(ca).parent;
    auto key = std::minmax(ca, cb);
    SiblingGraph& g = parent == kNoCluster ? top_ : inner_[parent];
    g.edges[{key.first, key.second}] += 1.0;
  }

  LayoutParams sub_params(const Rect& region, std::uint64_t seed) const {
    LayoutParams p = params_;
    p.width = std::max(region.width(), 1e-9);
    p.height = std::max(region.height(), 1e-9);
    p.seed = seed;
    p.ideal_edge_length.reset();
    return p;
  }

  Status<LayoutError> place_clusters(const SiblingGraph& sg, const Rect& region, std::uint64_t seed) {
    if (sg.nodes.empty()) return ok_status;
    std::vector<std::string> names;
    names.reserve(sg.nodes.size());
    for (auto c : sg.nodes) names.push_back(tree_.cluster(c).id.str());
    LayoutGraph g = to_layout_graph(sg, names);
    LayoutParams p = sub_params(region, seed);
    auto placed = algorithm_.place(g, p, nullptr);
    if (!placed) return unexpected(placed.error());
    const double k = p.edge_length_for(sg.nodes.size());
    const double side = std::min(kRegionFraction * k, kRegionCap * std::max(p.width, p.height));
    for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
      Point global{region.min_x + (*placed)[i].x, region.min_y + (*placed)[i].y};
      out_.cluster_position[sg.nodes[i]] = global;
      out_.cluster_region[sg.nodes[i]] = Rect::from_center(global, side, side);
    }
    return ok_status;
  }

  Status<LayoutError> place_devices(std::uint32_t leaf) {
    const SiblingGraph& sg = leaf_[leaf];
    if (sg.nodes.empty()) return ok_status;
    const Rect& region = out_.cluster_region[leaf];
    std::vector<std::string> names;
    names.reserve(sg.nodes.size());
    for (auto d : sg.nodes) names.push_back(tree_.devices()[d].str());
    LayoutGraph g = to_layout_graph(sg, names);
    PlacementHints hints;
    bool any_pin = false;
    hints.initial.assign(sg.nodes.size(), std::nullopt);
    hints.pinned.assign(sg.nodes.size(), 0);
    for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
      auto pin = snapshot_.pins.find(tree_.devices()[sg.nodes[i]]);
      if (pin == snapshot_.pins.end()) continue;
      hints.initial[i] = Point{pin->second.x - region.min_x, pin->second.y - region.min_y};
      hints.pinned[i] = 1;
      any_pin = true;
    }
    auto placed = algorithm_.place(g, sub_params(region, params_.seed ^ fnv1a(tree_.cluster(leaf).id.str())),
                                   any_pin ? &hints : nullptr);
    if (!placed) return unexpected(placed.error());
    for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
      const DeviceId& id = tree_.devices()[sg.nodes[i]];
      auto pin = snapshot_.pins.find(id);
      out_.device_position[sg.nodes[i]] =
          pin != snapshot_.pins.end() ? pin->second : Point{region.min_x + (*placed)[i].x, region.min_y + (*placed)[i].y};
    }
    return ok_status;
  }

 public:
  static void compute_extents(const ClusterTree& tree, HierarchyLayout& out) {
    // Cluster indices grow with level, so a reverse sweep is bottom-up.
    for (std::size_t c = tree.clusters().size(); c-- > 0;) {
      const auto& cluster = tree.cluster(static_cast<std::uint32_t>(c));
      Rect extent = out.cluster_region[c];
      extent.expand(out.cluster_position[c]);
      for (auto d : cluster.members) extent.expand(out.device_position[d]);
      for (auto child : cluster.children) extent.expand(out.cluster_extent[child]);
      out.cluster_extent[c] = extent;
    }
  }

 private:
  const NetworkSnapshot& snapshot_;
  const ClusterTree& tree_;
  const LayoutParams& params_;
  const LayoutAlgorithm& algorithm_;
  HierarchyLayout out_;
  SiblingGraph top_;
  std::vector<SiblingGraph> inner_;
  std::vector<SiblingGraph> leaf_;
};

}  // namespace

LayoutResult HierarchyLayout::to_result(const ClusterTree& tree) const {
  LayoutResult r;
  r.algorithm = algorithm;
  r.snapshot_version = snapshot_version;
  for (std::size_t d = 0; d < device_position.size(); ++d) r.positions.emplace(tree.devices()[d], device_position[d]);
  for (std::size_t c = 0; c < cluster_position.size(); ++c) {
    r.cluster_positions.emplace(tree.cluster(static_cast<std::uint32_t>(c)).id, cluster_position[c]);
  }
  return r;
}

Expected<HierarchyLayout, LayoutError> layout_hierarchy(const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                                        const LayoutParams& params, const LayoutAlgorithm& algorithm) {
  if (auto s = check_params(params); !s) return unexpected(s.error());
  return Builder(snapshot, tree, params, algorithm).run();
}

bool same_structure(const ClusterTree& a, const ClusterTree& b) {
  if (a.clusters().size() != b.clusters().size() || a.devices() != b.devices()) return false;
  for (std::uint32_t c = 0; c < a.clusters().size(); ++c) {
    const auto& x = a.cluster(c);
    const auto& y = b.cluster(c);
    if (x.id != y.id || x.parent != y.parent || x.members != y.members || x.children != y.children) return false;
  }
  return true;
}

Expected<HierarchyLayout, LayoutError> update_hierarchy_layout(const HierarchyLayout& prev,
                                                               const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                                               std::span<const DeviceId> touched,
                                                               const LayoutParams& params,
                                                               const LayoutAlgorithm& algorithm) {
  if (auto s = check_params(params); !s) return unexpected(s.error());
  if (prev.cluster_position.size() != tree.clusters().size() ||
      prev.device_position.size() != tree.devices().size()) {
    return unexpected(LayoutError{LayoutErrorCode::kVersionMismatch, "layout does not match the cluster tree"});
  }
  HierarchyLayout out = prev;
  out.snapshot_version = snapshot.version;
  out.revision = prev.revision + 1;
  if (tree.level_count() == 0) return out;

  std::map<std::uint32_t, std::vector<std::uint32_t>> seeds_by_leaf;
  for (const auto& id : touched) {
    auto d = tree.device_ordinal(id);
    if (d) seeds_by_leaf[tree.leaf_of(*d)].push_back(*d);
  }
  if (seeds_by_leaf.empty()) return out;

  std::map<std::uint32_t, LayoutGraph> graphs;
  std::map<std::uint32_t, std::map<std::uint32_t, std::uint32_t>> locals;
  for (const auto& [leaf, seeds] : seeds_by_leaf) {
    const auto& members = tree.cluster(leaf).members;
    auto& g = graphs[leaf];
    auto& local = locals[leaf];
    for (std::uint32_t i = 0; i < members.size(); ++i) {
      g.node_ids.push_back(tree.devices()[members[i]].str());
      local.emplace(members[i], i);
    }
  }
  std::map<std::uint32_t, std::map<std::pair<std::uint32_t, std::uint32_t>, double>> weights;
  for (const auto& link : resolve_links(snapshot, tree)) {
    std::uint32_t leaf = tree.leaf_of(link.a);
    if (leaf != tree.leaf_of(link.b) || !graphs.count(leaf)) continue;
    const auto& local = locals[leaf];
    auto key = std::minmax(local.at(link.a), local.at(link.b));
    weights[leaf][{key.first, key.second}] += 1.0;
  }

  for (const auto& [leaf, seeds] : seeds_by_leaf) {
    auto& g = graphs[leaf];
    for (const auto& [pair, w] : weights[leaf]) g.edges.push_back({pair.first, pair.second, w});
    const auto& members = tree.cluster(leaf).members;
    const auto& local = locals[leaf];
    std::vector<std::uint32_t> local_seeds;
    for (auto d : seeds) local_seeds.push_back(local.at(d));
    auto affected = within_hops(g, local_seeds, 2);

    const Rect& region = prev.cluster_region[leaf];
    LayoutParams p = params;
    p.width = std::max(region.width(), 1e-9);
    p.height = std::max(region.height(), 1e-9);
    p.seed = params.seed ^ fnv1a(tree.cluster(leaf).id.str());
    p.ideal_edge_length.reset();
    p.iterations = std::max(1u, params.iterations / 5);

    PlacementHints hints;
    hints.initial.resize(members.size());
    hints.pinned.assign(members.size(), 0);
    hints.temperature = p.edge_length_for(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const DeviceId& id = tree.devices()[members[i]];
      auto pin = snapshot.pins.find(id);
      Point global = pin != snapshot.pins.end() ? pin->second : prev.device_position[members[i]];
      hints.initial[i] = Point{global.x - region.min_x, global.y - region.min_y};
      hints.pinned[i] = (!affected[i] || pin != snapshot.pins.end()) ? 1 : 0;
    }
    auto placed = algorithm.place(g, p, &hints);
    if (!placed) return unexpected(placed.error());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const DeviceId& id = tree.devices()[members[i]];
      if (auto pin = snapshot.pins.find(id); pin != snapshot.pins.end()) {
        out.device_position[members[i]] = pin->second;
      } else if (affected[i]) {
        out.device_position[members[i]] = Point{region.min_x + (*placed)[i].x, region.min_y + (*placed)[i].y};
      }
    }
  }
  Builder::compute_extents(tree, out);
  return out;
}

}  // namespace netvis

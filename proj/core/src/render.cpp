#include "netvis/render.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace netvis {

Rect Viewport::bounds() const {
  return Rect::from_center(center, pixel_width * scale, pixel_height * scale);
}

bool is_valid(const Viewport& v) {
  auto finite = [](double x) { return std::isfinite(x); };
  return finite(v.center.x) && finite(v.center.y) && finite(v.scale) && v.scale > 0 && finite(v.pixel_width) &&
         finite(v.pixel_height) && v.pixel_width > 0 && v.pixel_height > 0 && v.pixel_width <= kMaxPixelExtent &&
         v.pixel_height <= kMaxPixelExtent && finite(v.pixel_width * v.scale) && finite(v.pixel_height * v.scale);
}

Viewport fit_viewport(double width, double height, double pixel_width, double pixel_height) {
  Viewport v;
  v.center = {width / 2, height / 2};
  v.pixel_width = pixel_width;
  v.pixel_height = pixel_height;
  v.scale = std::max(width / pixel_width, height / pixel_height);
  return v;
}

// ---------------------------------------------------------------------------
// Deltas

std::size_t RenderDelta::size() const {
  return added_clusters.size() + added_devices.size() + added_edges.size() + added_meta_edges.size() +
         removed_clusters.size() + removed_devices.size() + removed_edges.size() + removed_meta_edges.size() +
         moved_clusters.size() + moved_devices.size() + moved_edges.size() + moved_meta_edges.size();
}

namespace {

MetaEdgeKey key_of(const MetaEdge& e) { return {e.a, e.b}; }
const ClusterId& key_of(const RenderCluster& c) { return c.id; }
const DeviceId& key_of(const RenderDevice& d) { return d.id; }
const LinkId& key_of(const RenderEdge& e) { return e.id; }

template <class T, class K>
void diff_sorted(const std::vector<T>& prev, const std::vector<T>& next, std::vector<T>& added, std::vector<K>& removed,
                 std::vector<T>& moved) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < prev.size() || j < next.size()) {
    if (j == next.size() || (i < prev.size() && key_of(prev[i]) < key_of(next[j]))) {
      removed.push_back(key_of(prev[i++]));
    } else if (i == prev.size() || key_of(next[j]) < key_of(prev[i])) {
      added.push_back(next[j++]);
    } else {
      if (!(prev[i] == next[j])) moved.push_back(next[j]);
      ++i;
      ++j;
    }
  }
}

template <class T, class K>
std::vector<T> patch(const std::vector<T>& prev, const std::vector<T>& added, const std::vector<K>& removed,
                     const std::vector<T>& moved) {
  std::map<K, T> items;
  for (const auto& item : prev) items.insert_or_assign(K(key_of(item)), item);
  for (const auto& key : removed) items.erase(key);
  for (const auto& item : moved) items.insert_or_assign(K(key_of(item)), item);
  for (const auto& item : added) items.insert_or_assign(K(key_of(item)), item);
  std::vector<T> out;
  out.reserve(items.size());
  for (auto& [key, item] : items) out.push_back(std::move(item));
  return out;
}

}  // namespace

RenderDelta render_delta(const RenderSet& prev, const RenderSet& next) {
  RenderDelta d;
  d.from_snapshot_version = prev.snapshot_version;
  d.snapshot_version = next.snapshot_version;
  d.from_layout_version = prev.layout_version;
  d.layout_version = next.layout_version;
  diff_sorted(prev.clusters, next.clusters, d.added_clusters, d.removed_clusters, d.moved_clusters);
  diff_sorted(prev.devices, next.devices, d.added_devices, d.removed_devices, d.moved_devices);
  diff_sorted(prev.edges, next.edges, d.added_edges, d.removed_edges, d.moved_edges);
  diff_sorted(prev.meta_edges, next.meta_edges, d.added_meta_edges, d.removed_meta_edges, d.moved_meta_edges);
  return d;
}

RenderSet apply_delta(const RenderSet& prev, const RenderDelta& d) {
  RenderSet out;
  out.clusters = patch(prev.clusters, d.added_clusters, d.removed_clusters, d.moved_clusters);
  out.devices = patch(prev.devices, d.added_devices, d.removed_devices, d.moved_devices);
  out.edges = patch(prev.edges, d.added_edges, d.removed_edges, d.moved_edges);
  out.meta_edges = patch(prev.meta_edges, d.added_meta_edges, d.removed_meta_edges, d.moved_meta_edges);
  out.snapshot_version = d.snapshot_version;
  out.layout_version = d.layout_version;
  return out;
}

// ---------------------------------------------------------------------------
// Scene index and queries

SceneIndex::SceneIndex(const NetworkSnapshot& snapshot, const ClusterTree& tree, const HierarchyLayout& layout)
    : tree_(&tree), layout_(&layout), snapshot_version_(snapshot.version) {
  complete_ = layout.cluster_position.size() == tree.clusters().size() &&
              layout.cluster_extent.size() == tree.clusters().size() &&
              layout.cluster_region.size() == tree.clusters().size() &&
              layout.device_position.size() == tree.devices().size();
  kinds_.reserve(tree.devices().size());
  names_.reserve(tree.devices().size());
  for (const auto& id : tree.devices()) {
    const Device* device = snapshot.find(id);
    kinds_.push_back(device ? device->kind : DeviceKind::kHost);
    names_.push_back(device ? device->name : std::string{});
  }
  links_.reserve(snapshot.links.size());
  for (const auto& [id, link] : snapshot.links) {
    auto ia = snapshot.interfaces.find(link.a);
    auto ib = snapshot.interfaces.find(link.b);
    if (ia == snapshot.interfaces.end() || ib == snapshot.interfaces.end()) continue;
    auto da = tree.device_ordinal(ia->second.device);
    auto db = tree.device_ordinal(ib->second.device);
    if (!da || !db || *da == *db) continue;
    links_.push_back({id, *da, *db});
  }
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double footprint_px(const HierarchyLayout& layout, std::uint32_t cluster, double scale) {
  const Rect& r = layout.cluster_region[cluster];
  return std::max(r.width(), r.height()) / scale;
}

class QueryRun {
 public:
  QueryRun(const SceneIndex& scene, const Viewport& viewport, const ExpansionState& state)
      : scene_(scene), tree_(scene.tree()), layout_(scene.layout()), viewport_(viewport) {
    Rect b = viewport.bounds();
    double mx = b.width() * 0.1;
    double my = b.height() * 0.1;
    visible_ = {b.min_x - mx, b.min_y - my, b.max_x + mx, b.max_y + my};
    const auto nc = tree_.clusters().size();
    explicit_.assign(nc, 0);
    for (const auto& id : state.expanded) {
      if (auto c = tree_.find(id)) explicit_[*c] = 1;
    }
    wanted_.assign(nc, 0);
    const auto& cfg = tree_.config();
    for (std::uint32_t c = 0; c < nc; ++c) {
      const auto& cluster = tree_.cluster(c);
      bool parent_open = cluster.parent == kNoCluster || wanted_[cluster.parent];
      if (!parent_open || !layout_.cluster_extent[c].intersects(visible_)) continue;
      bool zoom = footprint_px(layout_, c, viewport.scale) >= cfg.auto_expand_px;
      bool click = explicit_[c] != 0;
      switch (cfg.expand_policy) {
        case ExpandPolicy::kClick: wanted_[c] = click; break;
        case ExpandPolicy::kZoom: wanted_[c] = zoom; break;
        case ExpandPolicy::kBoth: wanted_[c] = click || zoom; break;
      }
    }
    rep_.assign(nc, kNoCluster);
    device_visible_.assign(tree_.devices().size(), 0);
    cluster_visible_.assign(nc, 0);
  }

  RenderSet run() {
    const std::size_t budget = tree_.config().max_render_elements;
    std::vector<std::uint8_t> open = wanted_;
    RenderSet set = evaluate(open);
    if (set.element_count() <= budget) return set;

    // Coarsen: close the deepest open clouds first, farthest from the
    // viewport center first within a level.
    std::vector<std::uint32_t> order;
    for (std::uint32_t c = 0; c < open.size(); ++c) {
      if (open[c]) order.push_back(c);
    }
    std::vector<double> dist(open.size(), 0.0);
    for (auto c : order) dist[c] = distance(layout_.cluster_position[c], viewport_.center);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const auto& ca = tree_.cluster(a);
      const auto& cb = tree_.cluster(b);
      if (ca.level != cb.level) return ca.level > cb.level;
      if (dist[a] != dist[b]) return dist[a] > dist[b];
      return ca.id < cb.id;
    });
    auto count_with = [&](std::size_t closed) {
      std::vector<std::uint8_t> o = wanted_;
      for (std::size_t i = 0; i < closed; ++i) o[order[i]] = 0;
      return std::pair{evaluate(o), o};
    };
    std::size_t lo = 1;
    std::size_t hi = order.size();
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo) / 2;
      if (count_with(mid).first.element_count() <= budget) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    // Counts are not strictly monotone in the number of closed clouds, so
    // confirm and step forward if needed.
    for (std::size_t j = lo; j <= order.size(); ++j) {
      auto [candidate, o] = count_with(j);
      if (candidate.element_count() <= budget) return candidate;
      if (j == order.size()) {
        set = std::move(candidate);
        break;
      }
    }
    trim_coarsest(set, budget);
    return set;
  }

 private:
  // With every cloud closed the level-0 view can still exceed the budget;
  // drop the weakest meta-edges, then the most distant clouds.
  void trim_coarsest(RenderSet& set, std::size_t budget) const {
    if (set.element_count() <= budget) return;
    std::vector<std::size_t> by_weight(set.meta_edges.size());
    for (std::size_t i = 0; i < by_weight.size(); ++i) by_weight[i] = i;
    std::stable_sort(by_weight.begin(), by_weight.end(), [&](std::size_t a, std::size_t b) {
      return set.meta_edges[a].multiplicity < set.meta_edges[b].multiplicity;
    });
    std::vector<std::uint8_t> drop(set.meta_edges.size(), 0);
    std::size_t count = set.element_count();
    for (std::size_t i = 0; i < by_weight.size() && count > budget; ++i, --count) drop[by_weight[i]] = 1;
    std::vector<MetaEdge> kept;
    for (std::size_t i = 0; i < set.meta_edges.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(set.meta_edges[i]));
    }
    set.meta_edges = std::move(kept);
    if (set.element_count() <= budget) return;
    std::vector<std::size_t> by_dist(set.clusters.size());
    for (std::size_t i = 0; i < by_dist.size(); ++i) by_dist[i] = i;
    std::stable_sort(by_dist.begin(), by_dist.end(), [&](std::size_t a, std::size_t b) {
      return distance(set.clusters[a].position, viewport_.center) < distance(set.clusters[b].position, viewport_.center);
    });
    std::size_t keep = budget >= set.devices.size() + set.edges.size() ? budget - set.devices.size() - set.edges.size() : 0;
    std::vector<std::uint8_t> keep_flag(set.clusters.size(), 0);
    for (std::size_t i = 0; i < std::min(keep, by_dist.size()); ++i) keep_flag[by_dist[i]] = 1;
    std::vector<RenderCluster> clusters;
    for (std::size_t i = 0; i < set.clusters.size(); ++i) {
      if (keep_flag[i]) clusters.push_back(std::move(set.clusters[i]));
    }
    set.clusters = std::move(clusters);
  }

  RenderSet evaluate(const std::vector<std::uint8_t>& open) {
    RenderSet set;
    set.snapshot_version = scene_.snapshot_version();
    set.layout_version = layout_.revision;
    const auto nc = static_cast<std::uint32_t>(tree_.clusters().size());
    const std::uint32_t leaf_level = tree_.leaf_level();

    std::fill(rep_.begin(), rep_.end(), kNoCluster);
    std::fill(cluster_visible_.begin(), cluster_visible_.end(), 0);
    for (std::uint32_t c = 0; c < nc; ++c) {
      const auto& cluster = tree_.cluster(c);
      if (open[c]) continue;
      if (cluster.parent == kNoCluster || open[cluster.parent]) {
        rep_[c] = c;
        if (visible_.contains(layout_.cluster_position[c])) {
          cluster_visible_[c] = 1;
          set.clusters.push_back({cluster.id, cluster.level, layout_.cluster_position[c], cluster.device_count,
                                  wanted_[c] != 0, cluster.label});
        }
      } else {
        rep_[c] = rep_[cluster.parent];
      }
    }

    std::fill(device_visible_.begin(), device_visible_.end(), 0);
    for (auto leaf : tree_.level(leaf_level)) {
      if (!open[leaf]) continue;
      for (auto d : tree_.cluster(leaf).members) {
        const Point& p = layout_.device_position[d];
        if (!visible_.contains(p)) continue;
        device_visible_[d] = 1;
        set.devices.push_back({tree_.devices()[d], p, scene_.kinds()[d], scene_.names()[d]});
      }
    }

    std::unordered_map<std::uint64_t, std::size_t> meta_index;
    for (const auto& row : scene_.links()) {
      std::uint32_t la = tree_.leaf_of(row.a);
      std::uint32_t lb = tree_.leaf_of(row.b);
      bool a_dev = open[la] != 0;
      bool b_dev = open[lb] != 0;
      if (a_dev && b_dev) {
        if (device_visible_[row.a] && device_visible_[row.b]) {
          set.edges.push_back({row.id, tree_.devices()[row.a], tree_.devices()[row.b]});
        }
        continue;
      }
      if (a_dev || b_dev) continue;
      std::uint32_t ca = rep_[la];
      std::uint32_t cb = rep_[lb];
      if (ca == cb || !cluster_visible_[ca] || !cluster_visible_[cb]) continue;
      if (tree_.cluster(cb).id < tree_.cluster(ca).id) std::swap(ca, cb);
      auto key = (std::uint64_t{ca} << 32) | cb;
      auto [it, inserted] = meta_index.try_emplace(key, set.meta_edges.size());
      if (inserted) set.meta_edges.push_back({tree_.cluster(ca).id, tree_.cluster(cb).id, 0, {}});
      auto& edge = set.meta_edges[it->second];
      ++edge.multiplicity;
      if (edge.sample_links.size() < kMetaEdgeSamples) edge.sample_links.push_back(row.id);
    }

    std::sort(set.clusters.begin(), set.clusters.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(set.meta_edges.begin(), set.meta_edges.end(),
              [](const auto& x, const auto& y) { return key_of(x) < key_of(y); });
    // Devices follow ordinal order within a leaf but leaves interleave ids.
    std::sort(set.devices.begin(), set.devices.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return set;
  }

  const SceneIndex& scene_;
  const ClusterTree& tree_;
  const HierarchyLayout& layout_;
  const Viewport& viewport_;
  Rect visible_;
  std::vector<std::uint8_t> explicit_;
  std::vector<std::uint8_t> wanted_;
  std::vector<std::uint32_t> rep_;
  std::vector<std::uint8_t> device_visible_;
  std::vector<std::uint8_t> cluster_visible_;
};

}  // namespace

std::uint32_t detail_level(const SceneIndex& scene, const Viewport& viewport) {
  const auto& tree = scene.tree();
  std::uint32_t levels = 0;
  for (std::uint32_t level = 0; level < tree.level_count(); ++level) {
    std::vector<double> sizes;
    for (auto c : tree.level(level)) sizes.push_back(footprint_px(scene.layout(), c, viewport.scale));
    if (sizes.empty() || median(std::move(sizes)) < tree.config().auto_expand_px) break;
    ++levels;
  }
  return levels;
}

Expected<RenderSet, LodError> viewport_query(const SceneIndex& scene, const Viewport& viewport,
                                             const ExpansionState& state) {
  if (!scene.complete()) {
    return unexpected(LodError{LodErrorCode::kMissingLayout, "layout does not cover the cluster tree"});
  }
  if (scene.tree().level_count() == 0) {
    RenderSet empty;
    empty.snapshot_version = scene.snapshot_version();
    empty.layout_version = scene.layout().revision;
    return empty;
  }
  return QueryRun(scene, viewport, state).run();
}

}  // namespace netvis

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netvis/geometry.hpp"
#include "netvis/hier_layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

namespace netvis {

struct Viewport {
  Point center;
  /// Layout units per pixel.
  double scale = 1.0;
  double pixel_width = 1024;
  double pixel_height = 768;

  /// Visible layout-space rectangle without margin.
  Rect bounds() const;

  friend bool operator==(const Viewport&, const Viewport&) = default;
};

inline constexpr double kMaxPixelExtent = 1 << 16;

bool is_valid(const Viewport& viewport);

/// Viewport that shows the whole [0,w]x[0,h] layout area.
Viewport fit_viewport(double width, double height, double pixel_width, double pixel_height);

struct RenderCluster {
  ClusterId id;
  std::uint32_t level = 0;
  Point position;
  std::uint64_t device_count = 0;
  /// Zoom or expansion state would open this cloud but the element budget
  /// kept it closed.
  bool expanded = false;
  std::string label;

  friend bool operator==(const RenderCluster&, const RenderCluster&) = default;
};

struct RenderDevice {
  DeviceId id;
  Point position;
  DeviceKind kind = DeviceKind::kHost;
  std::string name;

  friend bool operator==(const RenderDevice&, const RenderDevice&) = default;
};

struct RenderEdge {
  LinkId id;
  DeviceId a;
  DeviceId b;

  friend bool operator==(const RenderEdge&, const RenderEdge&) = default;
};

/// All lists sorted by id; meta-edges by (a, b).
struct RenderSet {
  std::vector<RenderCluster> clusters;
  std::vector<RenderDevice> devices;
  std::vector<RenderEdge> edges;
  std::vector<MetaEdge> meta_edges;
  std::uint64_t snapshot_version = 0;
  std::uint64_t layout_version = 0;

  std::size_t element_count() const { return clusters.size() + devices.size() + edges.size() + meta_edges.size(); }

  friend bool operator==(const RenderSet&, const RenderSet&) = default;
};

struct MetaEdgeKey {
  ClusterId a;
  ClusterId b;
  friend auto operator<=>(const MetaEdgeKey&, const MetaEdgeKey&) = default;
};

struct RenderDelta {
  std::uint64_t from_snapshot_version = 0;
  std::uint64_t snapshot_version = 0;
  std::uint64_t from_layout_version = 0;
  std::uint64_t layout_version = 0;

  std::vector<RenderCluster> added_clusters;
  std::vector<RenderDevice> added_devices;
  std::vector<RenderEdge> added_edges;
  std::vector<MetaEdge> added_meta_edges;

  std::vector<ClusterId> removed_clusters;
  std::vector<DeviceId> removed_devices;
  std::vector<LinkId> removed_edges;
  std::vector<MetaEdgeKey> removed_meta_edges;

  /// Elements present in both sets whose fields changed, in their new form.
  std::vector<RenderCluster> moved_clusters;
  std::vector<RenderDevice> moved_devices;
  std::vector<RenderEdge> moved_edges;
  std::vector<MetaEdge> moved_meta_edges;

  std::size_t size() const;
  bool empty() const { return size() == 0; }

  friend bool operator==(const RenderDelta&, const RenderDelta&) = default;
};

RenderDelta render_delta(const RenderSet& prev, const RenderSet& next);
RenderSet apply_delta(const RenderSet& prev, const RenderDelta& delta);

/// Query-time tables built once per (snapshot, tree, layout).
class SceneIndex {
 public:
  SceneIndex(const NetworkSnapshot& snapshot, const ClusterTree& tree, const HierarchyLayout& layout);

  const ClusterTree& tree() const { return *tree_; }
  const HierarchyLayout& layout() const { return *layout_; }
  std::uint64_t snapshot_version() const { return snapshot_version_; }

  struct LinkRow {
    LinkId id;
    std::uint32_t a;
    std::uint32_t b;
  };
  /// Inter-device links in id order, endpoints as device ordinals.
  const std::vector<LinkRow>& links() const { return links_; }
  const std::vector<DeviceKind>& kinds() const { return kinds_; }
  const std::vector<std::string>& names() const { return names_; }
  bool complete() const { return complete_; }

 private:
  const ClusterTree* tree_;
  const HierarchyLayout* layout_;
  std::uint64_t snapshot_version_ = 0;
  std::vector<LinkRow> links_;
  std::vector<DeviceKind> kinds_;
  std::vector<std::string> names_;
  bool complete_ = false;
};

/// Layout levels a viewport resolves: how many levels of clouds have a
/// median on-screen size at or above the auto-expand threshold.
std::uint32_t detail_level(const SceneIndex& scene, const Viewport& viewport);

/// Bounded element set for one viewport. Elements are kept when their
/// position lies in the viewport grown by 10% per side.
Expected<RenderSet, LodError> viewport_query(const SceneIndex& scene, const Viewport& viewport,
                                             const ExpansionState& state);

}  // namespace netvis

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "netvis/geometry.hpp"
#include "netvis/layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/topology.hpp"

namespace netvis {

/// Positions for every cluster and device of one ClusterTree. Siblings are
/// laid out inside their parent's region; leaf members inside the leaf's.
/// Vectors are indexed by cluster index and device ordinal of the tree.
struct HierarchyLayout {
  std::string algorithm;
  std::uint64_t snapshot_version = 0;
  /// Bumped by every update; clients see it as the render-set layout version.
  std::uint64_t revision = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<Point> cluster_position;
  std::vector<Rect> cluster_region;
  /// Region united with every descendant position.
  std::vector<Rect> cluster_extent;
  std::vector<Point> device_position;

  /// Flattened, id-keyed form.
  LayoutResult to_result(const ClusterTree& tree) const;
};

Expected<HierarchyLayout, LayoutError> layout_hierarchy(const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                                        const LayoutParams& params, const LayoutAlgorithm& algorithm);

/// Local update after edits that keep the tree structure (same clusters and
/// membership). Only leaf clusters holding a touched device are relaxed, and
/// inside them only devices within two hops of a touched device over
/// intra-leaf links move. Pinned devices land exactly on their pin.
Expected<HierarchyLayout, LayoutError> update_hierarchy_layout(const HierarchyLayout& prev,
                                                               const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                                               std::span<const DeviceId> touched,
                                                               const LayoutParams& params,
                                                               const LayoutAlgorithm& algorithm);

/// True when both trees have identical clusters, parents and leaf membership.
bool same_structure(const ClusterTree& a, const ClusterTree& b);

}  // namespace netvis

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/edit.hpp"
#include "netvis/geometry.hpp"
#include "netvis/ids.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

namespace netvis {

struct LayoutParams {
  unsigned iterations = 300;
  double width = 10000.0;
  double height = 10000.0;
  double theta = 0.7;
  std::uint64_t seed = 1;
  double cooling = 0.95;
  /// Defaults to sqrt(width * height / n) for the graph being laid out.
  std::optional<double> ideal_edge_length;

  double edge_length_for(std::size_t node_count) const;
};

struct LayoutEdge {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  double weight = 1.0;
};

/// Node/edge view handed to layout algorithms. Nodes are addressed by index;
/// `node_ids` names them for the assembled LayoutResult.
struct LayoutGraph {
  std::vector<std::string> node_ids;
  std::vector<LayoutEdge> edges;
  std::uint64_t version = 0;

  std::size_t node_count() const { return node_ids.size(); }
};

/// Device graph of a snapshot, with the tables incremental_layout needs to
/// map edits onto nodes. Links of `predecessor` are kept so removed links can
/// still be resolved to their endpoints.
struct DeviceGraph {
  LayoutGraph graph;
  std::map<DeviceId, std::uint32_t> index;
  std::map<LinkId, std::pair<DeviceId, DeviceId>> link_endpoints;
  std::map<InterfaceId, DeviceId> interface_owner;

  std::optional<std::uint32_t> find(const DeviceId& id) const;
};

/// Builds the device-level graph; parallel links between the same two
/// devices collapse into one edge whose weight is the link count.
DeviceGraph make_device_graph(const NetworkSnapshot& snapshot, const NetworkSnapshot* predecessor = nullptr);

/// Optional starting state for an algorithm run. Nodes without an initial
/// position are seeded from params.seed. Pinned nodes never move.
struct PlacementHints {
  std::vector<std::optional<Point>> initial;
  std::vector<std::uint8_t> pinned;
  std::optional<double> temperature;
};

enum class LayoutErrorCode { kNonFiniteInput, kInvalidParams, kDuplicateName, kUnknownAlgorithm, kVersionMismatch };

std::string_view to_string(LayoutErrorCode code);

struct LayoutError {
  LayoutErrorCode code;
  std::string message;
};

/// Plugin interface. Implementations must be deterministic for fixed
/// (graph, params, hints) and keep unpinned nodes inside [0,w]x[0,h].
class LayoutAlgorithm {
 public:
  virtual ~LayoutAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual Expected<std::vector<Point>, LayoutError> place(const LayoutGraph& graph, const LayoutParams& params,
                                                          const PlacementHints* hints = nullptr) const = 0;
};

struct LayoutResult {
  std::string algorithm;
  std::map<DeviceId, Point> positions;
  std::map<ClusterId, Point> cluster_positions;
  std::uint64_t snapshot_version = 0;
  double ideal_edge_length = 0.0;

  friend bool operator==(const LayoutResult&, const LayoutResult&) = default;
};

class LayoutRegistry {
 public:
  /// Registry pre-populated with "fdp-bh" and "grid".
  static LayoutRegistry with_builtins();

  Status<LayoutError> register_algorithm(std::shared_ptr<const LayoutAlgorithm> algorithm);
  std::shared_ptr<const LayoutAlgorithm> find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const LayoutAlgorithm>, std::less<>> algorithms_;
};

std::shared_ptr<const LayoutAlgorithm> make_force_directed_layout();
std::shared_ptr<const LayoutAlgorithm> make_grid_layout();

inline constexpr std::string_view kDefaultAlgorithm = "fdp-bh";

Status<LayoutError> check_params(const LayoutParams& params);

/// Runs `algorithm` and names each position after graph.node_ids.
Expected<LayoutResult, LayoutError> compute_layout(const LayoutGraph& graph, const LayoutParams& params,
                                                   const LayoutAlgorithm& algorithm);
Expected<LayoutResult, LayoutError> compute_layout(const LayoutGraph& graph, const LayoutParams& params);

/// Local re-layout after edits. Nodes farther than two hops from every
/// edited device keep their previous coordinates bit-for-bit; the rest are
/// relaxed for params.iterations / 5 rounds with everything else pinned.
/// Requires graph.version == prev.snapshot_version + edits.size().
Expected<LayoutResult, LayoutError> incremental_layout(const LayoutResult& prev, const DeviceGraph& graph,
                                                       std::span<const EditOp> edits, const LayoutParams& params,
                                                       const LayoutAlgorithm& algorithm);
Expected<LayoutResult, LayoutError> incremental_layout(const LayoutResult& prev, const DeviceGraph& graph,
                                                       std::span<const EditOp> edits, const LayoutParams& params);

/// Nodes within `hops` edges of any seed (seeds included).
std::vector<std::uint8_t> within_hops(const LayoutGraph& graph, std::span<const std::uint32_t> seeds, unsigned hops);

struct QualityReport {
  double mean_edge_ratio = 0.0;
  std::uint64_t overlap_count = 0;
};

QualityReport layout_quality(const LayoutGraph& graph, const LayoutResult& result);

/// "id x y" per line, sorted by id.
std::string format_position_table(const LayoutResult& result);

/// Seeded uniform placement used for initial positions.
std::vector<Point> random_placement(std::size_t count, double width, double height, std::uint64_t seed);

}  // namespace netvis

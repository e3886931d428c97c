#include "netvis/layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "netvis/barnes_hut.hpp"
#include "netvis/xml_io.hpp"

namespace netvis {

std::string_view to_string(LayoutErrorCode code) {
  switch (code) {
    case LayoutErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case LayoutErrorCode::kInvalidParams: return "InvalidParams";
    case LayoutErrorCode::kDuplicateName: return "DuplicateName";
    case LayoutErrorCode::kUnknownAlgorithm: return "UnknownAlgorithm";
    case LayoutErrorCode::kVersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

double LayoutParams::edge_length_for(std::size_t node_count) const {
  if (ideal_edge_length) return *ideal_edge_length;
  return std::sqrt(width * height / static_cast<double>(std::max<std::size_t>(1, node_count)));
}

Status<LayoutError> check_params(const LayoutParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(p.width) || !finite(p.height) || !finite(p.theta) || !finite(p.cooling) ||
      (p.ideal_edge_length && !finite(*p.ideal_edge_length))) {
    return unexpected(LayoutError{LayoutErrorCode::kNonFiniteInput, "layout parameters must be finite"});
  }
  if (!(p.width > 0) || !(p.height > 0)) {
    return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "area must be positive"});
  }
  if (p.theta < 0.0 || p.theta > 1.0) {
    return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "theta must lie in [0,1]"});
  }
  if (!(p.cooling > 0.0 && p.cooling < 1.0)) {
    return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "cooling must lie in (0,1)"});
  }
  if (p.ideal_edge_length && !(*p.ideal_edge_length > 0.0)) {
    return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "ideal edge length must be positive"});
  }
  return ok_status;
}

namespace {

Status<LayoutError> check_graph(const LayoutGraph& graph) {
  for (const auto& e : graph.edges) {
    if (e.source >= graph.node_count() || e.target >= graph.node_count()) {
      return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "edge endpoint out of range"});
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      return unexpected(LayoutError{LayoutErrorCode::kNonFiniteInput, "edge weights must be finite and >= 0"});
    }
  }
  return ok_status;
}

Status<LayoutError> check_hints(const LayoutGraph& graph, const PlacementHints* hints) {
  if (!hints) return ok_status;
  for (const auto& p : hints->initial) {
    if (p && (!std::isfinite(p->x) || !std::isfinite(p->y))) {
      return unexpected(LayoutError{LayoutErrorCode::kNonFiniteInput, "initial positions must be finite"});
    }
  }
  if (hints->temperature && !(std::isfinite(*hints->temperature) && *hints->temperature >= 0.0)) {
    return unexpected(LayoutError{LayoutErrorCode::kNonFiniteInput, "temperature must be finite"});
  }
  if ((!hints->initial.empty() && hints->initial.size() != graph.node_count()) ||
      (!hints->pinned.empty() && hints->pinned.size() != graph.node_count())) {
    return unexpected(LayoutError{LayoutErrorCode::kInvalidParams, "hint vectors must match node count"});
  }
  return ok_status;
}

bool is_pinned(const PlacementHints* hints, std::size_t i) {
  return hints && !hints->pinned.empty() && hints->pinned[i] != 0;
}

class ForceDirectedLayout final : public LayoutAlgorithm {
 public:
  std::string name() const override { return "fdp-bh"; }

  Expected<std::vector<Point>, LayoutError> place(const LayoutGraph& graph, const LayoutParams& params,
                                                  const PlacementHints* hints) const override {
    if (auto s = check_params(params); !s) return unexpected(s.error());
    if (auto s = check_graph(graph); !s) return unexpected(s.error());
    if (auto s = check_hints(graph, hints); !s) return unexpected(s.error());
    const std::size_t n = graph.node_count();
    if (n == 0) return std::vector<Point>{};

    const double k = params.edge_length_for(n);
    std::vector<Point> pos = random_placement(n, params.width, params.height, params.seed);
    if (hints && !hints->initial.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (hints->initial[i]) pos[i] = *hints->initial[i];
      }
    }
    double temperature = hints && hints->temperature ? *hints->temperature
                                                     : std::max(params.width, params.height) / 10.0;
    const unsigned threads = n >= 4096 ? 0 : 1;

    std::vector<Vec2> disp(n);
    for (unsigned iter = 0; iter < params.iterations; ++iter) {
      disp = repulsive_forces(pos, k, params.theta, threads);
      for (const auto& e : graph.edges) {
        if (e.source == e.target) continue;
        Vec2 delta = pos[e.source] - pos[e.target];
        double d = delta.length();
        if (d == 0.0) continue;
        // Attraction d^2 / k along the edge.
        Vec2 pull = delta * (e.weight * d / k);
        disp[e.source] -= pull;
        disp[e.target] += pull;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (is_pinned(hints, i)) continue;
        double len = disp[i].length();
        if (!(len > 0.0) || !std::isfinite(len)) continue;
        double step = std::min(len, temperature);
        pos[i] = pos[i] + disp[i] * (step / len);
        pos[i].x = std::clamp(pos[i].x, 0.0, params.width);
        pos[i].y = std::clamp(pos[i].y, 0.0, params.height);
      }
      temperature *= params.cooling;
    }
    return pos;
  }
};

class GridLayout final : public LayoutAlgorithm {
 public:
  std::string name() const override { return "grid"; }

  Expected<std::vector<Point>, LayoutError> place(const LayoutGraph& graph, const LayoutParams& params,
                                                  const PlacementHints* hints) const override {
    if (auto s = check_params(params); !s) return unexpected(s.error());
    if (auto s = check_graph(graph); !s) return unexpected(s.error());
    if (auto s = check_hints(graph, hints); !s) return unexpected(s.error());
    const std::size_t n = graph.node_count();
    std::vector<Point> pos(n);
    std::vector<std::uint32_t> order;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (is_pinned(hints, i) && hints->initial.size() == n && hints->initial[i]) {
        pos[i] = *hints->initial[i];
      } else {
        order.push_back(i);
      }
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return graph.node_ids[a] != graph.node_ids[b] ? graph.node_ids[a] < graph.node_ids[b] : a < b;
    });
    if (order.empty()) return pos;
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(order.size()))));
    const std::size_t rows = (order.size() + cols - 1) / cols;
    const double cell_w = params.width / static_cast<double>(cols);
    const double cell_h = params.height / static_cast<double>(rows);
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
      std::size_t r = slot / cols;
      std::size_t c = slot % cols;
      pos[order[slot]] = {(static_cast<double>(c) + 0.5) * cell_w, (static_cast<double>(r) + 0.5) * cell_h};
    }
    return pos;
  }
};

}  // namespace

std::shared_ptr<const LayoutAlgorithm> make_force_directed_layout() {
  return std::make_shared<ForceDirectedLayout>();
}
std::shared_ptr<const LayoutAlgorithm> make_grid_layout() { return std::make_shared<GridLayout>(); }

std::vector<Point> random_placement(std::size_t count, double width, double height, std::uint64_t seed) {
  // mt19937_64's output sequence is fixed by the standard; the unit-interval
  // mapping is done by hand so results do not depend on the library.
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Point> out(count);
  for (auto& p : out) {
    p.x = unit() * width;
    p.y = unit() * height;
  }
  return out;
}

LayoutRegistry LayoutRegistry::with_builtins() {
  LayoutRegistry registry;
  (void)registry.register_algorithm(make_force_directed_layout());
  (void)registry.register_algorithm(make_grid_layout());
  return registry;
}

Status<LayoutError> LayoutRegistry::register_algorithm(std::shared_ptr<const LayoutAlgorithm> algorithm) {
  std::string name = algorithm->name();
  if (algorithms_.contains(name)) {
    return unexpected(LayoutError{LayoutErrorCode::kDuplicateName, "layout '" + name + "' already registered"});
  }
  algorithms_.emplace(std::move(name), std::move(algorithm));
  return ok_status;
}

std::shared_ptr<const LayoutAlgorithm> LayoutRegistry::find(std::string_view name) const {
  auto it = algorithms_.find(name);
  return it == algorithms_.end() ? nullptr : it->second;
}

std::vector<std::string> LayoutRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, algo] : algorithms_) out.push_back(name);
  return out;
}

std::optional<std::uint32_t> DeviceGraph::find(const DeviceId& id) const {
  auto it = index.find(id);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

DeviceGraph make_device_graph(const NetworkSnapshot& snapshot, const NetworkSnapshot* predecessor) {
  DeviceGraph out;
  out.graph.version = snapshot.version;
  out.graph.node_ids.reserve(snapshot.devices.size());
  for (const auto& [id, device] : snapshot.devices) {
    out.index.emplace(id, static_cast<std::uint32_t>(out.graph.node_ids.size()));
    out.graph.node_ids.push_back(id.str());
  }
  auto record_links = [&](const NetworkSnapshot& s) {
    for (const auto& [iid, iface] : s.interfaces) out.interface_owner.emplace(iid, iface.device);
    for (const auto& [lid, link] : s.links) {
      auto a = s.owner(link.a);
      auto b = s.owner(link.b);
      if (a && b) out.link_endpoints.emplace(lid, std::pair{*a, *b});
    }
  };
  record_links(snapshot);
  if (predecessor) record_links(*predecessor);

  std::map<std::pair<std::uint32_t, std::uint32_t>, double> weights;
  for (const auto& [lid, link] : snapshot.links) {
    auto a = snapshot.owner(link.a);
    auto b = snapshot.owner(link.b);
    if (!a || !b) continue;
    auto ia = out.find(*a), ib = out.find(*b);
    if (!ia || !ib || *ia == *ib) continue;
    weights[{std::min(*ia, *ib), std::max(*ia, *ib)}] += 1.0;
  }
  out.graph.edges.reserve(weights.size());
  for (const auto& [pair, w] : weights) out.graph.edges.push_back({pair.first, pair.second, w});
  return out;
}

Expected<LayoutResult, LayoutError> compute_layout(const LayoutGraph& graph, const LayoutParams& params,
                                                   const LayoutAlgorithm& algorithm) {
  auto placed = algorithm.place(graph, params);
  if (!placed) return unexpected(placed.error());
  LayoutResult result;
  result.algorithm = algorithm.name();
  result.snapshot_version = graph.version;
  result.ideal_edge_length = params.edge_length_for(graph.node_count());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    result.positions.emplace(DeviceId(graph.node_ids[i]), (*placed)[i]);
  }
  return result;
}

Expected<LayoutResult, LayoutError> compute_layout(const LayoutGraph& graph, const LayoutParams& params) {
  static const auto algorithm = make_force_directed_layout();
  return compute_layout(graph, params, *algorithm);
}

std::vector<std::uint8_t> within_hops(const LayoutGraph& graph, std::span<const std::uint32_t> seeds, unsigned hops) {
  const std::size_t n = graph.node_count();
  std::vector<std::vector<std::uint32_t>> adjacency(n);
  for (const auto& e : graph.edges) {
    if (e.source == e.target) continue;
    adjacency[e.source].push_back(e.target);
    adjacency[e.target].push_back(e.source);
  }
  std::vector<unsigned> depth(n, ~0u);
  std::deque<std::uint32_t> queue;
  for (auto s : seeds) {
    if (s < n && depth[s] != 0) {
      depth[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    if (depth[u] == hops) continue;
    for (auto v : adjacency[u]) {
      if (depth[v] == ~0u) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) out[i] = depth[i] != ~0u;
  return out;
}

Expected<LayoutResult, LayoutError> incremental_layout(const LayoutResult& prev, const DeviceGraph& dg,
                                                       std::span<const EditOp> edits, const LayoutParams& params,
                                                       const LayoutAlgorithm& algorithm) {
  const LayoutGraph& graph = dg.graph;
  if (graph.version != prev.snapshot_version + edits.size()) {
    return unexpected(LayoutError{LayoutErrorCode::kVersionMismatch,
                                  "graph version " + std::to_string(graph.version) + " is not " +
                                      std::to_string(edits.size()) + " edits after layout version " +
                                      std::to_string(prev.snapshot_version)});
  }
  if (auto s = check_params(params); !s) return unexpected(s.error());
  if (edits.empty()) return prev;

  const std::size_t n = graph.node_count();
  std::vector<std::uint32_t> seeds;
  std::map<std::uint32_t, Point> moved;
  auto seed_device = [&](const DeviceId& id) {
    if (auto i = dg.find(id)) seeds.push_back(*i);
  };
  for (const auto& op : edits) {
    std::visit(
        [&](const auto& payload) {
          using T = std::decay_t<decltype(payload)>;
          if constexpr (std::is_same_v<T, AddLink>) {
            for (const auto* iface : {&payload.a, &payload.b}) {
              if (auto it = dg.interface_owner.find(*iface); it != dg.interface_owner.end()) seed_device(it->second);
            }
          } else if constexpr (std::is_same_v<T, RemoveLink>) {
            if (auto it = dg.link_endpoints.find(payload.link); it != dg.link_endpoints.end()) {
              seed_device(it->second.first);
              seed_device(it->second.second);
            }
          } else if constexpr (std::is_same_v<T, MoveNode>) {
            if (auto i = dg.find(payload.device)) {
              seeds.push_back(*i);
              moved[*i] = payload.position;
            }
          }
        },
        op.payload);
  }

  PlacementHints hints;
  hints.initial.resize(n);
  hints.pinned.assign(n, 1);
  std::vector<std::uint8_t> fresh(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto it = prev.positions.find(DeviceId(graph.node_ids[i]));
    if (it != prev.positions.end()) {
      hints.initial[i] = it->second;
    } else {
      fresh[i] = 1;
      seeds.push_back(i);
    }
  }
  auto affected = within_hops(graph, seeds, 2);
  for (const auto& [i, p] : moved) hints.initial[i] = p;

  // New nodes start at the centroid of already-placed neighbours.
  std::vector<std::vector<std::uint32_t>> adjacency(n);
  for (const auto& e : graph.edges) {
    adjacency[e.source].push_back(e.target);
    adjacency[e.target].push_back(e.source);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!fresh[i]) continue;
    double sx = 0, sy = 0;
    int count = 0;
    for (auto j : adjacency[i]) {
      if (!fresh[j] && hints.initial[j]) {
        sx += hints.initial[j]->x;
        sy += hints.initial[j]->y;
        ++count;
      }
    }
    hints.initial[i] = count ? Point{sx / count, sy / count} : Point{params.width / 2, params.height / 2};
  }

  bool any_free = false;
  for (std::uint32_t i = 0; i < n; ++i) {
    hints.pinned[i] = !affected[i] || moved.contains(i);
    any_free = any_free || !hints.pinned[i];
  }

  std::vector<Point> placed(n);
  for (std::uint32_t i = 0; i < n; ++i) placed[i] = *hints.initial[i];
  if (any_free) {
    LayoutParams relax = params;
    relax.iterations = std::max(1u, params.iterations / 5);
    if (!relax.ideal_edge_length && prev.ideal_edge_length > 0) relax.ideal_edge_length = prev.ideal_edge_length;
    hints.temperature = relax.edge_length_for(n);
    auto result = algorithm.place(graph, relax, &hints);
    if (!result) return unexpected(result.error());
    placed = std::move(*result);
  }

  LayoutResult out;
  out.algorithm = prev.algorithm;
  out.cluster_positions = prev.cluster_positions;
  out.snapshot_version = graph.version;
  out.ideal_edge_length = prev.ideal_edge_length;
  for (std::uint32_t i = 0; i < n; ++i) {
    // Pinned nodes are copied, not round-tripped through the algorithm.
    out.positions.emplace(DeviceId(graph.node_ids[i]), hints.pinned[i] ? *hints.initial[i] : placed[i]);
  }
  return out;
}

Expected<LayoutResult, LayoutError> incremental_layout(const LayoutResult& prev, const DeviceGraph& graph,
                                                       std::span<const EditOp> edits, const LayoutParams& params) {
  static const auto algorithm = make_force_directed_layout();
  return incremental_layout(prev, graph, edits, params, *algorithm);
}

QualityReport layout_quality(const LayoutGraph& graph, const LayoutResult& result) {
  QualityReport report;
  std::vector<std::optional<Point>> pos(graph.node_count());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    auto it = result.positions.find(DeviceId(graph.node_ids[i]));
    if (it != result.positions.end()) pos[i] = it->second;
  }
  double k = result.ideal_edge_length;
  double sum = 0;
  std::size_t counted = 0;
  for (const auto& e : graph.edges) {
    if (!pos[e.source] || !pos[e.target] || !(k > 0)) continue;
    sum += distance(*pos[e.source], *pos[e.target]) / k;
    ++counted;
  }
  report.mean_edge_ratio = counted ? sum / static_cast<double>(counted) : 0.0;

  // Unit grid hashing: only pairs in the same or adjacent cells can be
  // closer than one unit.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
  auto cell_key = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
  };
  for (std::uint32_t i = 0; i < pos.size(); ++i) {
    if (!pos[i]) continue;
    auto cx = static_cast<std::int64_t>(std::floor(pos[i]->x));
    auto cy = static_cast<std::int64_t>(std::floor(pos[i]->y));
    grid[cell_key(cx, cy)].push_back(i);
  }
  for (std::uint32_t i = 0; i < pos.size(); ++i) {
    if (!pos[i]) continue;
    auto cx = static_cast<std::int64_t>(std::floor(pos[i]->x));
    auto cy = static_cast<std::int64_t>(std::floor(pos[i]->y));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(cell_key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (auto j : it->second) {
          if (j > i && distance(*pos[i], *pos[j]) < 1.0) ++report.overlap_count;
        }
      }
    }
  }
  return report;
}

std::string format_position_table(const LayoutResult& result) {
  std::string out;
  for (const auto& [id, p] : result.positions) {
    out += id.str();
    out += ' ';
    out += format_decimal(p.x);
    out += ' ';
    out += format_decimal(p.y);
    out += '\n';
  }
  return out;
}

}  // namespace netvis

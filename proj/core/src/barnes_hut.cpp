#include "netvis/barnes_hut.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace netvis {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

QuadTree::QuadTree(std::span<const Point> bodies)
    : bodies_(bodies), next_body_(bodies.size(), kNone), leaf_of_(bodies.size(), kNone) {
  if (bodies.empty()) return;
  Rect box = Rect::empty();
  for (const auto& p : bodies) box.expand(p);
  double side = std::max(box.width(), box.height());
  if (!(side > 0.0)) side = 1.0;
  // Slight inflation keeps points on the max edge strictly inside.
  double half = side / 2.0 * (1.0 + 1e-9) + 1e-12;
  cells_.reserve(bodies.size() * 2);
  make_cell(box.center(), half, 0);
  for (std::uint32_t i = 0; i < bodies.size(); ++i) insert(i);

  // Children are always created after their parent, so a reverse sweep
  // visits every child before its parent.
  std::vector<double> sum_x(cells_.size(), 0.0), sum_y(cells_.size(), 0.0);
  for (std::size_t c = cells_.size(); c-- > 0;) {
    Cell& cell = cells_[c];
    if (cell.is_leaf()) {
      for (auto b = cell.first_body; b != kNone; b = next_body_[b]) {
        cell.mass += 1.0;
        sum_x[c] += bodies_[b].x;
        sum_y[c] += bodies_[b].y;
      }
    } else {
      for (auto child : cell.child) {
        if (child == kNone) continue;
        cell.mass += cells_[child].mass;
        sum_x[c] += sum_x[child];
        sum_y[c] += sum_y[child];
      }
    }
    if (cell.mass > 0) cell.centroid = {sum_x[c] / cell.mass, sum_y[c] / cell.mass};
  }
}

std::int32_t QuadTree::make_cell(Point center, double half, int depth) {
  Cell cell;
  cell.center = center;
  cell.half = half;
  cell.depth = depth;
  cells_.push_back(cell);
  return static_cast<std::int32_t>(cells_.size() - 1);
}

int QuadTree::quadrant(const Cell& cell, const Point& p) {
  return (p.x >= cell.center.x ? 1 : 0) + (p.y >= cell.center.y ? 2 : 0);
}

void QuadTree::insert(std::uint32_t body) {
  const Point& p = bodies_[body];
  std::int32_t current = 0;
  for (;;) {
    Cell& cell = cells_[current];
    if (cell.is_leaf()) {
      if (cell.first_body == kNone) {
        cell.first_body = static_cast<std::int32_t>(body);
        leaf_of_[body] = current;
        return;
      }
      const Point& occupant = bodies_[cell.first_body];
      if (cell.depth >= kMaxDepth || (occupant.x == p.x && occupant.y == p.y)) {
        // Coincident bodies share the leaf.
        std::int32_t tail = cell.first_body;
        while (next_body_[tail] != kNone) tail = next_body_[tail];
        next_body_[tail] = static_cast<std::int32_t>(body);
        leaf_of_[body] = current;
        return;
      }
      // Split: push the (coincident) occupants one level down.
      std::int32_t moved = cell.first_body;
      cell.first_body = kNone;
      int q = quadrant(cell, occupant);
      double h = cell.half / 2.0;
      Point c{cell.center.x + (q & 1 ? h : -h), cell.center.y + (q & 2 ? h : -h)};
      int depth = cell.depth + 1;
      std::int32_t child = make_cell(c, h, depth);
      cells_[current].child[q] = child;  // `cell` may dangle after make_cell
      cells_[child].first_body = moved;
      for (auto b = moved; b != kNone; b = next_body_[b]) leaf_of_[b] = child;
      continue;
    }
    int q = quadrant(cell, p);
    if (cell.child[q] == kNone) {
      double h = cell.half / 2.0;
      Point c{cell.center.x + (q & 1 ? h : -h), cell.center.y + (q & 2 ? h : -h)};
      int depth = cell.depth + 1;
      std::int32_t child = make_cell(c, h, depth);
      cells_[current].child[q] = child;
    }
    current = cells_[current].child[q];
  }
}

std::vector<std::uint32_t> QuadTree::leaf_bodies(std::int32_t cell) const {
  std::vector<std::uint32_t> out;
  for (auto b = cells_[cell].first_body; b != kNone; b = next_body_[b]) out.push_back(static_cast<std::uint32_t>(b));
  return out;
}

Vec2 pair_repulsion(const Point& on, const Point& from, std::uint32_t on_index, std::uint32_t from_index, double k) {
  Vec2 delta = on - from;
  double d2 = delta.x * delta.x + delta.y * delta.y;
  if (d2 > 0.0) return delta * (k * k / d2);
  std::uint32_t lo = std::min(on_index, from_index);
  std::uint32_t hi = std::max(on_index, from_index);
  double angle = static_cast<double>(splitmix64((std::uint64_t{lo} << 32) | hi) >> 11) * 0x1.0p-53 * 2.0 *
                 std::numbers::pi;
  double sign = on_index < from_index ? 1.0 : -1.0;
  return Vec2{std::cos(angle), std::sin(angle)} * (sign * k);
}

Vec2 repulsion_on(const QuadTree& tree, std::uint32_t body, double k, double theta) {
  const auto& cells = tree.cells();
  Vec2 force;
  if (cells.empty()) return force;
  const Point p = tree.bodies()[body];
  const double k2 = k * k;
  std::int32_t stack[4 * QuadTree::kMaxDepth + 8];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const auto& cell = cells[stack[--top]];
    if (cell.mass == 0.0) continue;
    if (cell.is_leaf()) {
      for (auto j = cell.first_body; j != QuadTree::kNone; j = tree.next_body(j)) {
        auto other = static_cast<std::uint32_t>(j);
        if (other != body) force += pair_repulsion(p, tree.bodies()[other], body, other, k);
      }
      continue;
    }
    Vec2 delta = p - cell.centroid;
    double d2 = delta.x * delta.x + delta.y * delta.y;
    if (!cell.contains(p) && d2 > 0.0 && cell.size() * cell.size() < theta * theta * d2) {
      force += delta * (cell.mass * k2 / d2);
      continue;
    }
    for (int q = 3; q >= 0; --q) {
      if (cell.child[q] != QuadTree::kNone) stack[top++] = cell.child[q];
    }
  }
  return force;
}

std::vector<Vec2> repulsive_forces(std::span<const Point> bodies, double k, double theta, unsigned threads) {
  QuadTree tree(bodies);
  std::vector<Vec2> forces(bodies.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, bodies.size() / 512)));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) forces[i] = repulsion_on(tree, static_cast<std::uint32_t>(i), k, theta);
  };
  if (threads <= 1) {
    work(0, bodies.size());
    return forces;
  }
  std::vector<std::jthread> pool;
  std::size_t chunk = (bodies.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(bodies.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(work, begin, end);
  }
  pool.clear();  // joins
  return forces;
}

}  // namespace netvis

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "netvis/geometry.hpp"

namespace netvis {

/// Point-region quadtree over unit-mass bodies. Each leaf holds one body,
/// except leaves at max depth which hold every coincident body that reached
/// them.
class QuadTree {
 public:
  static constexpr std::int32_t kNone = -1;
  static constexpr int kMaxDepth = 48;

  struct Cell {
    Point center;       // geometric center of the square
    double half = 0.0;  // half side length
    double mass = 0.0;
    Point centroid;
    std::int32_t child[4] = {kNone, kNone, kNone, kNone};
    std::int32_t first_body = kNone;  // head of this leaf's body list
    int depth = 0;

    bool is_leaf() const { return child[0] == kNone && child[1] == kNone && child[2] == kNone && child[3] == kNone; }
    double size() const { return 2.0 * half; }
    bool contains(const Point& p) const {
      return p.x >= center.x - half && p.x <= center.x + half && p.y >= center.y - half && p.y <= center.y + half;
    }
  };

  explicit QuadTree(std::span<const Point> bodies);

  const std::vector<Cell>& cells() const { return cells_; }
  /// Bodies stored in a leaf, in insertion order.
  std::vector<std::uint32_t> leaf_bodies(std::int32_t cell) const;
  /// Leaf holding each body.
  const std::vector<std::int32_t>& leaf_of() const { return leaf_of_; }
  std::int32_t next_body(std::int32_t body) const { return next_body_[body]; }
  std::span<const Point> bodies() const { return bodies_; }

 private:
  std::int32_t make_cell(Point center, double half, int depth);
  void insert(std::uint32_t body);
  static int quadrant(const Cell& cell, const Point& p);

  std::span<const Point> bodies_;
  std::vector<Cell> cells_;
  std::vector<std::int32_t> next_body_;
  std::vector<std::int32_t> leaf_of_;
};

/// Repulsion felt by body i: sum over j != i of k^2 / d along (p_i - p_j).
/// Cells whose size / distance-to-centroid falls below theta are treated as
/// a single body at their centroid, provided they do not contain p_i.
/// theta = 0 reproduces exact pairwise summation.
Vec2 repulsion_on(const QuadTree& tree, std::uint32_t body, double k, double theta);

/// Repulsion for every body, computed on `threads` workers (0 = hardware).
/// Output is identical regardless of thread count.
std::vector<Vec2> repulsive_forces(std::span<const Point> bodies, double k, double theta, unsigned threads = 1);

/// Exact pairwise repulsion between two bodies, including the deterministic
/// push used when they coincide.
Vec2 pair_repulsion(const Point& on, const Point& from, std::uint32_t on_index, std::uint32_t from_index, double k);

}  // namespace netvis

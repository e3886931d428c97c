#pragma once

#include <algorithm>
#include <cmath>

namespace netvis {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  double length() const { return std::hypot(x, y); }

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator-(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(const Point& p, const Vec2& v) { return {p.x + v.x, p.y + v.y}; }
inline Vec2 operator*(const Vec2& v, double s) { return {v.x * s, v.y * s}; }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  static Rect from_center(Point c, double width, double height) {
    return {c.x - width / 2, c.y - height / 2, c.x + width / 2, c.y + height / 2};
  }
  /// Degenerate rect that absorbs the first point passed to expand().
  static Rect empty() { return {INFINITY, INFINITY, -INFINITY, -INFINITY}; }

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Point center() const { return {(min_x + max_x) / 2, (min_y + max_y) / 2}; }
  bool is_empty() const { return min_x > max_x || min_y > max_y; }

  bool contains(const Point& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool intersects(const Rect& o) const {
    return !is_empty() && !o.is_empty() && min_x <= o.max_x && o.min_x <= max_x &&
           min_y <= o.max_y && o.min_y <= max_y;
  }
  void expand(const Point& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void expand(const Rect& r) {
    if (r.is_empty()) return;
    expand(Point{r.min_x, r.min_y});
    expand(Point{r.max_x, r.max_y});
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace netvis

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace fresco {

using Vec2 = Eigen::Vector2d;

// Row-major so that (row, col) == (y, x) matches image memory order.
using GrayF = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GrayU8 = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskGrid = GrayU8;  // nonzero = set

struct Box2 {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{-1.0, -1.0};  // empty when hi < lo

  bool empty() const { return hi.x() < lo.x() || hi.y() < lo.y(); }
  void expand(const Vec2& p) {
    if (empty()) {
      lo = hi = p;
    } else {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  void expand(const Box2& b) {
    if (b.empty()) return;
    expand(b.lo);
    expand(b.hi);
  }
  bool contains(const Vec2& p) const {
    return !empty() && p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  bool intersects(const Box2& b) const {
    return !empty() && !b.empty() && lo.x() <= b.hi.x() && b.lo.x() <= hi.x() &&
           lo.y() <= b.hi.y() && b.lo.y() <= hi.y();
  }
  Vec2 size() const { return empty() ? Vec2(0, 0) : Vec2(hi - lo); }
};

inline Box2 bounds_of(const std::vector<Vec2>& pts) {
  Box2 b;
  for (const auto& p : pts) b.expand(p);
  return b;
}

}  // namespace fresco

#pragma once

#include "fresco/types.hpp"

#include <vector>

namespace fresco {

// Simple closed ring, counter-clockwise outer / clockwise holes, pixel units.
using Ring = std::vector<Vec2>;

struct Polygon {
  Ring outer;               // CCW, positive signed area
  std::vector<Ring> holes;  // CW, inside the outer ring
};

struct RigidTransform {
  double theta = 0.0;  // radians, normalized to [0, 2*pi)
  double tx = 0.0;
  double ty = 0.0;

  Vec2 translation() const { return Vec2(tx, ty); }
};

// Union of polygons (possibly overlapping, possibly with holes); membership
// counts boundary points as inside.
struct RegionSet {
  std::vector<Polygon> polygons;
};

double normalize_angle(double theta);

RigidTransform make_transform(double theta, double tx, double ty);
RigidTransform identity_transform();
Vec2 apply(const RigidTransform& t, const Vec2& p);
Polygon apply(const RigidTransform& t, const Polygon& p);
// apply(compose(t1, t2), p) == apply(t1, apply(t2, p))
RigidTransform compose(const RigidTransform& t1, const RigidTransform& t2);
RigidTransform invert(const RigidTransform& t);

double signed_area(const Ring& ring);
double ring_perimeter(const Ring& ring);
double area(const Polygon& p);      // outer area minus holes
double perimeter(const Polygon& p);  // outer ring only
Box2 bounds(const Polygon& p);

// Maps every vertex (x, y) to (-x, -y); orientation invariants restored.
Polygon reflect(const Polygon& p);

bool contains(const Polygon& p, const Vec2& point);
bool contains(const RegionSet& r, const Vec2& point);

// Minkowski sum of the two outer rings (holes do not carve the sum; the
// result over-covers in that case, which is the conservative direction for
// overlap tests). Non-convex inputs are decomposed into convex parts and the
// part-pair sums returned as a union. Throws std::invalid_argument when a
// ring has fewer than 3 vertices.
RegionSet minkowski_sum(const Polygon& p, const Polygon& q);
// Sum with a single point: pure translation.
Polygon minkowski_sum(const Polygon& p, const Vec2& point);

// --- convex machinery (exposed for the sampler and for tests) ---

// Convex CCW ring.
using ConvexPart = Ring;

// Ear-clipping triangulation followed by greedy convex merging.
std::vector<ConvexPart> decompose_convex(const Ring& outer_ccw);

// Minkowski sum of two convex CCW rings (edge merge), CCW result.
ConvexPart convex_minkowski(const ConvexPart& a, const ConvexPart& b);

bool convex_contains(const ConvexPart& part, const Vec2& p, double eps = 1e-9);

// Union-of-convex-parts region with a uniform bucket grid for point queries.
class PartSet {
 public:
  PartSet() = default;
  explicit PartSet(std::vector<ConvexPart> parts);

  bool contains(const Vec2& p) const;
  const Box2& bbox() const { return bbox_; }
  const std::vector<ConvexPart>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }

 private:
  std::vector<ConvexPart> parts_;
  std::vector<Box2> part_boxes_;
  Box2 bbox_;
  double cell_ = 16.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::int32_t>> buckets_;
};

}  // namespace fresco

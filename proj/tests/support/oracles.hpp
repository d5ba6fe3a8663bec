#pragma once

#include "fresco/geometry.hpp"
#include "fresco/rng.hpp"
#include "fresco/types.hpp"

#include <vector>

// Brute-force reference implementations used to derive expected values.
// Everything here is deliberately independent of the library's geometry path:
// shapes are rasterized on a fine grid and set operations run pixelwise.
namespace fresco::oracle {

// Occupancy bitmap of a polygon (holes respected) sampled at `step` pixel
// resolution; cell (ix, iy) covers point origin + (ix + 0.5, iy + 0.5) * step.
struct RasterShape {
  double step = 0.25;
  Vec2 origin{0, 0};
  int w = 0, h = 0;
  std::vector<std::uint8_t> cells;

  bool at(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < w && iy < h && cells[size_t(iy) * w + ix] != 0;
  }
  bool at_point(const Vec2& p) const {
    int ix = int(std::floor((p.x() - origin.x()) / step));
    int iy = int(std::floor((p.y() - origin.y()) / step));
    return at(ix, iy);
  }
  Vec2 cell_center(int ix, int iy) const {
    return origin + Vec2((ix + 0.5) * step, (iy + 0.5) * step);
  }
};

RasterShape rasterize(const Polygon& poly, double step = 0.25, double margin = 1.0);

// Membership of `probe` in p (+) q by testing all pairwise cell offsets.
bool minkowski_contains_brute(const RasterShape& p, const RasterShape& q, const Vec2& probe);

// Do the rasterized p and q-translated-by-t overlap?
bool shapes_overlap(const RasterShape& p, const RasterShape& q, const Vec2& t);

// Do p and the rigid-transformed q share any cell? (transform applied to the
// q cell centers)
bool shapes_overlap_rigid(const RasterShape& p, const RasterShape& q, const RigidTransform& t);

// Random simple-ish blob polygon: a radial star with smooth random radii.
Polygon random_blob(Rng& rng, double mean_radius, int verts = 12, double roughness = 0.45);

}  // namespace fresco::oracle

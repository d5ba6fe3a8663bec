#pragma once

#include "fresco/types.hpp"

#include <optional>
#include <string>

namespace fresco {

struct ImageRGB {
  GrayU8 r, g, b;
  std::optional<GrayU8> alpha;

  int width() const { return int(r.cols()); }
  int height() const { return int(r.rows()); }
};

ImageRGB read_png(const std::string& path);
void write_png(const std::string& path, const ImageRGB& img);
void write_png_gray(const std::string& path, const GrayU8& img);

inline bool in_grid(const GrayU8& g, int x, int y) {
  return x >= 0 && y >= 0 && x < g.cols() && y < g.rows();
}
inline bool in_grid(const GrayF& g, int x, int y) {
  return x >= 0 && y >= 0 && x < g.cols() && y < g.rows();
}

// Bilinear sample at (x, y) in pixel-center coordinates; clamps to the grid.
float sample_bilinear(const GrayF& img, double x, double y);

// Bilinear sample restricted to pixels where `valid` is nonzero; weights are
// renormalized over the valid corners. Returns false when no corner is valid.
bool sample_bilinear_masked(const GrayF& img, const MaskGrid& valid, double x, double y,
                            float* out);

// Rotates image content by `angle` radians about the given center, into a
// canvas large enough to hold the rotated footprint. Colors are sampled
// bilinearly, the mask by its bilinear coverage (> 0.5).
struct RotatedRaster {
  ImageRGB image;
  MaskGrid mask;
  // Maps source pixel coordinates into the rotated canvas:
  // p_out = R(angle) * (p - center) + center + offset.
  Vec2 center;
  Vec2 offset;
  double angle = 0.0;
};
RotatedRaster rotate_raster(const ImageRGB& img, const MaskGrid& mask, double angle);

}  // namespace fresco

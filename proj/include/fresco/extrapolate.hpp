#pragma once

#include "fresco/raster.hpp"

#include <optional>
#include <string>

namespace fresco {

// Fragment plus its synthesized continuation band. Band planes live on a grid
// padded by `pad` pixels on every side; composite(y + pad, x + pad) overlays
// fragment pixel (x, y).
struct ExtrapolatedFragment {
  Fragment base;
  int width = 0;  // band width, px
  int pad = 0;

  MaskGrid band_mask;    // padded grid; disjoint from the material
  MaskGrid region_plus;  // material | band, padded grid
  LabPlanes lab_plus;    // composite colors, padded grid
  ImageRGB pixels_plus;  // composite RGB (debug / rendering)
  Polygon boundary_plus;  // traced from region_plus, fragment-local coords
};

// Band width rule: round(perimeter(boundary) / 6) clamped to [8, 64] px,
// unless overridden. Synthesis works outward one dilation ring at a time;
// each band pixel copies the center of the best-matching 7x7 patch (LAB SSD
// over known pixels) among deterministic candidates: sources suggested by
// already-filled neighbors, seeded random in-material positions, and the
// nearest material pixel. Fragments smaller than a patch fall back to
// nearest-pixel flat extension.
ExtrapolatedFragment extrapolate(const Fragment& fragment,
                                 std::optional<int> width_override = std::nullopt,
                                 double band_ratio = 1.0 / 6.0);

// Debug: composite with the original boundary drawn in yellow.
void dump_extrapolation_png(const ExtrapolatedFragment& ex, const std::string& path);

}  // namespace fresco

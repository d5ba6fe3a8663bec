#pragma once

#include "fresco/geometry.hpp"
#include "fresco/image.hpp"
#include "fresco/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fresco {

struct LabColor {
  float L = 0, a = 0, b = 0;
};

// CIELAB (D65), one plane per channel.
struct LabPlanes {
  GrayF L, a, b;
  int width() const { return int(L.cols()); }
  int height() const { return int(L.rows()); }
};

// sRGB in [0,255] -> CIELAB (D65 white point).
LabColor to_lab(double r, double g, double b);
LabPlanes lab_planes(const ImageRGB& img);

// Inverse conversion, channels clamped to [0, 255].
void lab_to_rgb(const LabColor& c, double* r, double* g, double* b);

// Largest LAB L1 distance realizable between two sRGB colors (cube corners);
// used as the out-of-band penalty in scoring.
float max_lab_l1();

struct Fragment {
  int id = 0;
  ImageRGB pixels;
  MaskGrid mask;  // nonzero = fragment material
  LabPlanes lab;
  Polygon boundary;  // traced from mask, pixel-center coordinates
  Box2 bbox;         // tight bounds of the mask
  std::int64_t material_count = 0;
};

// Builds a Fragment from an image and mask of equal dimensions. The mask is
// reduced to its largest 4-connected component; specks under 16 px and
// pinholes under 8 px are dropped. Throws std::invalid_argument on dimension
// mismatch or an empty mask.
Fragment load_fragment(const ImageRGB& image, const MaskGrid& mask, int id);

// PNG convenience: when mask_path is empty the image's alpha channel
// (alpha > 127) serves as the mask.
Fragment load_fragment_png(const std::string& image_path, const std::string& mask_path, int id);

using AssignGrid = Eigen::Array<std::int16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Palette {
  int k = 0;            // actual color count (may be below the requested k)
  int requested_k = 0;  // the k the caller asked for; weights use 1/requested_k
  std::vector<LabColor> colors;
  AssignGrid assignment;  // -1 outside the region
};

// k-means over the in-region LAB pixels: k-means++ seeding from `seed`,
// Lloyd iterations until centroids move < 1e-3 or 50 rounds. Fewer distinct
// colors than k pads k down.
Palette build_palette(const LabPlanes& lab, const MaskGrid& region, int k, std::uint64_t seed);
Palette build_palette(const Fragment& f, int k);

// Palettes for every k in `ks` (ascending), each seeded from the previous
// one's centroids so quantization error is non-increasing in k.
std::vector<Palette> build_palettes(const LabPlanes& lab, const MaskGrid& region,
                                    const std::vector<int>& ks, std::uint64_t seed);

double quantization_error(const LabPlanes& lab, const MaskGrid& region, const Palette& p);

struct GradientField {
  GrayF direction;  // radians in [0, 2*pi), from Sobel on L
  GrayF weight;     // sum of 1/k over palettes whose assignment has an edge here
};

// Weight at a pixel is the sum of 1/k over every palette in which the pixel's
// assigned index differs from an in-region 4-neighbor. Directions come from
// Sobel on the unquantized L channel (region values extended 2 px outward so
// boundary pixels see valid neighborhoods).
GradientField palette_gradient_field(const LabPlanes& lab, const MaskGrid& region,
                                     const std::vector<Palette>& palettes);
GradientField palette_gradient_field(const Fragment& f, const std::vector<Palette>& palettes);

// Debug: weight as brightness, direction as hue.
void dump_gradient_field_png(const GradientField& field, const std::string& path);

// --- tracing internals (exposed for tests) ---

// Boundary of the mask's set pixels along pixel-cell edges, simplified with a
// side-aware Douglas-Peucker: deviation toward the material side is capped at
// `tight_tol` so every set pixel center stays enclosed, the free side at
// `tol`. With keep_inside=true the roles flip (polygon stays within the
// region; used for extrapolation bands).
Polygon trace_boundary(const MaskGrid& mask, double tol = 1.5, bool keep_inside = false);

}  // namespace fresco

#pragma once

#include "fresco/geometry.hpp"
#include "fresco/image.hpp"
#include "fresco/raster.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fresco {

struct PuzzleSpec {
  int n_fragments = 2;
  double erosion_px = 0.0;
  double fade_amp = 0.0;        // relative L jitter amplitude per fragment
  double saturation_amp = 0.0;  // max pull of a/b toward gray
  double mottle_amp = 0.0;      // LAB units of abrasion-like noise
  std::uint64_t seed = 0;
};

struct GroundTruth {
  // pose[id] maps the emitted fragment raster into the source frame
  std::vector<RigidTransform> poses;
  std::vector<std::pair<int, int>> adjacency;  // i < j, symmetric by convention
};

struct GeneratedPuzzle {
  std::vector<ImageRGB> images;  // per fragment, tight crops
  std::vector<MaskGrid> masks;
  GroundTruth truth;
  // source-frame debug data: cell labels and post-erosion masks
  Eigen::Array<std::int16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> labels;
  std::vector<MaskGrid> source_masks;
};

// Voronoi cells with fractal crack wiggle, per-cell erosion, fade/mottle
// degradation, and a random scatter rotation per fragment. Cells that erode
// below 16 px trigger a reseeded retry (up to 10, then an error).
GeneratedPuzzle fragment_image(const ImageRGB& source, const PuzzleSpec& spec);

struct DegradeParams {
  double l_factor = 1.0;      // multiplies L
  double desaturation = 0.0;  // 0 = none, 1 = gray
  double mottle_amp = 0.0;    // LAB units (sigma), clipped at 3 sigma
};

// In-mask pixels only; the mask itself is unchanged.
void degrade(ImageRGB* pixels, const MaskGrid& mask, const DegradeParams& dp, std::uint64_t seed);

// Procedural fresco-like test picture (large-scale shapes, strokes, and mild
// texture) for benchmarks that need a source photograph stand-in.
ImageRGB make_synthetic_artwork(int w, int h, std::uint64_t seed);

// Puzzle directory: fragment_<id>.png, fragment_<id>_mask.png, truth.json.
void write_puzzle_dir(const std::string& dir, const GeneratedPuzzle& puzzle,
                      const PuzzleSpec& spec);

struct PuzzleDir {
  std::vector<Fragment> fragments;
  bool has_truth = false;
  GroundTruth truth;
};
PuzzleDir read_puzzle_dir(const std::string& dir, bool need_truth = false);

}  // namespace fresco

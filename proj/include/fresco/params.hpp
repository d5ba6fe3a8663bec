#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fresco {

struct SolverParams {
  int n_rotations = 80;
  double translation_step = 5.0;  // px
  double alpha = 2.0;
  double gamma_h = 0.85;
  double gamma_l = 0.5;
  std::vector<int> palette_ks = {3, 4, 6, 8, 10};
  int histogram_bins = 36;
  double histogram_sigma = 1.0;  // bins
  int restarts = 5;
  double neighbor_threshold = 2.0 / 3.0;
  double band_ratio = 1.0 / 6.0;
  int candidates_per_pair = 10;
  double refine_radius = 5.0;         // px
  double refine_angle = 4.5 * 0.017453292519943295;  // radians
  double refine_step = 1.0;           // px
  double refine_angle_step = 0.5 * 0.017453292519943295;
  double term_scale = 1.0;  // multiplies d_h relative to d_c; 1 = as written

  void validate() const;  // throws std::invalid_argument on bad values
};

// Parses a JSON document overriding any subset of fields (keys as named
// above); unknown keys are an error.
SolverParams params_from_json(const std::string& json_text, SolverParams base = {});
std::string params_to_json(const SolverParams& p);

// Stable hash over every field, for cache keys.
std::uint64_t params_hash(const SolverParams& p);

}  // namespace fresco

#include "fresco/params.hpp"

#include "fresco/rng.hpp"

#include <json.hpp>

#include <cstring>
#include <stdexcept>

namespace fresco {

using nlohmann::json;

void SolverParams::validate() const {
  auto req = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SolverParams: ") + what);
  };
  req(n_rotations > 0, "n_rotations must be positive");
  req(translation_step > 0, "translation_step must be positive");
  req(alpha > 0, "alpha must be positive");
  req(gamma_h > 0 && gamma_h <= 1, "gamma_h must be in (0,1]");
  req(gamma_l > 0 && gamma_l < gamma_h, "gamma_l must be positive and < gamma_h");
  req(!palette_ks.empty(), "palette_ks must be non-empty");
  for (int k : palette_ks) req(k >= 2, "palette k must be >= 2");
  req(histogram_bins > 0, "histogram_bins must be positive");
  req(histogram_sigma > 0, "histogram_sigma must be positive");
  req(restarts > 0, "restarts must be positive");
  req(neighbor_threshold > 0 && neighbor_threshold < 1, "neighbor_threshold in (0,1)");
  req(band_ratio > 0, "band_ratio must be positive");
  req(candidates_per_pair >= 0, "candidates_per_pair must be >= 0");
  req(refine_radius >= 0 && refine_step > 0, "refine grid must be positive");
  req(refine_angle >= 0 && refine_angle_step > 0, "refine angle grid must be positive");
}

namespace {

json to_json_obj(const SolverParams& p) {
  return json{{"n_rotations", p.n_rotations},
              {"translation_step", p.translation_step},
              {"alpha", p.alpha},
              {"gamma_h", p.gamma_h},
              {"gamma_l", p.gamma_l},
              {"palette_ks", p.palette_ks},
              {"histogram_bins", p.histogram_bins},
              {"histogram_sigma", p.histogram_sigma},
              {"restarts", p.restarts},
              {"neighbor_threshold", p.neighbor_threshold},
              {"band_ratio", p.band_ratio},
              {"candidates_per_pair", p.candidates_per_pair},
              {"refine_radius", p.refine_radius},
              {"refine_angle", p.refine_angle},
              {"refine_step", p.refine_step},
              {"refine_angle_step", p.refine_angle_step},
              {"term_scale", p.term_scale}};
}

}  // namespace

SolverParams params_from_json(const std::string& json_text, SolverParams base) {
  json j = json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("params file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "n_rotations") base.n_rotations = it.value().get<int>();
    else if (k == "translation_step") base.translation_step = it.value().get<double>();
    else if (k == "alpha") base.alpha = it.value().get<double>();
    else if (k == "gamma_h") base.gamma_h = it.value().get<double>();
    else if (k == "gamma_l") base.gamma_l = it.value().get<double>();
    else if (k == "palette_ks") base.palette_ks = it.value().get<std::vector<int>>();
    else if (k == "histogram_bins") base.histogram_bins = it.value().get<int>();
    else if (k == "histogram_sigma") base.histogram_sigma = it.value().get<double>();
    else if (k == "restarts") base.restarts = it.value().get<int>();
    else if (k == "neighbor_threshold") base.neighbor_threshold = it.value().get<double>();
    else if (k == "band_ratio") base.band_ratio = it.value().get<double>();
    else if (k == "candidates_per_pair") base.candidates_per_pair = it.value().get<int>();
    else if (k == "refine_radius") base.refine_radius = it.value().get<double>();
    else if (k == "refine_angle") base.refine_angle = it.value().get<double>();
    else if (k == "refine_step") base.refine_step = it.value().get<double>();
    else if (k == "refine_angle_step") base.refine_angle_step = it.value().get<double>();
    else if (k == "term_scale") base.term_scale = it.value().get<double>();
    else throw std::invalid_argument("unknown SolverParams field: " + k);
  }
  return base;
}

std::string params_to_json(const SolverParams& p) { return to_json_obj(p).dump(2); }

std::uint64_t params_hash(const SolverParams& p) {
  std::string s = to_json_obj(p).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace fresco

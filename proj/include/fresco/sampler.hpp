#pragma once

#include "fresco/extrapolate.hpp"
#include "fresco/geometry.hpp"
#include "fresco/params.hpp"

#include <string>
#include <vector>

namespace fresco {

// One rotation's translational spaces for an ordered (obstacle, robot) pair:
// material = translations where the robot's material overlaps the obstacle's
// material; band = translations where it overlaps the obstacle's extended
// region (material + band). Free space is the material set's complement.
struct PairSlice {
  PartSet material;
  PartSet band;
};

// Convex decompositions reused across every rotation of a pair.
struct PairGeometry {
  std::vector<ConvexPart> mat_i, plus_i;
  std::vector<ConvexPart> mat_j, plus_j;
};
PairGeometry decompose_pair(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj);

// C-space slices at `theta` for obstacle parts vs robot parts (robot rotated
// by theta, then reflected).
PartSet build_cspace(const std::vector<ConvexPart>& obstacle_parts,
                     const std::vector<ConvexPart>& robot_parts, double theta);

struct PairConfigSpace {
  int id_i = 0, id_j = 0;
  int n_rotations = 0;
  std::vector<int> angle_indices;    // which slice indices are built
  std::vector<PairSlice> ij;         // obstacle i, robot j, per built angle
  std::vector<PairSlice> ji;         // obstacle j, robot i, per built angle
  std::vector<int> slot_of_index;    // n_rotations entries, -1 = not built

  double angle_step() const { return 6.283185307179586476925287 / double(n_rotations); }
  bool has_index(int k) const {
    return k >= 0 && k < int(slot_of_index.size()) && slot_of_index[k] >= 0;
  }
};

// Builds the slices for every sampled rotation (or the given subset). When
// cache_dir is non-empty, slices round-trip through a file keyed by the two
// fragments' content hashes and the parameter hash.
PairConfigSpace build_pair_space(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj,
                                 const SolverParams& params, const std::string& cache_dir = "");
PairConfigSpace build_pair_space_slices(const ExtrapolatedFragment& fi,
                                        const ExtrapolatedFragment& fj,
                                        const SolverParams& params,
                                        const std::vector<int>& angle_indices);

// Validation operator: the transform's rotation is snapped to the nearest
// sampled slice; throws std::invalid_argument when that slice was not built.
// Checks both role orders (the swapped one at the inverse rotation).
bool is_valid(const RigidTransform& t, const PairConfigSpace& space);

// Grid-samples translations (translation_step, integer-anchored) over the
// band slice's bounding box for each built rotation and keeps the transforms
// passing is_valid.
std::vector<RigidTransform> sample_valid(const PairConfigSpace& space, const SolverParams& params);
std::vector<RigidTransform> sample_valid_at(const PairConfigSpace& space,
                                            const SolverParams& params, int angle_index);

std::uint64_t fragment_content_hash(const Fragment& f);

}  // namespace fresco

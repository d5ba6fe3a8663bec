#pragma once

#include "fresco/confidence.hpp"
#include "fresco/generator.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace fresco {

struct Assembly {
  std::map<int, RigidTransform> placements;  // fragment id -> global pose
  std::vector<int> order;                    // placement sequence
  std::vector<double> step_confidences;      // confidence of each executed placement
  double total_confidence = 0.0;
  std::uint64_t seed = 0;  // restart seed that produced this assembly
  bool partial = false;
  std::vector<int> unplaced;
};

// Convex decompositions of one fragment's material and extended outlines,
// shared by legality checks.
struct FragGeom {
  std::vector<ConvexPart> material;
  std::vector<ConvexPart> extended;
  double radius_material = 0;  // max vertex norm, for cheap distance culls
  double radius_extended = 0;
};
FragGeom make_frag_geom(const ExtrapolatedFragment& ex);

// Lazily built (obstacle, robot, rotation-slice) C-space slices; thread-safe.
class SliceCache {
 public:
  SliceCache(std::vector<const FragGeom*> geoms, const SolverParams& params);
  const PairSlice& get(int obstacle, int robot, int angle_index);
  double angle_step() const;
  int snap(double theta) const;

 private:
  std::vector<const FragGeom*> geoms_;
  const SolverParams& params_;
  std::map<std::tuple<int, int, int>, std::unique_ptr<PairSlice>> slices_;
  std::mutex mu_;
};

// Physically-possible test: for every placed fragment i, the relative
// transform stays outside the material C-space of (i, j), rotation snapped to
// the nearest sampled slice.
bool is_legal(const RigidTransform& t_j, int j, const std::map<int, RigidTransform>& placements,
              SliceCache& cache);

// Valid against the assembly: legal for every placed fragment and band-valid
// (both role orders) against at least one.
bool is_valid_against_assembly(const RigidTransform& t_j, int j,
                               const std::map<int, RigidTransform>& placements,
                               SliceCache& cache);

// Euclidean distance (px) from each cell to the nearest non-material cell;
// zero outside the material. Computed on the ScoringData's padded grid.
GrayF material_distance_field(const ScoringData& sd);

// Deep-overlap test at exact poses (no rotation snapping): true when either
// fragment's boundary pixels penetrate more than `threshold` px into the
// other's material. This is the commit-time guarantee behind the
// overlap-free invariant; exactly-touching placements pass.
bool deep_penetration(const ScoringData& a, const GrayF& dist_a, const RigidTransform& pose_a,
                      const ScoringData& b, const GrayF& dist_b, const RigidTransform& pose_b,
                      double threshold = 1.5);

struct RescoredCandidate {
  double d_canvas = kInfiniteDissimilarity;    // curve on the placed union's boundary
  double d_fragment = kInfiniteDissimilarity;  // curve on the candidate fragment
  OverlapCurve curve_canvas, curve_fragment;
};
// Dissimilarity with the virtual placed fragment substituted for the partner;
// t_cf maps the fragment's local frame into the canvas frame.
RescoredCandidate rescore_against_placed(const ScoringData& canvas, const ScoringData& fragment,
                                         const RigidTransform& t_cf, const SolverParams& params);

// Highest-confidence pair link seeds the assembly (ties: longer combined
// curve, then lower ids). Throws std::runtime_error when no links exist.
Assembly seed_placement(const std::vector<PairLink>& links);

// Exhaustive legal+valid grid search around t_j minimizing
// d(placed, frag+, T) + d(frag, placed+, T); falls back to t_j. `sds` and
// `dists` are indexed by fragment id and cover every placed fragment plus j.
RigidTransform refine(const RigidTransform& t_j, int j, const ScoringData& canvas,
                      const std::vector<const ScoringData*>& sds,
                      const std::vector<const GrayF*>& dists,
                      const std::map<int, RigidTransform>& placements, SliceCache& cache,
                      const SolverParams& params);

struct SolveOptions {
  std::uint64_t seed = 0;
  std::string cache_dir;  // optional pair-space disk cache
  std::function<void(int pass, int step, const ImageRGB&)> snapshot;
  std::vector<ScoreBreakdown>* score_dump = nullptr;
};

struct SolveResult {
  Assembly assembly;  // best pass, poses in the input fragments' pixel frames
  std::vector<double> pass_totals;
};

// Multi-restart greedy assembly over the given fragments.
SolveResult solve(const std::vector<Fragment>& fragments, const SolverParams& params,
                  const SolveOptions& opts = {});

// Composite of the placed fragments, borders tinted cyan, canvas covering the
// placed bounding box plus a margin.
ImageRGB render_assembly(const std::vector<Fragment>& fragments,
                         const std::map<int, RigidTransform>& placements, int margin = 10);

// Post-hoc raster audit: number of canvas pixels claimed by two fragments'
// interiors (pixels more than 1 px inside their own boundary).
std::int64_t audit_material_overlap(const std::vector<Fragment>& fragments,
                                    const std::map<int, RigidTransform>& placements);

}  // namespace fresco

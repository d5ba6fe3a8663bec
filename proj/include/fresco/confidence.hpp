#pragma once

#include "fresco/sampler.hpp"
#include "fresco/scoring.hpp"

#include <optional>
#include <vector>

namespace fresco {

// One scored relative placement of an ordered fragment pair: t maps j's local
// frame into i's. Curves index the two sides' boundary arrays.
struct MatchCandidate {
  int i = 0, j = 0;
  RigidTransform t;
  OverlapCurve curve_ij;  // on i's boundary
  OverlapCurve curve_ji;  // on j's boundary
  double d_ij = kInfiniteDissimilarity;
  double d_ji = kInfiniteDissimilarity;
  double dc_ij = 0, dh_ij = 0, dc_ji = 0, dh_ji = 0;
  double c_hat_ij = 0;  // raw confidence of (i, j, t)
  double c_hat_ji = 0;  // raw confidence of (j, i, invert(t))
  // grid-neighbor entries kept purely as competitor-pool members; never
  // placement candidates themselves
  bool pool_only = false;

  double rank() const { return d_ij + d_ji; }
};

// The same candidate read from the other fragment's perspective.
MatchCandidate mirrored(const MatchCandidate& c);

// Intersection over union of two curves on the same boundary raster;
// 0 when both are empty.
double xfsim(const OverlapCurve& a, const OverlapCurve& b);

// Same match on both fragments: curve IoU >= gamma_h on the i and j sides.
bool are_nearby(const MatchCandidate& c1, const MatchCandidate& c2, const SolverParams& params);

// Candidates contesting the target's boundary region on fragment i: curve IoU
// above gamma_l against any candidate of (i, m); same-pair candidates must
// additionally not be nearby. `pool` entries must expose their curve on i.
struct CompetitorView {
  const OverlapCurve* curve_on_i = nullptr;
  double d_on_i = kInfiniteDissimilarity;
  int partner = -1;       // m
  const MatchCandidate* owner = nullptr;
  bool flipped = false;   // owner stored as (m, i)
};
std::vector<CompetitorView> competitors(const MatchCandidate& target,
                                        const std::vector<CompetitorView>& pool_for_i,
                                        const SolverParams& params);

// 1 - d_target / d_best_competitor, clamped to [0, 1]; 1 with no competitors.
double raw_confidence(double d_target, const std::vector<CompetitorView>& competitor_pool);

struct PairLink {
  int i = 0, j = 0;
  RigidTransform t1;  // places j about i
  RigidTransform t2;  // places i about j (near-inverse of t1)
  double c = 0;
  std::int64_t combined_curve_len = 0;
};

// Eq.-10 style pair confidence: mean of the two raw confidences when the
// curves of t2's inverse agree with t1's on both fragments (IoU >= gamma_h);
// nullopt otherwise. c1 is ordered (i, j), c2 ordered (j, i).
std::optional<PairLink> pair_confidence(const MatchCandidate& c1, const MatchCandidate& c2,
                                        const SolverParams& params);

// Sampling + scoring + retention for one unordered pair: every geometry-valid
// grid transform is scored in both directions; the best (by d_ij + d_ji)
// survive near-duplicate suppression (are_nearby) up to 4*candidates_per_pair
// entries. Returned ascending by rank.
std::vector<MatchCandidate> build_candidate_store(const ScoringData& si, const ScoringData& sj,
                                                  const PairConfigSpace& space,
                                                  const SolverParams& params);

// Fills c_hat_ij / c_hat_ji for every candidate, with competitor pools drawn
// from all stores sharing a fragment.
void compute_confidences(std::vector<std::vector<MatchCandidate>>& stores,
                         const SolverParams& params);

// Placement candidate subset: the best mutually non-competing entries
// (pairwise curve IoU on either side <= gamma_l), up to candidates_per_pair.
std::vector<int> placement_candidates(const std::vector<MatchCandidate>& store,
                                      const SolverParams& params);

}  // namespace fresco

#pragma once

#include "fresco/extrapolate.hpp"
#include "fresco/params.hpp"
#include "fresco/raster.hpp"

#include <iosfwd>
#include <limits>
#include <vector>

namespace fresco {

// Boundary pixels of one side that land inside the other side's transformed
// band; stored as indices into the owning ScoringData's boundary arrays.
// Possibly multiple disconnected runs.
struct OverlapCurve {
  std::vector<std::int32_t> ids;
  int length() const { return int(ids.size()); }
};

struct GradientHistogram {
  std::vector<double> bins;
  double total() const;
};

// Everything scoring needs about one matching side: composite planes (pad px
// larger than the local frame on every side), the palette gradient field on
// the composite, and the material boundary pixels with per-pixel color,
// weight, direction, and histogram bin, bucketed for range queries.
struct ScoringData {
  int id = 0;
  int pad = 0;
  LabPlanes lab;      // composite (material + band)
  MaskGrid band;      // band only
  MaskGrid region;    // material | band
  MaskGrid shallow;   // band within 6 px of the material (trustworthy ring)
  GradientField field;
  std::vector<Palette> palettes;

  // material boundary pixels in local coords, sorted by bucket cell
  std::vector<std::int32_t> px, py;
  std::vector<float> pL, pa, pb, pw, pdir;
  std::vector<std::uint8_t> pbin;
  Box2 bbox;  // of the boundary pixels
  double cell = 16.0;
  int cells_x = 0, cells_y = 0;
  double cell_x0 = 0, cell_y0 = 0;
  std::vector<std::int32_t> cell_start;  // CSR, cells_x*cells_y + 1 entries

  int count() const { return int(px.size()); }
};

// Palettes (chained over params.palette_ks, seeded by the fragment id),
// gradient field, and boundary arrays for one extrapolated fragment.
ScoringData build_scoring_data(const ExtrapolatedFragment& ex, const SolverParams& params);

// Assembles a ScoringData from raw planes (used for the virtual placed
// fragment, whose planes live on a global canvas).
ScoringData build_scoring_data_from_planes(int id, const MaskGrid& material, const MaskGrid& band,
                                           const LabPlanes& lab, const GradientField& field,
                                           const SolverParams& params);

// Psi = boundary(a) intersect t(band of b); t maps b's local frame into a's.
OverlapCurve overlap_curve(const ScoringData& a, const ScoringData& b, const RigidTransform& t);

std::vector<Eigen::Vector2i> curve_points(const ScoringData& a, const OverlapCurve& curve);

// Sum over curve pixels of the L1 LAB distance between a's boundary pixel and
// b's composite sampled bilinearly at the pulled-back position. Pixels whose
// pull-back misses b's band entirely contribute the largest realizable LAB L1
// distance instead.
double color_term(const ScoringData& a, const ScoringData& b, const RigidTransform& t,
                  const OverlapCurve& curve);

// Weighted direction histogram of field values at the given points
// (field-grid coordinates), directions rotated by `rotate_directions`,
// circularly smoothed with a Gaussian of params.histogram_sigma bins.
GradientHistogram gradient_histogram(const std::vector<Eigen::Vector2i>& points,
                                     const GradientField& field, const SolverParams& params,
                                     double rotate_directions = 0.0);

// Sum over bins of |h1 - h2| * (1 + ln(max/min)), with the ratio capped at
// 1e3 when the smaller bin is zero; bins that are both zero contribute 0.
double histogram_term(const GradientHistogram& h1, const GradientHistogram& h2);

constexpr double kInfiniteDissimilarity = std::numeric_limits<double>::infinity();

struct DirScore {
  double d = kInfiniteDissimilarity;
  double d_c = 0.0;
  double d_h = 0.0;
  std::int32_t len = 0;
  // color error restricted to the shallow band ring, where the synthesized
  // continuation is reliable; used to rank candidate admission
  double d_c_shallow = 0.0;
  std::int32_t len_shallow = 0;
};

// One direction of Eq.-style dissimilarity: curve on a's boundary against b's
// band under t, (term_scale*d_h + d_c) / len^alpha; empty curve gives +inf.
DirScore score_direction(const ScoringData& a, const ScoringData& b, const RigidTransform& t,
                         const SolverParams& params, OverlapCurve* curve_out = nullptr);

inline double dissimilarity(const ScoringData& a, const ScoringData& b, const RigidTransform& t,
                            const SolverParams& params) {
  return score_direction(a, b, t, params).d;
}

// Batch scorer for one rotation: resamples b's composite on a's integer
// offset lattice once, then each integer translation scores with table
// lookups. score_ij puts the curve on a's boundary, score_ji on b's.
class PairAngleScorer {
 public:
  PairAngleScorer(const ScoringData& a, const ScoringData& b, double theta,
                  const SolverParams& params);

  DirScore score_ij(std::int64_t tx, std::int64_t ty, std::vector<std::int32_t>* ids) const;
  DirScore score_ji(std::int64_t tx, std::int64_t ty, std::vector<std::int32_t>* ids) const;
  double theta() const { return theta_; }

 private:
  const ScoringData& a_;
  const ScoringData& b_;
  const SolverParams& params_;
  double theta_;

  // ij tables on the u = p - tau lattice
  int ux0_ = 0, uy0_ = 0, uw_ = 0, uh_ = 0;
  std::vector<std::uint8_t> band4_;
  std::vector<float> tL_, ta_, tb_, tw_;
  std::vector<std::uint8_t> tbin_;

  // ji: b's boundary rotated by theta; fractional parts fixed per pixel
  std::vector<std::int32_t> jx0_, jy0_;  // floor of rotated position
  std::vector<float> jw_[4];             // bilinear corner weights
  std::vector<std::int32_t> jrx_, jry_;  // rounded position for field reads
  Box2 jbox_;                            // bbox of rotated b boundary pixels
};

struct ScoreBreakdown {
  int i = 0, j = 0;
  RigidTransform t;
  double d_c = 0, d_h = 0;
  int length = 0;
  double d = 0;
};

// CSV-like debug table (one row per candidate direction).
void write_score_table(const std::vector<ScoreBreakdown>& rows, std::ostream& out);

}  // namespace fresco

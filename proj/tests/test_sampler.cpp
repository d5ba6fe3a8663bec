#include "fresco/sampler.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace fresco;
using fresco::fixtures::solid_fragment;

namespace {

SolverParams test_params() {
  SolverParams p;
  return p;
}

// Raster oracle for Eq.-1 validity: rasterize the traced polygons at 0.25 px
// and test material overlap plus band/material contact, both role orders.
struct ValidityOracle {
  oracle::RasterShape mat_i, plus_i, mat_j, plus_j;

  explicit ValidityOracle(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj)
      : mat_i(oracle::rasterize(fi.base.boundary)),
        plus_i(oracle::rasterize(fi.boundary_plus)),
        mat_j(oracle::rasterize(fj.base.boundary)),
        plus_j(oracle::rasterize(fj.boundary_plus)) {}

  bool operator()(const RigidTransform& t) const {
    if (oracle::shapes_overlap_rigid(mat_i, mat_j, t)) return false;
    if (!oracle::shapes_overlap_rigid(plus_i, mat_j, t)) return false;
    RigidTransform inv = invert(t);
    if (oracle::shapes_overlap_rigid(mat_j, mat_i, inv)) return false;
    if (!oracle::shapes_overlap_rigid(plus_j, mat_i, inv)) return false;
    return true;
  }
};

}  // namespace

TEST_CASE("sampler: box pair material space is the summed box") {
  Fragment a = solid_fragment(10, 10, 200, 100, 50, 0);
  Fragment b = solid_fragment(10, 10, 50, 100, 200, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space_slices(ea, eb, p, {0});

  // material C-space at theta=0: [-10, 10]^2 box (pixel extents +-0.5)
  const PairSlice& s = space.ij[0];
  CHECK(s.material.contains(Vec2(0, 0)));
  CHECK(s.material.contains(Vec2(9.4, 9.4)));
  CHECK_FALSE(s.material.contains(Vec2(10.6, 0)));
  CHECK(s.material.bbox().lo.x() == doctest::Approx(-10.0).epsilon(1e-6));
  CHECK(s.material.bbox().hi.x() == doctest::Approx(10.0).epsilon(1e-6));

  // band superset: everything in material is inside the band space
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    Vec2 probe(rng.uniform(-30, 30), rng.uniform(-30, 30));
    if (s.material.contains(probe)) CHECK(s.band.contains(probe));
  }
}

TEST_CASE("sampler: is_valid basic placements") {
  Fragment a = solid_fragment(50, 50, 200, 100, 50, 0);
  Fragment b = solid_fragment(50, 50, 50, 100, 200, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space(ea, eb, p);

  // side by side with a 1-px gap
  CHECK(is_valid(make_transform(0, 51, 0), space));
  // identical placement overlaps
  CHECK_FALSE(is_valid(make_transform(0, 0, 0), space));
  // far away, no band contact
  CHECK_FALSE(is_valid(make_transform(0, 500, 0), space));
}

TEST_CASE("sampler: is_valid requires a built slice") {
  Fragment a = solid_fragment(12, 12, 10, 10, 10, 0);
  Fragment b = solid_fragment(12, 12, 20, 20, 20, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space_slices(ea, eb, p, {0});
  CHECK_NOTHROW(is_valid(make_transform(0, 13, 0), space));
  CHECK_THROWS_AS(is_valid(make_transform(0.7, 13, 0), space), std::invalid_argument);
}

TEST_CASE("sampler: role symmetry") {
  Rng rng(9);
  ImageRGB img = fixtures::textured_image(72, 72, 4);
  Fragment a = fixtures::blob_fragment(img, rng, 26, 0);
  Fragment b = fixtures::blob_fragment(img, rng, 20, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace sij = build_pair_space(ea, eb, p);
  PairConfigSpace sji = build_pair_space(eb, ea, p);

  const double step = sij.angle_step();
  for (int i = 0; i < 400; ++i) {
    int k = int(rng.range(std::uint64_t(p.n_rotations)));
    RigidTransform t = make_transform(k * step, rng.uniform(-80, 80), rng.uniform(-80, 80));
    CHECK(is_valid(t, sij) == is_valid(invert(t), sji));
  }
}

TEST_CASE("sampler: sampled transforms satisfy the raster oracle") {
  Rng rng(21);
  ImageRGB img = fixtures::textured_image(64, 64, 7);
  Fragment a = fixtures::blob_fragment(img, rng, 22, 0);
  Fragment b = fixtures::blob_fragment(img, rng, 18, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space_slices(ea, eb, p, {0, 17, 40});
  auto samples = sample_valid(space, p);
  REQUIRE(samples.size() > 50);

  // soundness at 1-px resolution: zero material overlap, band contact present
  oracle::RasterShape mat_i = oracle::rasterize(a.boundary, 1.0);
  oracle::RasterShape mat_j = oracle::rasterize(b.boundary, 1.0);
  // tolerance: erode i's shape for the overlap check by testing interior-only
  oracle::RasterShape plus_i = oracle::rasterize(ea.boundary_plus, 1.0, 2.0);
  for (size_t idx = 0; idx < samples.size(); idx += 3) {
    const RigidTransform& t = samples[idx];
    // material overlap beyond 1 px of the boundary is forbidden
    int deep_overlap = 0;
    for (int iy = 0; iy < mat_j.h; ++iy)
      for (int ix = 0; ix < mat_j.w; ++ix) {
        if (!mat_j.at(ix, iy)) continue;
        Vec2 q = apply(t, mat_j.cell_center(ix, iy));
        // interior test: in material and all 4 neighbors at 1 px also inside
        if (!mat_i.at_point(q)) continue;
        if (mat_i.at_point(q + Vec2(1, 0)) && mat_i.at_point(q + Vec2(-1, 0)) &&
            mat_i.at_point(q + Vec2(0, 1)) && mat_i.at_point(q + Vec2(0, -1)))
          ++deep_overlap;
      }
    CHECK(deep_overlap == 0);

    // contact: transformed j material must touch the (dilated) extended region
    bool contact = false;
    for (int iy = 0; iy < mat_j.h && !contact; ++iy)
      for (int ix = 0; ix < mat_j.w && !contact; ++ix) {
        if (!mat_j.at(ix, iy)) continue;
        Vec2 q = apply(t, mat_j.cell_center(ix, iy));
        for (int dy = -1; dy <= 1 && !contact; ++dy)
          for (int dx = -1; dx <= 1 && !contact; ++dx)
            if (plus_i.at_point(q + Vec2(dx, dy))) contact = true;
      }
    CHECK(contact);
  }
}

TEST_CASE("sampler: completeness near a planted adjacency") {
  // two crops of one image, truth offset (32, 0) with a 2-px gap
  ImageRGB img = fixtures::textured_image(80, 48, 11);
  Fragment a = fixtures::crop_fragment(img, 0, 0, 30, 40, 0);
  Fragment b = fixtures::crop_fragment(img, 32, 0, 30, 40, 1);
  ExtrapolatedFragment ea = extrapolate(a, 10);
  ExtrapolatedFragment eb = extrapolate(b, 10);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space(ea, eb, p);
  auto samples = sample_valid(space, p);
  REQUIRE(!samples.empty());

  const RigidTransform truth = make_transform(0, 32, 0);
  double best_d = 1e30, best_ang = 1e30;
  for (const auto& t : samples) {
    double d = (t.translation() - truth.translation()).norm();
    double ang = std::min(t.theta, 6.283185307179586 - t.theta);
    if (d < best_d) {
      best_d = d;
      best_ang = ang;
    }
  }
  CHECK(best_d <= p.translation_step * std::sqrt(2.0) + 1e-9);
  CHECK(best_ang <= 6.283185307179586 / p.n_rotations + 1e-9);
}

TEST_CASE("sampler: agreement with the validity oracle") {
  Rng rng(31);
  ImageRGB img = fixtures::textured_image(56, 56, 13);
  Fragment a = fixtures::blob_fragment(img, rng, 18, 0);
  Fragment b = fixtures::blob_fragment(img, rng, 15, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space_slices(ea, eb, p, {0, 10, 33});
  ValidityOracle oracle_check(ea, eb);

  int disagreements = 0, n = 0;
  const double step = space.angle_step();
  for (int s : {0, 10, 33}) {
    for (int i = 0; i < 150; ++i) {
      RigidTransform t = make_transform(s * step, rng.uniform(-60, 60), rng.uniform(-60, 60));
      bool ours = is_valid(t, space);
      bool brute = oracle_check(t);
      ++n;
      if (ours != brute) {
        ++disagreements;
        // any disagreement must sit within 1 px of a decision boundary
        bool near_edge = false;
        for (int k = 0; k < 8 && !near_edge; ++k) {
          double ang = 0.785398163 * k;
          RigidTransform nb = make_transform(t.theta, t.tx + std::cos(ang), t.ty + std::sin(ang));
          if (is_valid(nb, space) != ours || oracle_check(nb) != brute) near_edge = true;
        }
        CHECK(near_edge);
      }
    }
  }
  CHECK(double(disagreements) <= 0.02 * double(n));
}

TEST_CASE("sampler: empty band yields no samples") {
  Fragment a = solid_fragment(20, 20, 1, 2, 3, 0);
  Fragment b = solid_fragment(20, 20, 3, 2, 1, 1);
  ExtrapolatedFragment ea = extrapolate(a, 0);  // zero-width override
  ExtrapolatedFragment eb = extrapolate(b, 0);
  SolverParams p = test_params();
  PairConfigSpace space = build_pair_space_slices(ea, eb, p, {0});
  auto samples = sample_valid(space, p);
  CHECK(samples.empty());
}

TEST_CASE("sampler: disk cache round trip") {
  Fragment a = solid_fragment(16, 16, 9, 9, 9, 0);
  Fragment b = solid_fragment(16, 16, 200, 9, 9, 1);
  ExtrapolatedFragment ea = extrapolate(a, 8);
  ExtrapolatedFragment eb = extrapolate(b, 8);
  SolverParams p = test_params();

  auto dir = std::filesystem::temp_directory_path() / "fresco_space_cache_test";
  std::filesystem::remove_all(dir);
  PairConfigSpace cold = build_pair_space(ea, eb, p, dir.string());
  bool have_file = false;
  for (auto& e : std::filesystem::directory_iterator(dir)) have_file |= e.is_regular_file();
  CHECK(have_file);
  PairConfigSpace warm = build_pair_space(ea, eb, p, dir.string());

  auto s1 = sample_valid(cold, p);
  auto s2 = sample_valid(warm, p);
  REQUIRE(s1.size() == s2.size());
  for (size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].theta == s2[i].theta);
    CHECK(s1[i].tx == s2[i].tx);
    CHECK(s1[i].ty == s2[i].ty);
  }
  std::filesystem::remove_all(dir);
}

#include "fresco/geometry.hpp"

#include "fresco/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace fresco;

namespace {

Polygon unit_square() {
  return Polygon{{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}, {}};
}

Polygon square(double x0, double y0, double side) {
  return Polygon{{Vec2(x0, y0), Vec2(x0 + side, y0), Vec2(x0 + side, y0 + side),
                  Vec2(x0, y0 + side)},
                 {}};
}

}  // namespace

TEST_CASE("geometry: transform basics") {
  RigidTransform t = make_transform(3.14159265358979, 0, 0);
  Vec2 p = apply(t, Vec2(1, 0));
  CHECK(p.x() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(p.y()) < 1e-9);

  Polygon sq = unit_square();
  Polygon same = apply(identity_transform(), sq);
  for (size_t i = 0; i < sq.outer.size(); ++i)
    CHECK((same.outer[i] - sq.outer[i]).norm() < 1e-12);

  CHECK(normalize_angle(-0.1) == doctest::Approx(6.283185307179586 - 0.1));
  CHECK(normalize_angle(6.283185307179586) == doctest::Approx(0.0));
}

TEST_CASE("geometry: compose/invert round trips") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    RigidTransform t = make_transform(rng.uniform(0, 6.2831), rng.uniform(-200, 200),
                                      rng.uniform(-200, 200));
    Vec2 x(rng.uniform(-100, 100), rng.uniform(-100, 100));
    Vec2 round = apply(invert(t), apply(t, x));
    CHECK((round - x).norm() < 1e-6);

    RigidTransform id = compose(t, invert(t));
    CHECK(std::min(id.theta, 6.283185307179586 - id.theta) < 1e-9);
    CHECK(std::abs(id.tx) < 1e-6);
    CHECK(std::abs(id.ty) < 1e-6);
  }
}

TEST_CASE("geometry: compose is associative; inverse reverses order") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    auto rand_t = [&] {
      return make_transform(rng.uniform(0, 6.2831), rng.uniform(-50, 50), rng.uniform(-50, 50));
    };
    RigidTransform a = rand_t(), b = rand_t(), c = rand_t();
    RigidTransform lhs = compose(compose(a, b), c);
    RigidTransform rhs = compose(a, compose(b, c));
    Vec2 probe(rng.uniform(-10, 10), rng.uniform(-10, 10));
    CHECK((apply(lhs, probe) - apply(rhs, probe)).norm() < 1e-6);

    RigidTransform inv_ab = invert(compose(a, b));
    RigidTransform ba_inv = compose(invert(b), invert(a));
    CHECK((apply(inv_ab, probe) - apply(ba_inv, probe)).norm() < 1e-6);
  }
}

TEST_CASE("geometry: reflect") {
  Polygon sq = unit_square();
  Polygon r = reflect(sq);
  CHECK(signed_area(r.outer) > 0);  // orientation restored
  Box2 bb = bounds(r);
  CHECK(bb.lo.x() == doctest::Approx(-1));
  CHECK(bb.lo.y() == doctest::Approx(-1));
  CHECK(bb.hi.x() == doctest::Approx(0));
  CHECK(bb.hi.y() == doctest::Approx(0));

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Polygon p = oracle::random_blob(rng, 20.0, 10);
    Polygon rr = reflect(reflect(p));
    for (size_t k = 0; k < p.outer.size(); ++k)
      CHECK((rr.outer[k] - p.outer[k]).norm() < 1e-12);

    // centroid of reflection is the negated centroid
    Vec2 c1(0, 0), c2(0, 0);
    for (const auto& v : p.outer) c1 += v;
    for (const auto& v : reflect(p).outer) c2 += v;
    CHECK((c1 + c2).norm() < 1e-9);
  }
}

TEST_CASE("geometry: contains with holes") {
  Polygon sq = unit_square();
  CHECK(contains(sq, Vec2(0.5, 0.5)));
  CHECK_FALSE(contains(sq, Vec2(2, 2)));
  CHECK(contains(sq, Vec2(0, 0.5)));  // boundary counts as inside

  Polygon holed = square(0, 0, 10);
  holed.holes.push_back({Vec2(4, 4), Vec2(4, 6), Vec2(6, 6), Vec2(6, 4)});  // CW
  CHECK(contains(holed, Vec2(1, 1)));
  CHECK_FALSE(contains(holed, Vec2(5, 5)));  // inside the hole
  CHECK(contains(holed, Vec2(4, 5)));        // hole boundary is region boundary

  RegionSet rs{{square(0, 0, 1), square(5, 5, 1)}};
  CHECK(contains(rs, Vec2(0.5, 0.5)));
  CHECK(contains(rs, Vec2(5.5, 5.5)));
  CHECK_FALSE(contains(rs, Vec2(3, 3)));
}

TEST_CASE("geometry: minkowski sum of boxes") {
  RegionSet rs = minkowski_sum(unit_square(), unit_square());
  // sum of axis-aligned unit boxes is the 2x2 box
  for (double x : {0.1, 1.0, 1.9})
    for (double y : {0.1, 1.0, 1.9}) CHECK(contains(rs, Vec2(x, y)));
  CHECK_FALSE(contains(rs, Vec2(2.1, 1.0)));
  CHECK_FALSE(contains(rs, Vec2(-0.1, 1.0)));

  Box2 bb;
  for (const auto& p : rs.polygons) bb.expand(bounds(p));
  CHECK(bb.lo.x() == doctest::Approx(0));
  CHECK(bb.hi.x() == doctest::Approx(2));
  CHECK(bb.hi.y() == doctest::Approx(2));
}

TEST_CASE("geometry: minkowski sum with a point translates") {
  Rng rng(5);
  Polygon p = oracle::random_blob(rng, 15.0, 9);
  Vec2 d(3.5, -2.25);
  Polygon moved = minkowski_sum(p, d);
  for (size_t i = 0; i < p.outer.size(); ++i)
    CHECK((moved.outer[i] - (p.outer[i] + d)).norm() < 1e-12);
}

TEST_CASE("geometry: degenerate minkowski input rejected") {
  Polygon bad{{Vec2(0, 0), Vec2(1, 0)}, {}};
  CHECK_THROWS_AS(minkowski_sum(bad, unit_square()), std::invalid_argument);
  CHECK_THROWS_AS(minkowski_sum(unit_square(), bad), std::invalid_argument);
}

TEST_CASE("geometry: minkowski membership vs raster brute force") {
  Rng rng(41);
  Polygon p6 = oracle::random_blob(rng, 12.0, 6, 0.5);
  Polygon p5 = oracle::random_blob(rng, 9.0, 5, 0.5);

  RegionSet sum = minkowski_sum(p6, p5);
  oracle::RasterShape rp = oracle::rasterize(p6);
  oracle::RasterShape rq = oracle::rasterize(p5);

  Box2 bb;
  for (const auto& poly : sum.polygons) bb.expand(bounds(poly));
  bb.lo -= Vec2(3, 3);
  bb.hi += Vec2(3, 3);

  int checked = 0, mismatched = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec2 probe(rng.uniform(bb.lo.x(), bb.hi.x()), rng.uniform(bb.lo.y(), bb.hi.y()));
    bool ours = contains(sum, probe);
    bool brute = oracle::minkowski_contains_brute(rp, rq, probe);
    if (ours != brute) {
      // tolerated only next to the region boundary: nearby probes must flip
      bool near_edge = false;
      for (int k = 0; k < 8 && !near_edge; ++k) {
        double ang = 0.785398 * k;
        Vec2 nb = probe + Vec2(std::cos(ang), std::sin(ang));
        if (contains(sum, nb) != ours || oracle::minkowski_contains_brute(rp, rq, nb) != brute)
          near_edge = true;
      }
      CHECK(near_edge);
      ++mismatched;
    }
    ++checked;
  }
  CHECK(checked == 10000);
  CHECK(mismatched < 200);  // raster discretization keeps disagreement rare
}

TEST_CASE("geometry: minkowski equivalence to shape overlap") {
  // contains(p (+) reflect(q), t) iff p overlaps q translated by t
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    Polygon p = oracle::random_blob(rng, 10.0, 8, 0.5);
    Polygon q = oracle::random_blob(rng, 7.0, 7, 0.5);
    RegionSet cspace = minkowski_sum(p, reflect(q));
    oracle::RasterShape rp = oracle::rasterize(p);
    oracle::RasterShape rq = oracle::rasterize(q);

    for (int i = 0; i < 300; ++i) {
      Vec2 t(rng.uniform(-25, 25), rng.uniform(-25, 25));
      bool ours = contains(cspace, t);
      bool brute = oracle::shapes_overlap(rp, rq, t);
      if (ours != brute) {
        bool near_edge = false;
        for (int k = 0; k < 8 && !near_edge; ++k) {
          double ang = 0.785398 * k;
          Vec2 nb = t + Vec2(std::cos(ang), std::sin(ang));
          if (contains(cspace, nb) != ours || oracle::shapes_overlap(rp, rq, nb) != brute)
            near_edge = true;
        }
        CHECK(near_edge);
      }
    }
  }
}

TEST_CASE("geometry: minkowski area lower bound for convex inputs") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    // convex inputs via decomposition of blobs down to single parts
    Polygon a = oracle::random_blob(rng, 8.0, 5, 0.1);
    Polygon b = oracle::random_blob(rng, 6.0, 4, 0.1);
    auto pa = decompose_convex(a.outer);
    auto pb = decompose_convex(b.outer);
    ConvexPart sum = convex_minkowski(pa[0], pb[0]);
    double area_sum = signed_area(sum);
    CHECK(area_sum >= std::abs(signed_area(pa[0])) - 1e-9);
    CHECK(area_sum >= std::abs(signed_area(pb[0])) - 1e-9);
  }
}

TEST_CASE("geometry: convex decomposition covers the polygon") {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Polygon p = oracle::random_blob(rng, 14.0, 13, 0.6);
    auto parts = decompose_convex(p.outer);
    double total = 0;
    for (const auto& part : parts) {
      CHECK(signed_area(part) > 0);
      total += signed_area(part);
    }
    CHECK(total == doctest::Approx(std::abs(signed_area(p.outer))).epsilon(1e-6));
  }
}

TEST_CASE("geometry: part set point queries match linear scan") {
  Rng rng(31);
  Polygon p = oracle::random_blob(rng, 20.0, 14, 0.6);
  Polygon q = oracle::random_blob(rng, 12.0, 11, 0.6);
  auto pa = decompose_convex(p.outer);
  auto qa = decompose_convex(q.outer);
  std::vector<ConvexPart> parts;
  for (const auto& a : pa)
    for (const auto& b : qa) parts.push_back(convex_minkowski(a, b));
  PartSet set(parts);
  for (int i = 0; i < 2000; ++i) {
    Vec2 probe(rng.uniform(-50, 50), rng.uniform(-50, 50));
    bool linear = false;
    for (const auto& part : parts)
      if (convex_contains(part, probe)) {
        linear = true;
        break;
      }
    CHECK(set.contains(probe) == linear);
  }
}

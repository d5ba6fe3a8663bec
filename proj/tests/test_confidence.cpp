#include "fresco/confidence.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

using namespace fresco;

namespace {

OverlapCurve curve_of(std::initializer_list<std::int32_t> ids) {
  OverlapCurve c;
  c.ids.assign(ids);
  return c;
}

OverlapCurve curve_range(std::int32_t lo, std::int32_t hi) {  // [lo, hi)
  OverlapCurve c;
  for (std::int32_t v = lo; v < hi; ++v) c.ids.push_back(v);
  return c;
}

MatchCandidate cand(int i, int j, OverlapCurve on_i, OverlapCurve on_j, double dij, double dji) {
  MatchCandidate c;
  c.i = i;
  c.j = j;
  c.curve_ij = std::move(on_i);
  c.curve_ji = std::move(on_j);
  c.d_ij = dij;
  c.d_ji = dji;
  return c;
}

}  // namespace

TEST_CASE("confidence: xfsim set arithmetic") {
  CHECK(xfsim(curve_range(0, 60), curve_range(0, 60)) == doctest::Approx(1.0));
  CHECK(xfsim(curve_range(0, 30), curve_range(40, 70)) == doctest::Approx(0.0));
  CHECK(xfsim(curve_range(0, 60), curve_range(0, 30)) == doctest::Approx(0.5));
  CHECK(xfsim(curve_of({}), curve_of({})) == doctest::Approx(0.0));

  // symmetric, bounded, 1 iff equal and non-empty
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    OverlapCurve a, b;
    for (int k = 0; k < 50; ++k) {
      if (rng.uniform() < 0.4) a.ids.push_back(k);
      if (rng.uniform() < 0.4) b.ids.push_back(k);
    }
    double ab = xfsim(a, b), ba = xfsim(b, a);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (ab == 1.0) {
      CHECK(a.ids == b.ids);
      CHECK(!a.ids.empty());
    }
  }
}

TEST_CASE("confidence: nearby candidates") {
  SolverParams p;
  MatchCandidate a = cand(0, 1, curve_range(0, 78), curve_range(0, 78), 1.0, 1.0);
  CHECK(are_nearby(a, a, p));

  // shifted two pixels along a 78-px shared run: IoU = 76/80 = 0.95
  MatchCandidate b = cand(0, 1, curve_range(2, 80), curve_range(2, 80), 1.1, 1.1);
  CHECK(xfsim(a.curve_ij, b.curve_ij) == doctest::Approx(76.0 / 80.0));
  CHECK(are_nearby(a, b, p));

  // disjoint curves are not nearby
  MatchCandidate c = cand(0, 1, curve_range(100, 150), curve_range(100, 150), 1.0, 1.0);
  CHECK_FALSE(are_nearby(a, c, p));

  // nearby needs both sides
  MatchCandidate d = cand(0, 1, curve_range(0, 78), curve_range(200, 278), 1.0, 1.0);
  CHECK_FALSE(are_nearby(a, d, p));
}

TEST_CASE("confidence: competitor selection") {
  SolverParams p;  // gamma_l = 0.5, gamma_h = 0.85
  MatchCandidate target = cand(0, 1, curve_range(0, 100), curve_range(0, 100), 1.0, 1.0);

  std::vector<CompetitorView> pool;
  CHECK(competitors(target, pool, p).empty());

  // third-fragment candidate overlapping 70% of the target curve
  MatchCandidate third = cand(0, 2, curve_range(0, 70), curve_range(0, 70), 4.0, 4.0);
  // same-pair candidate nearly identical on both sides (nearby -> excluded)
  MatchCandidate twin = cand(0, 1, curve_range(0, 95), curve_range(0, 95), 1.2, 1.2);
  // same-pair candidate contesting the region on one side only
  MatchCandidate rival = cand(0, 1, curve_range(30, 130), curve_range(300, 400), 2.0, 2.0);
  // far candidate: no overlap
  MatchCandidate far = cand(0, 3, curve_range(500, 600), curve_range(0, 100), 9.0, 9.0);

  auto add = [&pool](const MatchCandidate& c) {
    CompetitorView v;
    v.curve_on_i = &c.curve_ij;
    v.d_on_i = c.d_ij;
    v.partner = c.j;
    v.owner = &c;
    pool.push_back(v);
  };
  add(target);  // self must never compete
  add(third);
  add(twin);
  add(rival);
  add(far);

  auto comp = competitors(target, pool, p);
  REQUIRE(comp.size() == 2);
  CHECK(comp[0].owner == &third);   // IoU 0.7 > 0.5
  CHECK(comp[1].owner == &rival);   // same pair, overlapping, not nearby
}

TEST_CASE("confidence: raw confidence arithmetic") {
  std::vector<CompetitorView> pool;
  CHECK(raw_confidence(1.0, pool) == doctest::Approx(1.0));  // unique match

  CompetitorView v;
  OverlapCurve c = curve_range(0, 10);
  v.curve_on_i = &c;
  v.d_on_i = 4.0;
  pool.push_back(v);
  CHECK(raw_confidence(1.0, pool) == doctest::Approx(0.75));
  CHECK(raw_confidence(4.0, pool) == doctest::Approx(0.0));
  CHECK(raw_confidence(9.0, pool) == doctest::Approx(0.0));  // clamped

  // monotone non-increasing in d_target
  double prev = 1.0;
  for (double d = 0.0; d <= 6.0; d += 0.5) {
    double conf = raw_confidence(d, pool);
    CHECK(conf <= prev + 1e-12);
    prev = conf;
  }
}

TEST_CASE("confidence: pair confidence and side conditions") {
  SolverParams p;
  MatchCandidate c1 = cand(0, 1, curve_range(0, 100), curve_range(50, 150), 1.0, 1.0);
  c1.c_hat_ij = 0.8;
  // exact inverse: curves swapped
  MatchCandidate c2 = cand(1, 0, curve_range(50, 150), curve_range(0, 100), 1.0, 1.0);
  c2.c_hat_ij = 0.6;

  auto link = pair_confidence(c1, c2, p);
  REQUIRE(link.has_value());
  CHECK(link->c == doctest::Approx(0.7));
  CHECK(link->i == 0);
  CHECK(link->j == 1);

  // symmetric up to swapping the arguments
  auto swapped = pair_confidence(c2, c1, p);
  REQUIRE(swapped.has_value());
  CHECK(swapped->c == doctest::Approx(link->c));

  // unrelated transform: curve IoU below gamma_h
  MatchCandidate c3 = cand(1, 0, curve_range(200, 300), curve_range(400, 500), 1.0, 1.0);
  c3.c_hat_ij = 0.9;
  CHECK_FALSE(pair_confidence(c1, c3, p).has_value());
}

TEST_CASE("confidence: mirrored view swaps every field") {
  MatchCandidate c = cand(3, 7, curve_range(0, 10), curve_range(20, 25), 1.5, 2.5);
  c.c_hat_ij = 0.25;
  c.c_hat_ji = 0.75;
  MatchCandidate m = mirrored(c);
  CHECK(m.i == 7);
  CHECK(m.j == 3);
  CHECK(m.d_ij == 2.5);
  CHECK(m.d_ji == 1.5);
  CHECK(m.c_hat_ij == 0.75);
  CHECK(m.curve_ij.ids == c.curve_ji.ids);
  Vec2 probe(4.2, -1.7);
  CHECK((apply(m.t, apply(c.t, probe)) - probe).norm() < 1e-9);
}

TEST_CASE("confidence: candidate store on a planted pair") {
  SolverParams p;
  ImageRGB img = fixtures::textured_image(100, 60, 41);
  Fragment a = fixtures::crop_fragment(img, 0, 0, 48, 60, 0);
  Fragment b = fixtures::crop_fragment(img, 50, 0, 48, 60, 1);
  ExtrapolatedFragment ea = extrapolate(a, 10), eb = extrapolate(b, 10);
  ScoringData sa = build_scoring_data(ea, p), sb = build_scoring_data(eb, p);
  PairConfigSpace space = build_pair_space(ea, eb, p);

  auto store = build_candidate_store(sa, sb, space, p);
  REQUIRE(!store.empty());
  CHECK(store.size() <= size_t(12 * p.candidates_per_pair));

  // ascending rank, finite scores, non-empty curves (retained candidates)
  for (size_t n = 0; n < store.size(); ++n) {
    CHECK(store[n].curve_ij.length() > 0);
    CHECK(store[n].curve_ji.length() > 0);
    CHECK(store[n].d_ij < kInfiniteDissimilarity);
    if (n > 0) CHECK(store[n - 1].rank() <= store[n].rank());
  }
  // no two entries are near-duplicates
  for (size_t m = 0; m < store.size(); ++m)
    for (size_t n = m + 1; n < store.size(); ++n)
      CHECK_FALSE(are_nearby(store[m], store[n], p));

  // the best candidate sits near the planted truth (50, 0) at theta 0
  const MatchCandidate& best = store.front();
  CHECK(std::min(best.t.theta, 6.283185307179586 - best.t.theta) <= 6.283185307179586 / 80 + 1e-9);
  CHECK(std::abs(best.t.tx - 50.0) <= p.translation_step * 1.5);
  CHECK(std::abs(best.t.ty - 0.0) <= p.translation_step * 1.5);

  // confidences populate and stay in [0, 1]
  std::vector<std::vector<MatchCandidate>> stores;
  stores.push_back(std::move(store));
  compute_confidences(stores, p);
  for (const auto& c : stores[0]) {
    CHECK(c.c_hat_ij >= 0.0);
    CHECK(c.c_hat_ij <= 1.0);
    CHECK(c.c_hat_ji >= 0.0);
    CHECK(c.c_hat_ji <= 1.0);
  }

  // placement subset: mutually non-competing, capped
  auto picks = placement_candidates(stores[0], p);
  CHECK(!picks.empty());
  CHECK(picks.size() <= size_t(p.candidates_per_pair));
  for (size_t m = 0; m < picks.size(); ++m)
    for (size_t n = m + 1; n < picks.size(); ++n) {
      CHECK(xfsim(stores[0][picks[m]].curve_ij, stores[0][picks[n]].curve_ij) <= p.gamma_l);
      CHECK(xfsim(stores[0][picks[m]].curve_ji, stores[0][picks[n]].curve_ji) <= p.gamma_l);
    }
}

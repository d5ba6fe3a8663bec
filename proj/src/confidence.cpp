#include "fresco/confidence.hpp"

#include "fresco/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fresco {

MatchCandidate mirrored(const MatchCandidate& c) {
  MatchCandidate m;
  m.i = c.j;
  m.j = c.i;
  m.t = invert(c.t);
  m.curve_ij = c.curve_ji;
  m.curve_ji = c.curve_ij;
  m.d_ij = c.d_ji;
  m.d_ji = c.d_ij;
  m.dc_ij = c.dc_ji;
  m.dh_ij = c.dh_ji;
  m.dc_ji = c.dc_ij;
  m.dh_ji = c.dh_ij;
  m.c_hat_ij = c.c_hat_ji;
  m.c_hat_ji = c.c_hat_ij;
  return m;
}

double xfsim(const OverlapCurve& a, const OverlapCurve& b) {
  if (a.ids.empty() && b.ids.empty()) return 0.0;
  size_t ia = 0, ib = 0, inter = 0;
  while (ia < a.ids.size() && ib < b.ids.size()) {
    if (a.ids[ia] < b.ids[ib]) {
      ++ia;
    } else if (a.ids[ia] > b.ids[ib]) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const size_t uni = a.ids.size() + b.ids.size() - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

namespace {

// quick upper bound: IoU <= min(|a|,|b|) / max(|a|,|b|)
inline bool iou_can_exceed(const OverlapCurve& a, const OverlapCurve& b, double threshold) {
  const double la = double(a.ids.size()), lb = double(b.ids.size());
  if (la == 0 || lb == 0) return false;
  return std::min(la, lb) / std::max(la, lb) > threshold;
}

}  // namespace

bool are_nearby(const MatchCandidate& c1, const MatchCandidate& c2, const SolverParams& params) {
  return xfsim(c1.curve_ij, c2.curve_ij) >= params.gamma_h &&
         xfsim(c1.curve_ji, c2.curve_ji) >= params.gamma_h;
}

std::vector<CompetitorView> competitors(const MatchCandidate& target,
                                        const std::vector<CompetitorView>& pool_for_i,
                                        const SolverParams& params) {
  std::vector<CompetitorView> out;
  for (const auto& entry : pool_for_i) {
    if (entry.owner == &target) continue;  // never its own competitor
    if (!iou_can_exceed(target.curve_ij, *entry.curve_on_i, params.gamma_l)) continue;
    if (xfsim(target.curve_ij, *entry.curve_on_i) <= params.gamma_l) continue;
    if (entry.partner == target.j && entry.owner != nullptr) {
      const MatchCandidate other = entry.flipped ? mirrored(*entry.owner) : *entry.owner;
      if (are_nearby(target, other, params)) continue;
    }
    out.push_back(entry);
  }
  return out;
}

double raw_confidence(double d_target, const std::vector<CompetitorView>& competitor_pool) {
  if (competitor_pool.empty()) return 1.0;
  double best = kInfiniteDissimilarity;
  for (const auto& c : competitor_pool) best = std::min(best, c.d_on_i);
  if (!(best > 0.0) || best == kInfiniteDissimilarity)
    return best == kInfiniteDissimilarity ? 1.0 : 0.0;
  double c = 1.0 - d_target / best;
  return std::clamp(c, 0.0, 1.0);
}

std::optional<PairLink> pair_confidence(const MatchCandidate& c1, const MatchCandidate& c2,
                                        const SolverParams& params) {
  // side condition through curve IoU: invert(t2)'s curves are c2's swapped
  if (xfsim(c1.curve_ij, c2.curve_ji) < params.gamma_h) return std::nullopt;
  if (xfsim(c1.curve_ji, c2.curve_ij) < params.gamma_h) return std::nullopt;
  PairLink link;
  link.i = c1.i;
  link.j = c1.j;
  link.t1 = c1.t;
  link.t2 = c2.t;
  link.c = 0.5 * (c1.c_hat_ij + c2.c_hat_ij);
  link.combined_curve_len = c1.curve_ij.length() + c1.curve_ji.length();
  return link;
}

std::vector<MatchCandidate> build_candidate_store(const ScoringData& si, const ScoringData& sj,
                                                  const PairConfigSpace& space,
                                                  const SolverParams& params) {
  struct Scored {
    RigidTransform t;
    DirScore ij, ji;
    std::vector<std::int32_t> ids_ij, ids_ji;
    double rank() const { return ij.d + ji.d; }
    std::int64_t length() const { return std::int64_t(ij.len) + ji.len; }
    // contact-ring dissimilarity: the admission key that ignores deep-band
    // synthesis noise
    double shallow_rank() const {
      if (ij.len_shallow == 0 || ji.len_shallow == 0) return kInfiniteDissimilarity;
      return ij.d_c_shallow / (double(ij.len_shallow) * ij.len_shallow) +
             ji.d_c_shallow / (double(ji.len_shallow) * ji.len_shallow);
    }
  };

  const int local_cap = std::max(24, 12 * params.candidates_per_pair);
  std::vector<std::vector<Scored>> per_angle(space.angle_indices.size());

  parallel_for(std::int64_t(space.angle_indices.size()), [&](std::int64_t s) {
    const int k = space.angle_indices[s];
    const double theta = k * space.angle_step();
    const PairSlice& fwd = space.ij[space.slot_of_index[k]];
    if (fwd.band.empty()) return;

    PairAngleScorer scorer(si, sj, theta, params);
    auto& kept = per_angle[s];
    kept.reserve(local_cap + 32);
    double threshold = kInfiniteDissimilarity;  // rank of the worst kept
    // per-angle champions by the alternate admission keys
    struct Champ {
      double key = kInfiniteDissimilarity;
      Scored rec;
      bool used = false;
    };
    std::array<Champ, 16> by_shallow;
    std::array<Champ, 16> by_length;

    const double step = params.translation_step;
    const Box2& bb = fwd.band.bbox();
    const std::int64_t x0 = std::int64_t(std::ceil(bb.lo.x() / step));
    const std::int64_t x1 = std::int64_t(std::floor(bb.hi.x() / step));
    const std::int64_t y0 = std::int64_t(std::ceil(bb.lo.y() / step));
    const std::int64_t y1 = std::int64_t(std::floor(bb.hi.y() / step));
    std::vector<std::int32_t> ids_ij, ids_ji;

    for (std::int64_t gy = y0; gy <= y1; ++gy) {
      for (std::int64_t gx = x0; gx <= x1; ++gx) {
        const std::int64_t tx = gx * std::int64_t(step), ty = gy * std::int64_t(step);
        RigidTransform t = make_transform(theta, double(tx), double(ty));
        if (!is_valid(t, space)) continue;

        DirScore d_ij = scorer.score_ij(tx, ty, &ids_ij);
        if (d_ij.len == 0) continue;
        if (kept.size() == size_t(local_cap) && d_ij.d >= threshold) continue;
        DirScore d_ji = scorer.score_ji(tx, ty, &ids_ji);
        if (d_ji.len == 0) continue;
        const double rank = d_ij.d + d_ji.d;
        if (kept.size() == size_t(local_cap) && rank >= threshold) continue;

        Scored rec;
        rec.t = t;
        rec.ij = d_ij;
        rec.ji = d_ji;
        rec.ids_ij = ids_ij;
        rec.ids_ji = ids_ji;

        // champion lists (replace-worst)
        const double sh = rec.shallow_rank();
        if (sh < kInfiniteDissimilarity) {
          size_t worst = 0;
          for (size_t m = 1; m < by_shallow.size(); ++m)
            if (by_shallow[m].key > by_shallow[worst].key) worst = m;
          if (sh < by_shallow[worst].key) {
            by_shallow[worst].key = sh;
            by_shallow[worst].rec = rec;
            by_shallow[worst].used = true;
          }
        }
        {
          const double lk = -double(rec.length());
          size_t worst = 0;
          for (size_t m = 1; m < by_length.size(); ++m)
            if (by_length[m].key > by_length[worst].key) worst = m;
          if (lk < by_length[worst].key) {
            by_length[worst].key = lk;
            by_length[worst].rec = rec;
            by_length[worst].used = true;
          }
        }

        if (kept.size() < size_t(local_cap)) {
          kept.push_back(std::move(rec));
        } else {
          // replace the worst
          size_t worst = 0;
          for (size_t m = 1; m < kept.size(); ++m)
            if (kept[m].rank() > kept[worst].rank()) worst = m;
          kept[worst] = std::move(rec);
        }
        if (kept.size() == size_t(local_cap)) {
          threshold = 0;
          for (const auto& r : kept) threshold = std::max(threshold, r.rank());
        }
      }
    }
    // merge champions in (deduplicated by transform)
    auto has_t = [&](const RigidTransform& t) {
      for (const auto& r : kept)
        if (r.t.theta == t.theta && r.t.tx == t.tx && r.t.ty == t.ty) return true;
      return false;
    };
    for (const auto* champs : {&by_shallow, &by_length})
      for (const auto& ch : *champs)
        if (ch.used && !has_t(ch.rec.t)) kept.push_back(ch.rec);
  });

  // merge, ascending by (rank, angle, ty, tx) for determinism
  std::vector<Scored> merged;
  for (auto& v : per_angle)
    for (auto& r : v) merged.push_back(std::move(r));
  std::sort(merged.begin(), merged.end(), [](const Scored& a, const Scored& b) {
    if (a.rank() != b.rank()) return a.rank() < b.rank();
    if (a.t.theta != b.t.theta) return a.t.theta < b.t.theta;
    if (a.t.ty != b.t.ty) return a.t.ty < b.t.ty;
    return a.t.tx < b.t.tx;
  });

  // near-duplicate suppression; bounded walk. Admission runs two tracks:
  // best by dissimilarity rank, then best by combined curve length (long
  // matches are the likely-correct ones even when band noise inflates their
  // raw score), so confidence gets to arbitrate between them.
  const size_t store_cap = size_t(std::max(0, 12 * params.candidates_per_pair));
  const size_t length_cap = size_t(std::max(0, 4 * params.candidates_per_pair));
  const size_t max_walk = std::max<size_t>(4000, store_cap * 40);
  std::vector<MatchCandidate> store;
  std::vector<char> taken(merged.size(), 0);

  auto admit = [&](size_t m) {
    Scored& r = merged[m];
    MatchCandidate cand;
    cand.i = si.id;
    cand.j = sj.id;
    cand.t = r.t;
    cand.curve_ij.ids = r.ids_ij;
    cand.curve_ji.ids = r.ids_ji;
    cand.d_ij = r.ij.d;
    cand.d_ji = r.ji.d;
    cand.dc_ij = r.ij.d_c;
    cand.dh_ij = r.ij.d_h;
    cand.dc_ji = r.ji.d_c;
    cand.dh_ji = r.ji.d_h;
    for (const auto& kept : store)
      if (are_nearby(cand, kept, params)) return false;
    store.push_back(std::move(cand));
    return true;
  };

  for (size_t m = 0; m < merged.size() && store.size() < store_cap && m < max_walk; ++m) {
    taken[m] = 1;
    admit(m);
  }
  if (length_cap > 0 && !merged.empty()) {
    std::vector<size_t> rest;
    for (size_t m = 0; m < merged.size(); ++m)
      if (!taken[m]) rest.push_back(m);

    std::vector<size_t> by_sh = rest;
    std::stable_sort(by_sh.begin(), by_sh.end(), [&](size_t a, size_t b) {
      if (merged[a].shallow_rank() != merged[b].shallow_rank())
        return merged[a].shallow_rank() < merged[b].shallow_rank();
      return merged[a].rank() < merged[b].rank();
    });
    size_t admitted = 0;
    for (size_t k = 0; k < by_sh.size() && admitted < length_cap + length_cap / 2; ++k) {
      if (merged[by_sh[k]].shallow_rank() == kInfiniteDissimilarity) break;
      if (admit(by_sh[k])) {
        ++admitted;
        taken[by_sh[k]] = 1;
      }
    }

    std::vector<size_t> by_len;
    for (size_t m : rest)
      if (!taken[m]) by_len.push_back(m);
    std::stable_sort(by_len.begin(), by_len.end(), [&](size_t a, size_t b) {
      const auto la = merged[a].length();
      const auto lb = merged[b].length();
      if (la != lb) return la > lb;
      return merged[a].rank() < merged[b].rank();
    });
    admitted = 0;
    for (size_t k = 0; k < by_len.size() && admitted < length_cap; ++k)
      if (admit(by_len[k])) ++admitted;
  }

  // shadow competitors: each retained candidate's translation-grid neighbors
  // from the full sampled set, so short isolated matches meet the
  // near-identical alternatives that contest them
  const size_t placeable = store.size();
  auto known = [&](const RigidTransform& t) {
    for (const auto& c : store)
      if (c.t.theta == t.theta && c.t.tx == t.tx && c.t.ty == t.ty) return true;
    return false;
  };
  const double gs = params.translation_step;
  std::vector<MatchCandidate> shadows(placeable * 8);
  parallel_for(std::int64_t(placeable), [&](std::int64_t n) {
    const MatchCandidate& c = store[n];
    const double off[8][2] = {{gs, 0}, {-gs, 0}, {0, gs}, {0, -gs},
                              {gs, gs}, {gs, -gs}, {-gs, gs}, {-gs, -gs}};
    for (int k = 0; k < 8; ++k) {
      RigidTransform t = make_transform(c.t.theta, c.t.tx + off[k][0], c.t.ty + off[k][1]);
      if (known(t)) continue;
      MatchCandidate nb;
      nb.i = si.id;
      nb.j = sj.id;
      nb.t = t;
      nb.pool_only = true;
      DirScore dij = score_direction(si, sj, t, params, &nb.curve_ij);
      if (dij.len == 0) continue;
      DirScore dji = score_direction(sj, si, invert(t), params, &nb.curve_ji);
      if (dji.len == 0) continue;
      nb.d_ij = dij.d;
      nb.d_ji = dji.d;
      nb.dc_ij = dij.d_c;
      nb.dh_ij = dij.d_h;
      nb.dc_ji = dji.d_c;
      nb.dh_ji = dji.d_h;
      shadows[size_t(n) * 8 + k] = std::move(nb);
    }
  });
  for (auto& nb : shadows)
    if (nb.curve_ij.length() > 0) store.push_back(std::move(nb));
  return store;
}

void compute_confidences(std::vector<std::vector<MatchCandidate>>& stores,
                         const SolverParams& params) {
  // per-fragment competitor pools
  int max_id = -1;
  for (const auto& s : stores)
    for (const auto& c : s) max_id = std::max({max_id, c.i, c.j});
  if (max_id < 0) return;

  std::vector<std::vector<CompetitorView>> pools(max_id + 1);
  for (auto& store : stores)
    for (auto& c : store) {
      CompetitorView vi;
      vi.curve_on_i = &c.curve_ij;
      vi.d_on_i = c.d_ij;
      vi.partner = c.j;
      vi.owner = &c;
      vi.flipped = false;
      pools[c.i].push_back(vi);

      CompetitorView vj;
      vj.curve_on_i = &c.curve_ji;
      vj.d_on_i = c.d_ji;
      vj.partner = c.i;
      vj.owner = &c;
      vj.flipped = true;
      pools[c.j].push_back(vj);
    }

  for (auto& store : stores) {
    parallel_for(std::int64_t(store.size()), [&](std::int64_t n) {
      MatchCandidate& c = store[n];
      if (c.pool_only) return;
      auto comp_i = competitors(c, pools[c.i], params);
      c.c_hat_ij = raw_confidence(c.d_ij, comp_i);
      MatchCandidate m = mirrored(c);
      auto comp_j = competitors(m, pools[c.j], params);
      c.c_hat_ji = raw_confidence(c.d_ji, comp_j);
    });
  }
}

std::vector<int> placement_candidates(const std::vector<MatchCandidate>& store,
                                      const SolverParams& params) {
  std::vector<int> out;
  for (int n = 0; n < int(store.size()) && int(out.size()) < params.candidates_per_pair; ++n) {
    if (store[n].pool_only) continue;
    bool competes = false;
    for (int kept : out) {
      if (xfsim(store[n].curve_ij, store[kept].curve_ij) > params.gamma_l ||
          xfsim(store[n].curve_ji, store[kept].curve_ji) > params.gamma_l) {
        competes = true;
        break;
      }
    }
    if (!competes) out.push_back(n);
  }
  return out;
}

}  // namespace fresco

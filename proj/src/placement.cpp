#include "fresco/placement.hpp"

#include "fresco/parallel.hpp"
#include "fresco/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;

}  // namespace

FragGeom make_frag_geom(const ExtrapolatedFragment& ex) {
  FragGeom g;
  g.material = decompose_convex(ex.base.boundary.outer);
  g.extended = decompose_convex(ex.boundary_plus.outer);
  for (const auto& part : g.material)
    for (const auto& v : part) g.radius_material = std::max(g.radius_material, v.norm());
  for (const auto& part : g.extended)
    for (const auto& v : part) g.radius_extended = std::max(g.radius_extended, v.norm());
  return g;
}

SliceCache::SliceCache(std::vector<const FragGeom*> geoms, const SolverParams& params)
    : geoms_(std::move(geoms)), params_(params) {}

double SliceCache::angle_step() const { return kTau / params_.n_rotations; }

int SliceCache::snap(double theta) const {
  int k = int(std::lround(normalize_angle(theta) / angle_step())) % params_.n_rotations;
  return k < 0 ? k + params_.n_rotations : k;
}

const PairSlice& SliceCache::get(int obstacle, int robot, int angle_index) {
  std::lock_guard<std::mutex> lk(mu_);
  auto key = std::make_tuple(obstacle, robot, angle_index);
  auto it = slices_.find(key);
  if (it != slices_.end()) return *it->second;
  const double theta = angle_index * angle_step();
  auto slice = std::make_unique<PairSlice>();
  slice->material = build_cspace(geoms_[obstacle]->material, geoms_[robot]->material, theta);
  slice->band = build_cspace(geoms_[obstacle]->extended, geoms_[robot]->material, theta);
  return *slices_.emplace(key, std::move(slice)).first->second;
}

bool is_legal(const RigidTransform& t_j, int j, const std::map<int, RigidTransform>& placements,
              SliceCache& cache) {
  for (const auto& [i, pose_i] : placements) {
    if (i == j) continue;
    const RigidTransform rel = compose(invert(pose_i), t_j);
    const PairSlice& slice = cache.get(i, j, cache.snap(rel.theta));
    if (slice.material.contains(rel.translation())) return false;
  }
  return true;
}

bool is_valid_against_assembly(const RigidTransform& t_j, int j,
                               const std::map<int, RigidTransform>& placements,
                               SliceCache& cache) {
  bool contact = false;
  for (const auto& [i, pose_i] : placements) {
    if (i == j) continue;
    const RigidTransform rel = compose(invert(pose_i), t_j);
    const int k = cache.snap(rel.theta);
    const PairSlice& fwd = cache.get(i, j, k);
    if (fwd.material.contains(rel.translation())) return false;  // illegal
    if (!contact && fwd.band.contains(rel.translation())) {
      const RigidTransform rel_inv = invert(rel);
      const PairSlice& rev = cache.get(j, i, cache.snap(rel_inv.theta));
      if (!rev.material.contains(rel_inv.translation()) &&
          rev.band.contains(rel_inv.translation()))
        contact = true;
    }
  }
  return contact;
}

namespace {

// band-contact half of validity: some placed fragment's extended region is
// overlapped, both role orders; material overlap is checked separately
// (exactly) by refine's callers
bool has_band_contact(const RigidTransform& t_j, int j,
                      const std::map<int, RigidTransform>& placements, SliceCache& cache) {
  for (const auto& [i, pose_i] : placements) {
    if (i == j) continue;
    const RigidTransform rel = compose(invert(pose_i), t_j);
    const PairSlice& fwd = cache.get(i, j, cache.snap(rel.theta));
    if (!fwd.band.contains(rel.translation())) continue;
    const RigidTransform rel_inv = invert(rel);
    const PairSlice& rev = cache.get(j, i, cache.snap(rel_inv.theta));
    if (rev.band.contains(rel_inv.translation())) return true;
  }
  return false;
}

// 1D squared-distance transform (lower-envelope parabolas)
void edt_1d(const std::vector<float>& f, std::vector<float>& d, std::vector<int>& v,
            std::vector<float>& z) {
  const int n = int(f.size());
  d.assign(n, 0.0f);
  v.assign(n, 0);
  z.assign(n + 1, 0.0f);
  int k = 0;
  v[0] = 0;
  z[0] = -1e30f;
  z[1] = 1e30f;
  for (int q = 1; q < n; ++q) {
    float s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0f * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0f * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = 1e30f;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = float(q - v[k]) * float(q - v[k]) + f[v[k]];
  }
}

bool penetrates_one_way(const ScoringData& b, const RigidTransform& rel, const GrayF& dist_a,
                        const ScoringData& a, double threshold) {
  // rel maps b-local coords into a-local coords
  const double c = std::cos(rel.theta), s = std::sin(rel.theta);
  const int w = int(dist_a.cols()), h = int(dist_a.rows());
  for (std::int32_t i = 0; i < b.count(); ++i) {
    const double qx = c * b.px[i] - s * b.py[i] + rel.tx + a.pad;
    const double qy = s * b.px[i] + c * b.py[i] + rel.ty + a.pad;
    if (qx < 1 || qy < 1 || qx > w - 2 || qy > h - 2) continue;
    if (sample_bilinear(dist_a, qx, qy) > threshold) return true;
  }
  return false;
}

}  // namespace

GrayF material_distance_field(const ScoringData& sd) {
  const int w = int(sd.region.cols()), h = int(sd.region.rows());
  GrayF sq(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sq(y, x) = (sd.region(y, x) && !sd.band(y, x)) ? 1e30f : 0.0f;

  std::vector<float> f, d, z;
  std::vector<int> v;
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    for (int y = 0; y < h; ++y) f[y] = sq(y, x);
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq(y, x) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w);
    for (int x = 0; x < w; ++x) f[x] = sq(y, x);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq(y, x) = std::sqrt(d[x]);
  }
  return sq;
}

bool deep_penetration(const ScoringData& a, const GrayF& dist_a, const RigidTransform& pose_a,
                      const ScoringData& b, const GrayF& dist_b, const RigidTransform& pose_b,
                      double threshold) {
  const RigidTransform rel_ab = compose(invert(pose_a), pose_b);  // b-local -> a-local
  const double ra = std::max(a.bbox.lo.norm(), a.bbox.hi.norm()) + 2.0;
  const double rb = std::max(b.bbox.lo.norm(), b.bbox.hi.norm()) + 2.0;
  if (rel_ab.translation().norm() > ra + rb) return false;
  if (penetrates_one_way(b, rel_ab, dist_a, a, threshold)) return true;
  return penetrates_one_way(a, invert(rel_ab), dist_b, b, threshold);
}


RescoredCandidate rescore_against_placed(const ScoringData& canvas, const ScoringData& fragment,
                                         const RigidTransform& t_cf, const SolverParams& params) {
  RescoredCandidate out;
  DirScore canvas_side = score_direction(canvas, fragment, t_cf, params, &out.curve_canvas);
  DirScore frag_side = score_direction(fragment, canvas, invert(t_cf), params, &out.curve_fragment);
  out.d_canvas = canvas_side.d;
  out.d_fragment = frag_side.d;
  return out;
}

Assembly seed_placement(const std::vector<PairLink>& links) {
  if (links.empty()) throw std::runtime_error("unsolvable: no pair links");
  const PairLink* best = &links.front();
  for (const auto& l : links) {
    if (l.c > best->c ||
        (l.c == best->c && (l.combined_curve_len > best->combined_curve_len ||
                            (l.combined_curve_len == best->combined_curve_len &&
                             std::make_pair(l.i, l.j) < std::make_pair(best->i, best->j)))))
      best = &l;
  }
  Assembly out;
  out.placements[best->i] = identity_transform();
  out.placements[best->j] = best->t1;
  out.order = {best->i, best->j};
  out.step_confidences = {best->c};
  out.total_confidence = best->c;
  return out;
}

// --- canvas (virtual placed fragment) ---

namespace {

struct Canvas {
  std::int64_t ox = 0, oy = 0;  // global position of canvas cell (0, 0)
  MaskGrid material, band;
  LabPlanes lab;
  GradientField field;
  bool empty = true;

  int width() const { return int(material.cols()); }
  int height() const { return int(material.rows()); }

  void ensure(const Box2& gbox) {
    const std::int64_t nx0 = std::int64_t(std::floor(gbox.lo.x())) - 2;
    const std::int64_t ny0 = std::int64_t(std::floor(gbox.lo.y())) - 2;
    const std::int64_t nx1 = std::int64_t(std::ceil(gbox.hi.x())) + 2;
    const std::int64_t ny1 = std::int64_t(std::ceil(gbox.hi.y())) + 2;
    if (empty) {
      ox = nx0;
      oy = ny0;
      const int w = int(nx1 - nx0 + 1), h = int(ny1 - ny0 + 1);
      material = MaskGrid::Zero(h, w);
      band = MaskGrid::Zero(h, w);
      lab.L = GrayF::Zero(h, w);
      lab.a = GrayF::Zero(h, w);
      lab.b = GrayF::Zero(h, w);
      field.direction = GrayF::Zero(h, w);
      field.weight = GrayF::Zero(h, w);
      empty = false;
      return;
    }
    if (nx0 >= ox && ny0 >= oy && nx1 <= ox + width() - 1 && ny1 <= oy + height() - 1) return;
    const std::int64_t mx0 = std::min(nx0, ox), my0 = std::min(ny0, oy);
    const std::int64_t mx1 = std::max(nx1, ox + width() - 1);
    const std::int64_t my1 = std::max(ny1, oy + height() - 1);
    const int w = int(mx1 - mx0 + 1), h = int(my1 - my0 + 1);
    const int sx = int(ox - mx0), sy = int(oy - my0);
    auto grow_mask = [&](MaskGrid& m) {
      MaskGrid n = MaskGrid::Zero(h, w);
      n.block(sy, sx, m.rows(), m.cols()) = m;
      m.swap(n);
    };
    auto grow_f = [&](GrayF& m) {
      GrayF n = GrayF::Zero(h, w);
      n.block(sy, sx, m.rows(), m.cols()) = m;
      m.swap(n);
    };
    grow_mask(material);
    grow_mask(band);
    grow_f(lab.L);
    grow_f(lab.a);
    grow_f(lab.b);
    grow_f(field.direction);
    grow_f(field.weight);
    ox = mx0;
    oy = my0;
  }

  void paint(const ScoringData& sd, const RigidTransform& g) {
    const int bw = int(sd.region.cols()), bh = int(sd.region.rows());
    Box2 gbox;
    const Vec2 corners[4] = {Vec2(-sd.pad, -sd.pad), Vec2(bw - sd.pad, -sd.pad),
                             Vec2(bw - sd.pad, bh - sd.pad), Vec2(-sd.pad, bh - sd.pad)};
    for (const auto& q : corners) gbox.expand(apply(g, q));
    ensure(gbox);

    GrayF matf(bh, bw), bandf(bh, bw);
    for (int y = 0; y < bh; ++y)
      for (int x = 0; x < bw; ++x) {
        const bool mat = sd.region(y, x) && !sd.band(y, x);
        matf(y, x) = mat ? 1.0f : 0.0f;
        bandf(y, x) = sd.band(y, x) ? 1.0f : 0.0f;
      }

    const RigidTransform inv = invert(g);
    const double c = std::cos(inv.theta), s = std::sin(inv.theta);
    const int cx0 = std::max<std::int64_t>(0, std::int64_t(std::floor(gbox.lo.x())) - ox);
    const int cy0 = std::max<std::int64_t>(0, std::int64_t(std::floor(gbox.lo.y())) - oy);
    const int cx1 = std::min<std::int64_t>(width() - 1, std::int64_t(std::ceil(gbox.hi.x())) - ox);
    const int cy1 = std::min<std::int64_t>(height() - 1, std::int64_t(std::ceil(gbox.hi.y())) - oy);
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx) {
        const double gx = double(cx + ox), gy = double(cy + oy);
        const double qx = c * gx - s * gy + inv.tx + sd.pad;
        const double qy = s * gx + c * gy + inv.ty + sd.pad;
        if (qx < -1 || qy < -1 || qx > bw || qy > bh) continue;
        const bool mat_here = sample_bilinear(matf, qx, qy) > 0.5f;
        const bool band_here = !mat_here && sample_bilinear(bandf, qx, qy) > 0.5f;
        if (!mat_here && !band_here) continue;
        if (mat_here ? material(cy, cx) != 0 : (material(cy, cx) != 0 || band(cy, cx) != 0))
          continue;  // first-painted content wins; material never overwritten

        float L, aa, bb;
        if (!sample_bilinear_masked(sd.lab.L, sd.region, qx, qy, &L) ||
            !sample_bilinear_masked(sd.lab.a, sd.region, qx, qy, &aa) ||
            !sample_bilinear_masked(sd.lab.b, sd.region, qx, qy, &bb))
          continue;
        if (mat_here) {
          material(cy, cx) = 1;
          band(cy, cx) = 0;  // material trumps any earlier band content
        } else {
          band(cy, cx) = 1;
        }
        lab.L(cy, cx) = L;
        lab.a(cy, cx) = aa;
        lab.b(cy, cx) = bb;
        const int rx = std::clamp(int(std::floor(qx + 0.5)), 0, bw - 1);
        const int ry = std::clamp(int(std::floor(qy + 0.5)), 0, bh - 1);
        field.weight(cy, cx) = sd.field.weight(ry, rx);
        field.direction(cy, cx) = float(normalize_angle(sd.field.direction(ry, rx) + g.theta));
      }
  }

  ScoringData scoring(const SolverParams& params) const {
    ScoringData sd = build_scoring_data_from_planes(-1, material, band, lab, field, params);
    return sd;
  }

  RigidTransform canvas_from_global() const { return make_transform(0, -double(ox), -double(oy)); }
};

}  // namespace

RigidTransform refine(const RigidTransform& t_j, int j, const ScoringData& canvas,
                      const std::vector<const ScoringData*>& sds,
                      const std::vector<const GrayF*>& dists,
                      const std::map<int, RigidTransform>& placements, SliceCache& cache,
                      const SolverParams& params) {
  const ScoringData& fragment = *sds[j];
  const int nt = int(std::lround(params.refine_radius / params.refine_step));
  const int na = int(std::lround(params.refine_angle / params.refine_angle_step));

  struct Best {
    double f = kInfiniteDissimilarity;
    int prio = 1 << 30;
    RigidTransform t;
    bool ok = false;
  };
  std::vector<Best> per_angle(2 * na + 1);

  parallel_for(2 * na + 1, [&](std::int64_t ai) {
    const int da = int(ai) - na;
    Best best;
    for (int dy = -nt; dy <= nt; ++dy) {
      for (int dx = -nt; dx <= nt; ++dx) {
        RigidTransform cand = make_transform(t_j.theta + da * params.refine_angle_step,
                                             t_j.tx + dx * params.refine_step,
                                             t_j.ty + dy * params.refine_step);
        // deep-overlap rejection against every placed fragment, exact poses
        bool clash = false;
        for (const auto& [i, pose_i] : placements) {
          if (i == j) continue;
          if (deep_penetration(*sds[i], *dists[i], pose_i, fragment, *dists[j], cand)) {
            clash = true;
            break;
          }
        }
        if (clash) continue;
        if (!has_band_contact(cand, j, placements, cache)) continue;

        RescoredCandidate rs = rescore_against_placed(canvas, fragment, cand, params);
        const double f = rs.d_canvas + rs.d_fragment;
        if (f == kInfiniteDissimilarity) continue;
        const int prio = std::abs(da) * 1000 + std::abs(dx) + std::abs(dy);
        if (f < best.f || (f == best.f && prio < best.prio)) {
          best.f = f;
          best.prio = prio;
          best.t = cand;
          best.ok = true;
        }
      }
    }
    per_angle[ai] = best;
  });

  Best overall;
  for (const auto& b : per_angle) {
    if (!b.ok) continue;
    if (b.f < overall.f || (b.f == overall.f && b.prio < overall.prio)) overall = b;
  }
  return overall.ok ? overall.t : t_j;
}

// --- the solver ---

namespace {

struct PassFragment {
  Fragment frag;        // possibly pre-rotated raster
  RigidTransform pre;   // original local coords -> rotated local coords
  ExtrapolatedFragment ex;
  ScoringData sd;
  FragGeom geom;
  GrayF dist;  // material distance field
};

struct AliveCandidate {
  int pair_idx = 0;
  int cand_idx = 0;
  bool dead = false;
  // state valid while exactly one endpoint is placed
  int mobile = -1;  // the unplaced fragment
  RigidTransform pose;  // implied global pose of the mobile fragment
  bool activated = false;
  int checked_upto = 0;  // placements already verified against (order index)
  // rescored-by-canvas values
  RescoredCandidate rs;
  double conf = 0;
  bool scored = false;
};

struct PassResult {
  Assembly assembly;
  bool seeded = false;
};

PassResult run_pass(const std::vector<Fragment>& fragments, const SolverParams& params,
                    const SolveOptions& opts, int pass_index, std::uint64_t pass_seed) {
  const int n = int(fragments.size());
  PassResult result;
  result.assembly.seed = pass_seed;

  // pre-rotate rasters (pass 0 keeps the originals)
  std::vector<PassFragment> pf(n);
  parallel_for(n, [&](std::int64_t i) {
    double rho = 0.0;
    if (pass_index > 0) {
      Rng rng(derive_seed(pass_seed, 0xA80u + std::uint64_t(i)));
      rho = rng.uniform(0.0, kTau);
    }
    if (rho == 0.0) {
      pf[i].frag = fragments[i];
      pf[i].pre = identity_transform();
    } else {
      RotatedRaster rot = rotate_raster(fragments[i].pixels, fragments[i].mask, rho);
      pf[i].frag = load_fragment(rot.image, rot.mask, fragments[i].id);
      const double cr = std::cos(rho), sr = std::sin(rho);
      pf[i].pre = make_transform(
          rho, rot.center.x() + rot.offset.x() - (cr * rot.center.x() - sr * rot.center.y()),
          rot.center.y() + rot.offset.y() - (sr * rot.center.x() + cr * rot.center.y()));
    }
    pf[i].ex = extrapolate(pf[i].frag, std::nullopt, params.band_ratio);
    pf[i].sd = build_scoring_data(pf[i].ex, params);
    pf[i].geom = make_frag_geom(pf[i].ex);
    pf[i].dist = material_distance_field(pf[i].sd);
  });

  // pairwise sampling + scoring
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  std::vector<std::vector<MatchCandidate>> stores(pairs.size());
  parallel_for(std::int64_t(pairs.size()), [&](std::int64_t pi) {
    auto [i, j] = pairs[pi];
    PairConfigSpace space = build_pair_space(pf[i].ex, pf[j].ex, params, opts.cache_dir);
    stores[pi] = build_candidate_store(pf[i].sd, pf[j].sd, space, params);
  });
  compute_confidences(stores, params);

  if (opts.score_dump) {
    for (size_t pi = 0; pi < pairs.size(); ++pi)
      for (const auto& c : stores[pi]) {
        opts.score_dump->push_back({c.i, c.j, c.t, c.dc_ij, c.dh_ij, c.curve_ij.length(), c.d_ij});
        opts.score_dump->push_back(
            {c.j, c.i, invert(c.t), c.dc_ji, c.dh_ji, c.curve_ji.length(), c.d_ji});
      }
  }

  // pair links from the placement candidates
  std::vector<PairLink> links;
  std::vector<std::vector<int>> picks(pairs.size());
  for (size_t pi = 0; pi < pairs.size(); ++pi) {
    picks[pi] = placement_candidates(stores[pi], params);
    for (int idx : picks[pi]) {
      auto link = pair_confidence(stores[pi][idx], mirrored(stores[pi][idx]), params);
      if (link) links.push_back(*link);
    }
  }
  if (links.empty()) return result;

  Assembly asm_state = seed_placement(links);
  result.seeded = true;

  std::vector<const FragGeom*> geom_ptrs(n);
  std::vector<const ScoringData*> sd_ptrs(n);
  std::vector<const GrayF*> dist_ptrs(n);
  for (int i = 0; i < n; ++i) {
    geom_ptrs[i] = &pf[i].geom;
    sd_ptrs[i] = &pf[i].sd;
    dist_ptrs[i] = &pf[i].dist;
  }
  SliceCache cache(geom_ptrs, params);

  // canvas with the seed's first fragment
  const int seed_i = asm_state.order[0];
  const int seed_j = asm_state.order[1];
  Canvas canvas;
  canvas.paint(pf[seed_i].sd, asm_state.placements[seed_i]);
  ScoringData canvas_sd = canvas.scoring(params);

  // refine the seed partner like any other placement
  {
    RigidTransform g0 = compose(canvas.canvas_from_global(), asm_state.placements[seed_j]);
    // canvas coords == global coords shifted; run refine in canvas frame
    std::map<int, RigidTransform> placed_c;
    placed_c[seed_i] = compose(canvas.canvas_from_global(), asm_state.placements[seed_i]);
    RigidTransform refined_c = g0;
    for (int round = 0; round < 4; ++round) {
      RigidTransform next =
          refine(refined_c, seed_j, canvas_sd, sd_ptrs, dist_ptrs, placed_c, cache, params);
      const bool moved = next.theta != refined_c.theta || next.tx != refined_c.tx ||
                         next.ty != refined_c.ty;
      refined_c = next;
      if (!moved) break;
    }
    asm_state.placements[seed_j] = compose(invert(canvas.canvas_from_global()), refined_c);
  }
  canvas.paint(pf[seed_j].sd, asm_state.placements[seed_j]);
  canvas_sd = canvas.scoring(params);

  if (opts.snapshot) {
    std::map<int, RigidTransform> poses(asm_state.placements);
    std::vector<Fragment> frags;
    for (const auto& f : pf) frags.push_back(f.frag);
    opts.snapshot(pass_index, int(asm_state.order.size()), render_assembly(frags, poses));
  }

  // candidate worklist
  std::vector<AliveCandidate> alive;
  for (size_t pi = 0; pi < pairs.size(); ++pi)
    for (int idx : picks[pi]) alive.push_back({int(pi), idx});

  while (int(asm_state.order.size()) < n) {
    const RigidTransform to_canvas = canvas.canvas_from_global();

    // activate / legality-check candidates
    for (auto& c : alive) {
      if (c.dead) continue;
      const auto& [a, b] = pairs[c.pair_idx];
      const bool pa = asm_state.placements.count(a) > 0;
      const bool pb = asm_state.placements.count(b) > 0;
      if (pa && pb) {
        c.dead = true;
        continue;
      }
      if (!pa && !pb) continue;
      const MatchCandidate& mc = stores[c.pair_idx][c.cand_idx];
      if (!c.activated) {
        c.activated = true;
        c.mobile = pa ? b : a;
        c.pose = pa ? compose(asm_state.placements.at(a), mc.t)
                    : compose(asm_state.placements.at(b), invert(mc.t));
        c.checked_upto = 0;
        c.scored = false;
      }
      // check legality against newly placed fragments (the paper's step 1)
      while (c.checked_upto < int(asm_state.order.size())) {
        const int placed_id = asm_state.order[c.checked_upto];
        std::map<int, RigidTransform> one;
        one[placed_id] = asm_state.placements.at(placed_id);
        if (!is_legal(c.pose, c.mobile, one, cache)) {
          c.dead = true;
          break;
        }
        ++c.checked_upto;
      }
    }

    // rescore live candidates against the virtual fragment
    std::vector<int> work;
    for (int ci = 0; ci < int(alive.size()); ++ci)
      if (!alive[ci].dead && alive[ci].activated) work.push_back(ci);
    if (work.empty()) break;

    parallel_for(std::int64_t(work.size()), [&](std::int64_t wi) {
      AliveCandidate& c = alive[work[wi]];
      c.rs = rescore_against_placed(canvas_sd, pf[c.mobile].sd, compose(to_canvas, c.pose),
                                    params);
      c.scored = c.rs.d_canvas < kInfiniteDissimilarity &&
                 c.rs.d_fragment < kInfiniteDissimilarity;
    });

    // confidences against competing placements
    for (int idx : work) {
      AliveCandidate& c = alive[idx];
      if (!c.scored) {
        c.conf = 0;
        continue;
      }
      double best_canvas = kInfiniteDissimilarity;
      double best_frag = kInfiniteDissimilarity;
      for (int other_idx : work) {
        if (other_idx == idx) continue;
        const AliveCandidate& o = alive[other_idx];
        if (!o.scored) continue;
        const bool same_mobile = o.mobile == c.mobile;
        const bool near_dup = same_mobile &&
                              xfsim(c.rs.curve_canvas, o.rs.curve_canvas) >= params.gamma_h &&
                              xfsim(c.rs.curve_fragment, o.rs.curve_fragment) >= params.gamma_h;
        if (near_dup) continue;
        if (xfsim(c.rs.curve_canvas, o.rs.curve_canvas) > params.gamma_l)
          best_canvas = std::min(best_canvas, o.rs.d_canvas);
        if (same_mobile && xfsim(c.rs.curve_fragment, o.rs.curve_fragment) > params.gamma_l)
          best_frag = std::min(best_frag, o.rs.d_fragment);
      }
      auto one_sided = [](double d, double best) {
        if (best == kInfiniteDissimilarity) return 1.0;
        if (!(best > 0.0)) return 0.0;
        return std::clamp(1.0 - d / best, 0.0, 1.0);
      };
      c.conf = 0.5 * (one_sided(c.rs.d_canvas, best_canvas) +
                      one_sided(c.rs.d_fragment, best_frag));
    }

    // select the next placement
    int chosen = -1;
    for (int idx : work) {
      const AliveCandidate& c = alive[idx];
      if (!c.scored) continue;
      if (chosen < 0) {
        chosen = idx;
        continue;
      }
      const AliveCandidate& b = alive[chosen];
      const std::int64_t len_c = c.rs.curve_canvas.length() + c.rs.curve_fragment.length();
      const std::int64_t len_b = b.rs.curve_canvas.length() + b.rs.curve_fragment.length();
      if (c.conf > b.conf ||
          (c.conf == b.conf &&
           (len_c > len_b || (len_c == len_b && (c.mobile < b.mobile ||
                                                 (c.mobile == b.mobile && idx < chosen))))))
        chosen = idx;
    }
    if (chosen < 0) break;

    AliveCandidate& win = alive[chosen];
    // exact-overlap guarantee at commit time
    bool placed_ok = false;
    {
      std::map<int, RigidTransform> placed_c;
      for (const auto& [id, pose] : asm_state.placements)
        placed_c[id] = compose(to_canvas, pose);
      RigidTransform pose_c = compose(to_canvas, win.pose);
      RigidTransform refined_c = pose_c;
      for (int round = 0; round < 4; ++round) {
        RigidTransform next = refine(refined_c, win.mobile, canvas_sd, sd_ptrs, dist_ptrs,
                                     placed_c, cache, params);
        const bool moved = next.theta != refined_c.theta || next.tx != refined_c.tx ||
                           next.ty != refined_c.ty;
        refined_c = next;
        if (!moved) break;
      }
      RigidTransform refined = compose(invert(to_canvas), refined_c);
      bool clash = false;
      for (const auto& [id, pose] : asm_state.placements)
        if (deep_penetration(pf[id].sd, pf[id].dist, pose, pf[win.mobile].sd,
                             pf[win.mobile].dist, refined)) {
          clash = true;
          break;
        }
      if (!clash) {
        asm_state.placements[win.mobile] = refined;
        asm_state.order.push_back(win.mobile);
        asm_state.step_confidences.push_back(win.conf);
        asm_state.total_confidence += win.conf;
        canvas.paint(pf[win.mobile].sd, refined);
        canvas_sd = canvas.scoring(params);
        placed_ok = true;
        // poses of the remaining candidates touching this fragment activate
        // next iteration; candidates of the placed fragment die there too
      }
    }
    win.dead = true;  // consumed or rejected by the exact-overlap gate
    if (placed_ok) {
      if (opts.snapshot) {
        std::vector<Fragment> frags;
        for (const auto& f : pf) frags.push_back(f.frag);
        opts.snapshot(pass_index, int(asm_state.order.size()),
                      render_assembly(frags, asm_state.placements));
      }
    }
  }

  // translate poses back to the original (unrotated) fragment frames
  Assembly out;
  out.seed = pass_seed;
  out.order = asm_state.order;
  out.step_confidences = asm_state.step_confidences;
  out.total_confidence = asm_state.total_confidence;
  for (const auto& [id, pose] : asm_state.placements)
    out.placements[id] = compose(pose, pf[id].pre);
  for (int i = 0; i < n; ++i)
    if (!out.placements.count(i)) out.unplaced.push_back(i);
  out.partial = !out.unplaced.empty();
  result.assembly = std::move(out);
  return result;
}

}  // namespace

SolveResult solve(const std::vector<Fragment>& fragments, const SolverParams& params,
                  const SolveOptions& opts) {
  if (fragments.size() < 2) throw std::invalid_argument("need at least 2 fragments");
  for (size_t i = 0; i < fragments.size(); ++i)
    if (fragments[i].id != int(i))
      throw std::invalid_argument("fragment ids must equal their positions");
  params.validate();

  SolveResult result;
  Assembly best;
  bool have = false;
  for (int pass = 0; pass < params.restarts; ++pass) {
    const std::uint64_t pass_seed = derive_seed(opts.seed, 0x9A55u, std::uint64_t(pass));
    PassResult pr = run_pass(fragments, params, opts, pass, pass_seed);
    if (!pr.seeded) {
      result.pass_totals.push_back(0.0);
      continue;
    }
    result.pass_totals.push_back(pr.assembly.total_confidence);
    if (!have || pr.assembly.total_confidence > best.total_confidence) {
      best = std::move(pr.assembly);
      have = true;
    }
  }
  if (!have) {
    best.partial = true;
    for (size_t i = 0; i < fragments.size(); ++i) best.unplaced.push_back(int(i));
  }
  result.assembly = std::move(best);
  return result;
}

ImageRGB render_assembly(const std::vector<Fragment>& fragments,
                         const std::map<int, RigidTransform>& placements, int margin) {
  Box2 box;
  for (const auto& [id, pose] : placements) {
    const Fragment& f = fragments.at(id);
    const Vec2 corners[4] = {Vec2(0, 0), Vec2(f.pixels.width() - 1, 0),
                             Vec2(f.pixels.width() - 1, f.pixels.height() - 1),
                             Vec2(0, f.pixels.height() - 1)};
    for (const auto& c : corners) box.expand(apply(pose, c));
  }
  if (box.empty()) box = Box2{Vec2(0, 0), Vec2(1, 1)};

  const int w = int(std::ceil(box.size().x())) + 2 * margin;
  const int h = int(std::ceil(box.size().y())) + 2 * margin;
  ImageRGB img;
  img.r = GrayU8::Zero(h, w);
  img.g = GrayU8::Zero(h, w);
  img.b = GrayU8::Zero(h, w);

  for (const auto& [id, pose] : placements) {
    const Fragment& f = fragments.at(id);
    GrayF matf(f.pixels.height(), f.pixels.width());
    GrayF fr(f.pixels.height(), f.pixels.width()), fg = matf, fb = matf;
    for (int y = 0; y < f.pixels.height(); ++y)
      for (int x = 0; x < f.pixels.width(); ++x) {
        matf(y, x) = f.mask(y, x) ? 1.0f : 0.0f;
        fr(y, x) = f.pixels.r(y, x);
        fg(y, x) = f.pixels.g(y, x);
        fb(y, x) = f.pixels.b(y, x);
      }
    const RigidTransform inv = invert(pose);
    Box2 fb_box;
    const Vec2 corners[4] = {Vec2(0, 0), Vec2(f.pixels.width() - 1, 0),
                             Vec2(f.pixels.width() - 1, f.pixels.height() - 1),
                             Vec2(0, f.pixels.height() - 1)};
    for (const auto& c : corners) fb_box.expand(apply(pose, c));
    const int x0 = std::max(0, int(std::floor(fb_box.lo.x() - box.lo.x())) + margin - 1);
    const int y0 = std::max(0, int(std::floor(fb_box.lo.y() - box.lo.y())) + margin - 1);
    const int x1 = std::min(w - 1, int(std::ceil(fb_box.hi.x() - box.lo.x())) + margin + 1);
    const int y1 = std::min(h - 1, int(std::ceil(fb_box.hi.y() - box.lo.y())) + margin + 1);
    const double ci = std::cos(inv.theta), si = std::sin(inv.theta);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double gx = x - margin + box.lo.x(), gy = y - margin + box.lo.y();
        const double qx = ci * gx - si * gy + inv.tx;
        const double qy = si * gx + ci * gy + inv.ty;
        if (qx < -1 || qy < -1 || qx > f.pixels.width() || qy > f.pixels.height()) continue;
        const float cover = sample_bilinear(matf, qx, qy);
        if (cover <= 0.5f) continue;
        // border: the nearest fragment pixel touches non-material
        const int rx = std::clamp(int(std::floor(qx + 0.5)), 0, f.pixels.width() - 1);
        const int ry = std::clamp(int(std::floor(qy + 0.5)), 0, f.pixels.height() - 1);
        bool border = !f.mask(ry, rx);
        if (!border) {
          for (int k = 0; k < 4 && !border; ++k) {
            const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
            const int nx = rx + dxs[k], ny = ry + dys[k];
            border = nx < 0 || ny < 0 || nx >= f.pixels.width() || ny >= f.pixels.height() ||
                     !f.mask(ny, nx);
          }
        }
        if (border) {
          img.r(y, x) = 0;
          img.g(y, x) = 255;
          img.b(y, x) = 255;  // cyan fragment borders
        } else {
          img.r(y, x) = std::uint8_t(std::lround(sample_bilinear(fr, qx, qy)));
          img.g(y, x) = std::uint8_t(std::lround(sample_bilinear(fg, qx, qy)));
          img.b(y, x) = std::uint8_t(std::lround(sample_bilinear(fb, qx, qy)));
        }
      }
  }
  return img;
}

std::int64_t audit_material_overlap(const std::vector<Fragment>& fragments,
                                    const std::map<int, RigidTransform>& placements) {
  Box2 box;
  for (const auto& [id, pose] : placements) {
    const Fragment& f = fragments.at(id);
    const Vec2 corners[4] = {Vec2(0, 0), Vec2(f.pixels.width() - 1, 0),
                             Vec2(f.pixels.width() - 1, f.pixels.height() - 1),
                             Vec2(0, f.pixels.height() - 1)};
    for (const auto& c : corners) box.expand(apply(pose, c));
  }
  if (box.empty()) return 0;
  const int w = int(std::ceil(box.size().x())) + 4;
  const int h = int(std::ceil(box.size().y())) + 4;
  Eigen::Array<std::int16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> owner(h, w);
  owner.setConstant(-1);
  std::int64_t overlaps = 0;

  for (const auto& [id, pose] : placements) {
    const Fragment& f = fragments.at(id);
    // interior = material pixels whose 4-neighborhood is material (1 px deep)
    for (int y = 1; y < f.pixels.height() - 1; ++y)
      for (int x = 1; x < f.pixels.width() - 1; ++x) {
        if (!f.mask(y, x) || !f.mask(y - 1, x) || !f.mask(y + 1, x) || !f.mask(y, x - 1) ||
            !f.mask(y, x + 1))
          continue;
        const Vec2 g = apply(pose, Vec2(x, y));
        const int cx = int(std::lround(g.x() - box.lo.x())) + 2;
        const int cy = int(std::lround(g.y() - box.lo.y())) + 2;
        if (cx < 0 || cy < 0 || cx >= w || cy >= h) continue;
        if (owner(cy, cx) >= 0 && owner(cy, cx) != id) ++overlaps;
        owner(cy, cx) = std::int16_t(id);
      }
  }
  return overlaps;
}

}  // namespace fresco

#include "fresco/extrapolate.hpp"

#include "fresco/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fresco {

namespace {

constexpr int kPatch = 3;  // 7x7 window radius

struct SynthGrid {
  int w = 0, h = 0, pad = 0;
  GrayF L, a, b;
  MaskGrid known;     // material or already-filled band
  MaskGrid material;  // material only
  MaskGrid band;
  GrayU8 ring_depth;  // dilation ring index of each band pixel (capped 255)
  // harmonic-style continuation: ring-by-ring averaging of known neighbors;
  // increasingly blurred with depth, the least-risk deep prediction
  GrayF diff_L, diff_a, diff_b;
  // source position (in padded coords) each filled pixel copied from
  std::vector<std::int32_t> src;
  // low-frequency prior from the coarser scale (may be empty)
  GrayF prior_L, prior_a, prior_b;
  MaskGrid prior_ok;
  float prior_scale = 0.0f;  // per-ring weight; shallow rings trust patches alone

  int idx(int x, int y) const { return y * w + x; }
  bool has_prior() const { return prior_ok.size() > 0; }
};

// prior pull approximates this many known pixels in the patch distance
constexpr float kPriorWeight = 6.0f;

float patch_ssd(const SynthGrid& g, int tx, int ty, int sx, int sy) {
  float acc = 0.0f;
  int count = 0;
  for (int dy = -kPatch; dy <= kPatch; ++dy) {
    const int tyy = ty + dy, syy = sy + dy;
    if (tyy < 0 || tyy >= g.h || syy < 0 || syy >= g.h) continue;
    for (int dx = -kPatch; dx <= kPatch; ++dx) {
      const int txx = tx + dx, sxx = sx + dx;
      if (txx < 0 || txx >= g.w || sxx < 0 || sxx >= g.w) continue;
      if (!g.known(tyy, txx) || !g.material(syy, sxx)) continue;
      float dl = g.L(tyy, txx) - g.L(syy, sxx);
      float da = g.a(tyy, txx) - g.a(syy, sxx);
      float db = g.b(tyy, txx) - g.b(syy, sxx);
      acc += dl * dl + da * da + db * db;
      ++count;
    }
  }
  if (count < 8) return 1e30f;
  float score = acc / float(count);
  if (g.prior_scale > 0 && g.has_prior() && g.prior_ok(ty, tx)) {
    float dl = g.L(sy, sx) - g.prior_L(ty, tx);
    float da = g.a(sy, sx) - g.prior_a(ty, tx);
    float db = g.b(sy, sx) - g.prior_b(ty, tx);
    // steer the choice toward the coarse-scale continuation
    score = (acc + g.prior_scale * (dl * dl + da * da + db * db)) / float(count + 1);
  }
  return score;
}

// One full onion-layer synthesis over a prepared grid.
void synth_rings(SynthGrid& g, int width, std::uint64_t seed,
                 const std::vector<std::int32_t>& material_px, bool tiny) {
  std::vector<std::int32_t> nearest(size_t(g.w) * g.h, -1);
  for (std::int32_t p : material_px) nearest[p] = p;

  Rng rng(seed);
  MaskGrid frontier = g.known;
  const int nbx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int nby[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  for (int ring = 1; ring <= width; ++ring) {
    std::vector<std::int32_t> ring_px;
    for (int y = 1; y < g.h - 1; ++y)
      for (int x = 1; x < g.w - 1; ++x) {
        if (frontier(y, x)) continue;
        bool adj = false;
        for (int k = 0; k < 8 && !adj; ++k) adj = frontier(y + nby[k], x + nbx[k]);
        if (adj) ring_px.push_back(g.idx(x, y));
      }
    if (ring_px.empty()) break;
    g.prior_scale = ring < 3 ? 0.0f : kPriorWeight;

    auto coherence_cands = [&](int x, int y, std::int32_t* cands, int& nc) {
      for (int k = 0; k < 8 && nc < 8; ++k) {
        const int qx = x + nbx[k], qy = y + nby[k];
        std::int32_t q = g.idx(qx, qy);
        if (!g.known(qy, qx) || g.src[q] < 0 || g.src[q] == q) continue;
        int sx = g.src[q] % g.w + (x - qx), sy = g.src[q] / g.w + (y - qy);
        if (sx < kPatch || sy < kPatch || sx >= g.w - kPatch || sy >= g.h - kPatch) continue;
        if (!g.material(sy, sx)) continue;
        cands[nc++] = g.idx(sx, sy);
      }
      // material neighbors anchor the band to the true boundary content
      for (int k = 0; k < 8 && nc < 16; ++k) {
        const int qx = x + nbx[k], qy = y + nby[k];
        if (!g.material(qy, qx)) continue;
        if (qx < kPatch || qy < kPatch || qx >= g.w - kPatch || qy >= g.h - kPatch) continue;
        cands[nc++] = g.idx(qx, qy);
      }
    };

    auto commit = [&](int x, int y, std::int32_t chosen) {
      g.L(y, x) = g.L(chosen / g.w, chosen % g.w);
      g.a(y, x) = g.a(chosen / g.w, chosen % g.w);
      g.b(y, x) = g.b(chosen / g.w, chosen % g.w);
      g.src[g.idx(x, y)] = chosen;
    };

    for (std::int32_t p : ring_px) {
      const int x = p % g.w, y = p / g.w;
      std::int32_t near = -1;
      double near_d = 1e30;
      for (int k = 0; k < 8; ++k) {
        std::int32_t q = g.idx(x + nbx[k], y + nby[k]);
        if (nearest[q] < 0) continue;
        int qx = nearest[q] % g.w, qy = nearest[q] / g.w;
        double d = double(qx - x) * (qx - x) + double(qy - y) * (qy - y);
        if (d < near_d) {
          near_d = d;
          near = nearest[q];
        }
      }
      nearest[p] = near;

      std::int32_t chosen = near;
      if (!tiny) {
        std::int32_t cands[64];
        int nc = 0;
        coherence_cands(x, y, cands, nc);
        const int n_rand = ring <= 3 ? 32 : 12;
        for (int k = 0; k < n_rand; ++k)
          cands[nc++] = material_px[size_t(rng.range(material_px.size()))];
        if (near >= 0) cands[nc++] = near;

        float best = 1e29f;
        for (int k = 0; k < nc; ++k) {
          const int sx = cands[k] % g.w, sy = cands[k] / g.w;
          float ssd = patch_ssd(g, x, y, sx, sy);
          if (ssd < best) {
            best = ssd;
            chosen = cands[k];
          }
        }
      }
      if (chosen < 0) chosen = material_px.front();
      commit(x, y, chosen);
      g.known(y, x) = 1;
      g.band(y, x) = 1;
      g.ring_depth(y, x) = std::uint8_t(std::min(ring, 255));
      // diffusion average over already-known neighbors
      {
        float sl = 0, sa = 0, sb = 0;
        int cnt = 0;
        for (int k = 0; k < 8; ++k) {
          const int qx = x + nbx[k], qy = y + nby[k];
          if (!g.known(qy, qx) || g.idx(qx, qy) == g.idx(x, y)) continue;
          if (!g.band(qy, qx) && !g.material(qy, qx)) continue;
          sl += g.diff_L(qy, qx);
          sa += g.diff_a(qy, qx);
          sb += g.diff_b(qy, qx);
          ++cnt;
        }
        if (cnt) {
          g.diff_L(y, x) = sl / cnt;
          g.diff_a(y, x) = sa / cnt;
          g.diff_b(y, x) = sb / cnt;
        }
      }
    }

    // one relaxation pass keeps the diffusion field smooth
    for (std::int32_t pr : ring_px) {
      const int x = pr % g.w, y = pr / g.w;
      float sl = 0, sa = 0, sb = 0;
      int cnt = 0;
      for (int k = 0; k < 8; ++k) {
        const int qx = x + nbx[k], qy = y + nby[k];
        if (!g.known(qy, qx)) continue;
        sl += g.diff_L(qy, qx);
        sa += g.diff_a(qy, qx);
        sb += g.diff_b(qy, qx);
        ++cnt;
      }
      if (cnt) {
        g.diff_L(y, x) = 0.5f * g.diff_L(y, x) + 0.5f * sl / cnt;
        g.diff_a(y, x) = 0.5f * g.diff_a(y, x) + 0.5f * sa / cnt;
        g.diff_b(y, x) = 0.5f * g.diff_b(y, x) + 0.5f * sb / cnt;
      }
    }

    // reverse sweep: let good matches propagate against the scan order too
    if (!tiny) {
      for (auto it = ring_px.rbegin(); it != ring_px.rend(); ++it) {
        const int x = *it % g.w, y = *it / g.w;
        std::int32_t cands[24];
        int nc = 0;
        coherence_cands(x, y, cands, nc);
        std::int32_t chosen = g.src[*it];
        float best = chosen >= 0 ? patch_ssd(g, x, y, chosen % g.w, chosen / g.w) : 1e29f;
        for (int k = 0; k < nc; ++k) {
          const int sx = cands[k] % g.w, sy = cands[k] / g.w;
          float ssd = patch_ssd(g, x, y, sx, sy);
          if (ssd < best) {
            best = ssd;
            chosen = cands[k];
          }
        }
        if (chosen >= 0 && chosen != g.src[*it]) commit(x, y, chosen);
      }
    }
    frontier = g.known;
  }
}

// Synthesized band planes on a grid padded by width + 2.
struct BandPlanes {
  int pad = 0;
  GrayF L, a, b;
  MaskGrid band;
  MaskGrid region;
};

// Box-downsample of the in-mask content by 2.
void downsample(const GrayF& L, const GrayF& a, const GrayF& b, const MaskGrid& mask,
                GrayF* cl, GrayF* ca, GrayF* cb, MaskGrid* cm) {
  const int w = int(mask.cols()), h = int(mask.rows());
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  *cl = GrayF::Zero(ch, cw);
  *ca = GrayF::Zero(ch, cw);
  *cb = GrayF::Zero(ch, cw);
  *cm = MaskGrid::Zero(ch, cw);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      float sl = 0, sa = 0, sb = 0;
      int cnt = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int yy = 2 * y + dy, xx = 2 * x + dx;
          if (xx >= w || yy >= h || !mask(yy, xx)) continue;
          sl += L(yy, xx);
          sa += a(yy, xx);
          sb += b(yy, xx);
          ++cnt;
        }
      if (cnt) {
        (*cl)(y, x) = sl / cnt;
        (*ca)(y, x) = sa / cnt;
        (*cb)(y, x) = sb / cnt;
        (*cm)(y, x) = 1;
      }
    }
}

BandPlanes synth_band(const GrayF& L, const GrayF& a, const GrayF& b, const MaskGrid& mask,
                      int width, std::uint64_t seed, int level) {
  const int fw = int(mask.cols()), fh = int(mask.rows());
  const int pad = width + 2;
  const int w = fw + 2 * pad, h = fh + 2 * pad;

  SynthGrid g;
  g.w = w;
  g.h = h;
  g.pad = pad;
  g.L = GrayF::Zero(h, w);
  g.a = GrayF::Zero(h, w);
  g.b = GrayF::Zero(h, w);
  g.known = MaskGrid::Zero(h, w);
  g.material = MaskGrid::Zero(h, w);
  g.band = MaskGrid::Zero(h, w);
  g.ring_depth = GrayU8::Zero(h, w);
  g.diff_L = GrayF::Zero(h, w);
  g.diff_a = GrayF::Zero(h, w);
  g.diff_b = GrayF::Zero(h, w);
  g.src.assign(size_t(w) * h, -1);

  std::int64_t material_count = 0;
  Box2 bbox;
  for (int y = 0; y < fh; ++y)
    for (int x = 0; x < fw; ++x) {
      if (!mask(y, x)) continue;
      g.L(y + pad, x + pad) = L(y, x);
      g.a(y + pad, x + pad) = a(y, x);
      g.b(y + pad, x + pad) = b(y, x);
      g.known(y + pad, x + pad) = 1;
      g.material(y + pad, x + pad) = 1;
      g.diff_L(y + pad, x + pad) = L(y, x);
      g.diff_a(y + pad, x + pad) = a(y, x);
      g.diff_b(y + pad, x + pad) = b(y, x);
      g.src[g.idx(x + pad, y + pad)] = g.idx(x + pad, y + pad);
      ++material_count;
      bbox.expand(Vec2(x, y));
    }

  const bool tiny = material_count < 49 || bbox.size().x() + 1 < 2 * kPatch + 1 ||
                    bbox.size().y() + 1 < 2 * kPatch + 1;

  // coarse-to-fine: a half-scale pass supplies the low-frequency continuation
  // so deep rings do not drift
  if (!tiny && width > 6 && std::min(fw, fh) >= 24 && level < 4) {
    GrayF cl, ca, cb;
    MaskGrid cm;
    downsample(L, a, b, mask, &cl, &ca, &cb, &cm);
    const int cwidth = (width + 1) / 2 + 1;
    BandPlanes coarse = synth_band(cl, ca, cb, cm, cwidth, derive_seed(seed, 0xC0A5u), level + 1);

    g.prior_L = GrayF::Zero(h, w);
    g.prior_a = GrayF::Zero(h, w);
    g.prior_b = GrayF::Zero(h, w);
    g.prior_ok = MaskGrid::Zero(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (g.material(y, x)) continue;
        // fine local coords -> coarse padded coords (pixel centers)
        const double lx = x - pad, ly = y - pad;
        const double qx = (lx - 0.5) / 2.0 + coarse.pad;
        const double qy = (ly - 0.5) / 2.0 + coarse.pad;
        float vl, va, vb;
        if (sample_bilinear_masked(coarse.L, coarse.region, qx, qy, &vl) &&
            sample_bilinear_masked(coarse.a, coarse.region, qx, qy, &va) &&
            sample_bilinear_masked(coarse.b, coarse.region, qx, qy, &vb)) {
          g.prior_L(y, x) = vl;
          g.prior_a(y, x) = va;
          g.prior_b(y, x) = vb;
          g.prior_ok(y, x) = 1;
        }
      }
  }

  std::vector<std::int32_t> material_px;
  material_px.reserve(size_t(material_count));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (g.material(y, x)) material_px.push_back(g.idx(x, y));

  synth_rings(g, width, derive_seed(seed, 0xB4D0u + std::uint64_t(level)), material_px, tiny);

  // structure drift grows with ring depth; decay deep content toward the
  // diffusion continuation, whose blur makes it the least-risk prediction
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!g.band(y, x)) continue;
      const double depth = g.ring_depth(y, x);
      if (depth <= 4.0) continue;
      const float wgt = float(std::min(0.9, (depth - 4.0) / 10.0));
      g.L(y, x) = (1 - wgt) * g.L(y, x) + wgt * g.diff_L(y, x);
      g.a(y, x) = (1 - wgt) * g.a(y, x) + wgt * g.diff_a(y, x);
      g.b(y, x) = (1 - wgt) * g.b(y, x) + wgt * g.diff_b(y, x);
    }

  BandPlanes out;
  out.pad = pad;
  out.L = std::move(g.L);
  out.a = std::move(g.a);
  out.b = std::move(g.b);
  out.band = std::move(g.band);
  out.region = std::move(g.known);
  return out;
}

}  // namespace

ExtrapolatedFragment extrapolate(const Fragment& fragment, std::optional<int> width_override,
                                 double band_ratio) {
  ExtrapolatedFragment out;
  out.base = fragment;
  int width;
  if (width_override) {
    width = *width_override;
  } else {
    width = int(std::lround(perimeter(fragment.boundary) * band_ratio));
    width = std::clamp(width, 8, 64);
  }
  out.width = width;

  BandPlanes planes =
      synth_band(fragment.lab.L, fragment.lab.a, fragment.lab.b, fragment.mask, width,
                 derive_seed(0x9du, std::uint64_t(fragment.id), 0xb4du), 0);
  out.pad = planes.pad;
  out.band_mask = std::move(planes.band);
  out.region_plus = std::move(planes.region);
  out.lab_plus.L = std::move(planes.L);
  out.lab_plus.a = std::move(planes.a);
  out.lab_plus.b = std::move(planes.b);

  // composite RGB for debugging and rendering
  const int w = int(out.region_plus.cols()), h = int(out.region_plus.rows());
  out.pixels_plus.r = GrayU8::Zero(h, w);
  out.pixels_plus.g = GrayU8::Zero(h, w);
  out.pixels_plus.b = GrayU8::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!out.region_plus(y, x)) continue;
      const int fx = x - out.pad, fy = y - out.pad;
      if (fx >= 0 && fy >= 0 && fx < fragment.pixels.width() && fy < fragment.pixels.height() &&
          fragment.mask(fy, fx)) {
        out.pixels_plus.r(y, x) = fragment.pixels.r(fy, fx);
        out.pixels_plus.g(y, x) = fragment.pixels.g(fy, fx);
        out.pixels_plus.b(y, x) = fragment.pixels.b(fy, fx);
      } else {
        double r, gg, b;
        lab_to_rgb(LabColor{out.lab_plus.L(y, x), out.lab_plus.a(y, x), out.lab_plus.b(y, x)},
                   &r, &gg, &b);
        out.pixels_plus.r(y, x) = std::uint8_t(std::lround(r));
        out.pixels_plus.g(y, x) = std::uint8_t(std::lround(gg));
        out.pixels_plus.b(y, x) = std::uint8_t(std::lround(b));
      }
    }

  Polygon plus = trace_boundary(out.region_plus, 1.5, /*keep_inside=*/true);
  auto shift = [&](Ring& r) {
    for (auto& v : r) v -= Vec2(out.pad, out.pad);
  };
  shift(plus.outer);
  for (auto& hole : plus.holes) shift(hole);
  out.boundary_plus = plus;
  return out;
}

void dump_extrapolation_png(const ExtrapolatedFragment& ex, const std::string& path) {
  ImageRGB img = ex.pixels_plus;
  const int h = img.height(), w = img.width();
  // original boundary in yellow
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int fx = x - ex.pad, fy = y - ex.pad;
      if (fx < 0 || fy < 0 || fx >= ex.base.pixels.width() || fy >= ex.base.pixels.height())
        continue;
      if (!ex.base.mask(fy, fx)) continue;
      bool edge = false;
      for (int k = 0; k < 4 && !edge; ++k) {
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        int nx = fx + dx[k], ny = fy + dy[k];
        edge = nx < 0 || ny < 0 || nx >= ex.base.pixels.width() ||
               ny >= ex.base.pixels.height() || !ex.base.mask(ny, nx);
      }
      if (edge) {
        img.r(y, x) = 255;
        img.g(y, x) = 230;
        img.b(y, x) = 0;
      }
    }
  write_png(path, img);
}

}  // namespace fresco

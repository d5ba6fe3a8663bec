#include "fresco/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;
constexpr double kHistCap = 1e3;  // a(d) cap when the smaller bin is zero

inline int floor_int(double v) { return int(std::floor(v)); }
inline int round_int(double v) { return int(std::floor(v + 0.5)); }

inline int bin_of(double dir, int bins) {
  int b = int(normalize_angle(dir) * double(bins) / kTau);
  return b >= bins ? bins - 1 : b;
}

// any of the four bilinear corners inside the mask
inline bool corner_hit(const MaskGrid& m, int x0, int y0) {
  const int w = int(m.cols()), h = int(m.rows());
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      int x = x0 + dx, y = y0 + dy;
      if (x >= 0 && y >= 0 && x < w && y < h && m(y, x)) return true;
    }
  return false;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * double(i) * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

void smooth_circular(const double* in, double* out, int n, const std::vector<double>& kernel) {
  const int radius = int(kernel.size() / 2);
  for (int i = 0; i < n; ++i) {
    double acc = 0;
    for (int d = -radius; d <= radius; ++d) {
      int j = (i + d) % n;
      if (j < 0) j += n;
      acc += kernel[d + radius] * in[j];
    }
    out[i] = acc;
  }
}

double histogram_term_raw(const double* h1, const double* h2, int n) {
  double acc = 0;
  for (int d = 0; d < n; ++d) {
    const double a = h1[d], b = h2[d];
    if (a == 0.0 && b == 0.0) continue;
    const double hi = std::max(a, b), lo = std::min(a, b);
    const double ratio = lo <= 0.0 ? kHistCap : std::min(kHistCap, hi / lo);
    acc += std::abs(a - b) * (1.0 + std::log(ratio));
  }
  return acc;
}

// shared scratch for the per-candidate histograms
struct HistScratch {
  std::vector<double> raw_a, raw_b, sm_a, sm_b;
  std::vector<double> kernel;
  double sigma = 0;
  void prepare(int bins, double sig) {
    if (int(raw_a.size()) != bins) {
      raw_a.assign(bins, 0.0);
      raw_b.assign(bins, 0.0);
      sm_a.assign(bins, 0.0);
      sm_b.assign(bins, 0.0);
    } else {
      std::fill(raw_a.begin(), raw_a.end(), 0.0);
      std::fill(raw_b.begin(), raw_b.end(), 0.0);
    }
    if (kernel.empty() || sigma != sig) {
      kernel = gaussian_kernel(sig);
      sigma = sig;
    }
  }
  double finish(double total_a, double total_b) {
    const int n = int(raw_a.size());
    if (total_a == 0.0 && total_b == 0.0) return 0.0;
    smooth_circular(raw_a.data(), sm_a.data(), n, kernel);
    smooth_circular(raw_b.data(), sm_b.data(), n, kernel);
    return histogram_term_raw(sm_a.data(), sm_b.data(), n);
  }
};

thread_local HistScratch g_scratch;

}  // namespace

double GradientHistogram::total() const {
  double t = 0;
  for (double v : bins) t += v;
  return t;
}

ScoringData build_scoring_data_from_planes(int id, const MaskGrid& material, const MaskGrid& band,
                                           const LabPlanes& lab, const GradientField& field,
                                           const SolverParams& params) {
  ScoringData out;
  out.id = id;
  out.pad = 0;
  out.lab = lab;
  out.band = band;
  out.field = field;
  out.region = material.max(band);
  // shallow ring: band pixels within 6 px (chebyshev) of material
  {
    MaskGrid reach = material;
    for (int ring = 0; ring < 6; ++ring) {
      MaskGrid next = reach;
      for (int y = 0; y < int(reach.rows()); ++y)
        for (int x = 0; x < int(reach.cols()); ++x) {
          if (reach(y, x)) continue;
          for (int dy = -1; dy <= 1 && !next(y, x); ++dy)
            for (int dx = -1; dx <= 1 && !next(y, x); ++dx) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= int(reach.rows()) || xx >= int(reach.cols()))
                continue;
              if (reach(yy, xx)) next(y, x) = 1;
            }
        }
      reach.swap(next);
    }
    out.shallow = band.min(reach);
  }

  const int w = int(material.cols()), h = int(material.rows());
  std::vector<std::int32_t> xs, ys;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!material(y, x)) continue;
      bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !material(y, x - 1) ||
                  !material(y, x + 1) || !material(y - 1, x) || !material(y + 1, x);
      if (!edge) continue;
      xs.push_back(x);
      ys.push_back(y);
      out.bbox.expand(Vec2(x, y));
    }

  // bucket CSR
  out.cell = 16.0;
  out.cell_x0 = out.bbox.empty() ? 0 : out.bbox.lo.x();
  out.cell_y0 = out.bbox.empty() ? 0 : out.bbox.lo.y();
  out.cells_x = std::max(1, int(std::floor((out.bbox.size().x()) / out.cell)) + 1);
  out.cells_y = std::max(1, int(std::floor((out.bbox.size().y()) / out.cell)) + 1);
  const auto cell_of = [&](std::int32_t x, std::int32_t y) {
    int cx = int((x - out.cell_x0) / out.cell);
    int cy = int((y - out.cell_y0) / out.cell);
    return cy * out.cells_x + cx;
  };
  std::vector<std::int32_t> counts(size_t(out.cells_x) * out.cells_y + 1, 0);
  for (size_t i = 0; i < xs.size(); ++i) ++counts[cell_of(xs[i], ys[i]) + 1];
  for (size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  out.cell_start = counts;

  const size_t n = xs.size();
  out.px.resize(n);
  out.py.resize(n);
  out.pL.resize(n);
  out.pa.resize(n);
  out.pb.resize(n);
  out.pw.resize(n);
  out.pdir.resize(n);
  out.pbin.resize(n);
  std::vector<std::int32_t> cursor(counts.begin(), counts.end() - 1);
  for (size_t i = 0; i < n; ++i) {
    const std::int32_t x = xs[i], y = ys[i];
    std::int32_t slot = cursor[cell_of(x, y)]++;
    out.px[slot] = x;
    out.py[slot] = y;
    out.pL[slot] = lab.L(y, x);
    out.pa[slot] = lab.a(y, x);
    out.pb[slot] = lab.b(y, x);
    out.pw[slot] = field.weight(y, x);
    out.pdir[slot] = field.direction(y, x);
    out.pbin[slot] = std::uint8_t(bin_of(field.direction(y, x), params.histogram_bins));
  }
  return out;
}

ScoringData build_scoring_data(const ExtrapolatedFragment& ex, const SolverParams& params) {
  auto palettes =
      build_palettes(ex.lab_plus, ex.region_plus, params.palette_ks, std::uint64_t(ex.base.id));
  GradientField field = palette_gradient_field(ex.lab_plus, ex.region_plus, palettes);

  // boundary arrays index the PADDED planes; store local coords and pad
  const int pad = ex.pad;
  MaskGrid material = MaskGrid::Zero(ex.region_plus.rows(), ex.region_plus.cols());
  for (int y = 0; y < int(ex.base.mask.rows()); ++y)
    for (int x = 0; x < int(ex.base.mask.cols()); ++x)
      if (ex.base.mask(y, x)) material(y + pad, x + pad) = 1;

  ScoringData out = build_scoring_data_from_planes(ex.base.id, material, ex.band_mask,
                                                   ex.lab_plus, field, params);
  out.palettes = std::move(palettes);
  // shift boundary coords from padded-grid to local frame
  for (auto& v : out.px) v -= pad;
  for (auto& v : out.py) v -= pad;
  out.cell_x0 -= pad;
  out.cell_y0 -= pad;
  out.bbox.lo -= Vec2(pad, pad);
  out.bbox.hi -= Vec2(pad, pad);
  out.pad = pad;
  return out;
}

OverlapCurve overlap_curve(const ScoringData& a, const ScoringData& b, const RigidTransform& t) {
  OverlapCurve out;
  const RigidTransform inv = invert(t);
  const double c = std::cos(inv.theta), s = std::sin(inv.theta);
  for (std::int32_t i = 0; i < a.count(); ++i) {
    const double lx = a.px[i], ly = a.py[i];
    const double qx = c * lx - s * ly + inv.tx + b.pad;
    const double qy = s * lx + c * ly + inv.ty + b.pad;
    if (corner_hit(b.band, floor_int(qx), floor_int(qy))) out.ids.push_back(i);
  }
  return out;
}

std::vector<Eigen::Vector2i> curve_points(const ScoringData& a, const OverlapCurve& curve) {
  std::vector<Eigen::Vector2i> pts;
  pts.reserve(curve.ids.size());
  for (std::int32_t id : curve.ids) pts.push_back(Eigen::Vector2i(a.px[id], a.py[id]));
  return pts;
}

double color_term(const ScoringData& a, const ScoringData& b, const RigidTransform& t,
                  const OverlapCurve& curve) {
  const RigidTransform inv = invert(t);
  const double c = std::cos(inv.theta), s = std::sin(inv.theta);
  const float penalty = max_lab_l1();
  double acc = 0;
  for (std::int32_t id : curve.ids) {
    const double lx = a.px[id], ly = a.py[id];
    const double qx = c * lx - s * ly + inv.tx + b.pad;
    const double qy = s * lx + c * ly + inv.ty + b.pad;
    if (!corner_hit(b.band, floor_int(qx), floor_int(qy))) {
      acc += penalty;  // curve pixel no longer lands in the band
      continue;
    }
    float L, aa, bb;
    if (!sample_bilinear_masked(b.lab.L, b.region, qx, qy, &L) ||
        !sample_bilinear_masked(b.lab.a, b.region, qx, qy, &aa) ||
        !sample_bilinear_masked(b.lab.b, b.region, qx, qy, &bb)) {
      acc += penalty;
      continue;
    }
    acc += std::abs(a.pL[id] - L) + std::abs(a.pa[id] - aa) + std::abs(a.pb[id] - bb);
  }
  return acc;
}

GradientHistogram gradient_histogram(const std::vector<Eigen::Vector2i>& points,
                                     const GradientField& field, const SolverParams& params,
                                     double rotate_directions) {
  const int n = params.histogram_bins;
  std::vector<double> raw(n, 0.0);
  const int w = int(field.weight.cols()), h = int(field.weight.rows());
  for (const auto& p : points) {
    if (p.x() < 0 || p.y() < 0 || p.x() >= w || p.y() >= h) continue;
    const float wgt = field.weight(p.y(), p.x());
    if (wgt <= 0) continue;
    raw[bin_of(field.direction(p.y(), p.x()) + rotate_directions, n)] += wgt;
  }
  GradientHistogram out;
  out.bins.assign(n, 0.0);
  auto kernel = gaussian_kernel(params.histogram_sigma);
  smooth_circular(raw.data(), out.bins.data(), n, kernel);
  return out;
}

double histogram_term(const GradientHistogram& h1, const GradientHistogram& h2) {
  const int n = int(std::min(h1.bins.size(), h2.bins.size()));
  return histogram_term_raw(h1.bins.data(), h2.bins.data(), n);
}

DirScore score_direction(const ScoringData& a, const ScoringData& b, const RigidTransform& t,
                         const SolverParams& params, OverlapCurve* curve_out) {
  DirScore out;
  const RigidTransform inv = invert(t);
  const double c = std::cos(inv.theta), s = std::sin(inv.theta);
  const int bins = params.histogram_bins;
  g_scratch.prepare(bins, params.histogram_sigma);

  double d_c = 0, total_a = 0, total_b = 0;
  double d_c_sh = 0;
  std::int32_t len = 0, len_sh = 0;
  const int fw = int(b.field.weight.cols()), fh = int(b.field.weight.rows());
  if (curve_out) curve_out->ids.clear();

  // restrict the boundary scan to cells under b's transformed footprint
  Box2 reach;
  {
    const double bw = double(b.band.cols()), bh = double(b.band.rows());
    const Vec2 corners[4] = {Vec2(-b.pad, -b.pad), Vec2(bw - b.pad, -b.pad),
                             Vec2(bw - b.pad, bh - b.pad), Vec2(-b.pad, bh - b.pad)};
    for (const auto& q : corners) reach.expand(apply(t, q));
    reach.lo -= Vec2(2, 2);
    reach.hi += Vec2(2, 2);
  }
  const int c0x = std::max(0, int((reach.lo.x() - a.cell_x0) / a.cell));
  const int c1x = std::min(a.cells_x - 1, int((reach.hi.x() - a.cell_x0) / a.cell));
  const int c0y = std::max(0, int((reach.lo.y() - a.cell_y0) / a.cell));
  const int c1y = std::min(a.cells_y - 1, int((reach.hi.y() - a.cell_y0) / a.cell));

  auto visit = [&](std::int32_t i) {
    const double lx = a.px[i], ly = a.py[i];
    const double qx = c * lx - s * ly + inv.tx + b.pad;
    const double qy = s * lx + c * ly + inv.ty + b.pad;
    if (!corner_hit(b.band, floor_int(qx), floor_int(qy))) return;
    ++len;
    if (curve_out) curve_out->ids.push_back(i);

    float L, aa, bb;
    double err;
    if (sample_bilinear_masked(b.lab.L, b.region, qx, qy, &L) &&
        sample_bilinear_masked(b.lab.a, b.region, qx, qy, &aa) &&
        sample_bilinear_masked(b.lab.b, b.region, qx, qy, &bb)) {
      err = std::abs(a.pL[i] - L) + std::abs(a.pa[i] - aa) + std::abs(a.pb[i] - bb);
    } else {
      err = max_lab_l1();
    }
    d_c += err;
    if (corner_hit(b.shallow, floor_int(qx), floor_int(qy))) {
      d_c_sh += err;
      ++len_sh;
    }

    if (a.pw[i] > 0) {
      g_scratch.raw_a[a.pbin[i]] += a.pw[i];
      total_a += a.pw[i];
    }
    const int rx = round_int(qx), ry = round_int(qy);
    if (rx >= 0 && ry >= 0 && rx < fw && ry < fh) {
      const float wgt = b.field.weight(ry, rx);
      if (wgt > 0) {
        g_scratch.raw_b[bin_of(b.field.direction(ry, rx) + t.theta, bins)] += wgt;
        total_b += wgt;
      }
    }
  };
  for (int cy = c0y; cy <= c1y; ++cy)
    for (int cx = c0x; cx <= c1x; ++cx) {
      const std::int32_t s0 = a.cell_start[cy * a.cells_x + cx];
      const std::int32_t s1 = a.cell_start[cy * a.cells_x + cx + 1];
      for (std::int32_t i = s0; i < s1; ++i) visit(i);
    }
  if (len == 0) return out;
  out.len = len;
  out.d_c = d_c;
  out.d_c_shallow = d_c_sh;
  out.len_shallow = len_sh;
  out.d_h = g_scratch.finish(total_a, total_b);
  out.d = (params.term_scale * out.d_h + d_c) / std::pow(double(len), params.alpha);
  return out;
}

// --- batch scorer ---

PairAngleScorer::PairAngleScorer(const ScoringData& a, const ScoringData& b, double theta,
                                 const SolverParams& params)
    : a_(a), b_(b), params_(params), theta_(normalize_angle(theta)) {
  const double c = std::cos(theta_), s = std::sin(theta_);
  const int bw = int(b.band.cols()), bh = int(b.band.rows());

  // u-lattice bounds: u = R(theta) * q_local for q over b's padded grid
  double minx = 1e30, miny = 1e30, maxx = -1e30, maxy = -1e30;
  const double cx[4] = {double(-b.pad), double(bw - b.pad), double(bw - b.pad), double(-b.pad)};
  const double cy[4] = {double(-b.pad), double(-b.pad), double(bh - b.pad), double(bh - b.pad)};
  for (int k = 0; k < 4; ++k) {
    double ux = c * cx[k] - s * cy[k];
    double uy = s * cx[k] + c * cy[k];
    minx = std::min(minx, ux);
    maxx = std::max(maxx, ux);
    miny = std::min(miny, uy);
    maxy = std::max(maxy, uy);
  }
  ux0_ = floor_int(minx) - 1;
  uy0_ = floor_int(miny) - 1;
  uw_ = int(std::ceil(maxx)) - ux0_ + 2;
  uh_ = int(std::ceil(maxy)) - uy0_ + 2;

  band4_.assign(size_t(uw_) * uh_, 0);
  tL_.assign(size_t(uw_) * uh_, 0.0f);
  ta_.assign(size_t(uw_) * uh_, 0.0f);
  tb_.assign(size_t(uw_) * uh_, 0.0f);
  tw_.assign(size_t(uw_) * uh_, 0.0f);
  tbin_.assign(size_t(uw_) * uh_, 0);

  const int bins = params.histogram_bins;
  const double ic = std::cos(-theta_), is = std::sin(-theta_);
  for (int vy = 0; vy < uh_; ++vy) {
    for (int vx = 0; vx < uw_; ++vx) {
      const double ux = ux0_ + vx, uy = uy0_ + vy;
      const double qx = ic * ux - is * uy + b.pad;
      const double qy = is * ux + ic * uy + b.pad;
      const int fx = floor_int(qx), fy = floor_int(qy);
      if (fx < -1 || fy < -1 || fx > bw || fy > bh) continue;
      if (!corner_hit(b.band, fx, fy)) continue;
      const size_t at = size_t(vy) * uw_ + vx;
      band4_[at] = 1;
      float L, aa, bb;
      if (sample_bilinear_masked(b.lab.L, b.region, qx, qy, &L) &&
          sample_bilinear_masked(b.lab.a, b.region, qx, qy, &aa) &&
          sample_bilinear_masked(b.lab.b, b.region, qx, qy, &bb)) {
        tL_[at] = L;
        ta_[at] = aa;
        tb_[at] = bb;
      } else {
        band4_[at] = 2;  // curve hit but color penalty
      }
      if (corner_hit(b.shallow, fx, fy)) band4_[at] |= 4;
      const int rx = round_int(qx), ry = round_int(qy);
      if (rx >= 0 && ry >= 0 && rx < bw && ry < bh) {
        const float wgt = b.field.weight(ry, rx);
        if (wgt > 0) {
          tw_[at] = wgt;
          tbin_[at] = std::uint8_t(bin_of(b.field.direction(ry, rx) + theta_, bins));
        }
      }
    }
  }

  // ji side: rotate b's boundary pixels once
  const size_t n = size_t(b.count());
  jx0_.resize(n);
  jy0_.resize(n);
  for (auto& w : jw_) w.resize(n);
  jrx_.resize(n);
  jry_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double rxp = c * b.px[i] - s * b.py[i];
    const double ryp = s * b.px[i] + c * b.py[i];
    jbox_.expand(Vec2(rxp, ryp));
    const int fx = floor_int(rxp), fy = floor_int(ryp);
    jx0_[i] = fx;
    jy0_[i] = fy;
    const float ffx = float(rxp - fx), ffy = float(ryp - fy);
    jw_[0][i] = (1 - ffx) * (1 - ffy);
    jw_[1][i] = ffx * (1 - ffy);
    jw_[2][i] = (1 - ffx) * ffy;
    jw_[3][i] = ffx * ffy;
    jrx_[i] = round_int(rxp);
    jry_[i] = round_int(ryp);
  }
}

DirScore PairAngleScorer::score_ij(std::int64_t tx, std::int64_t ty,
                                   std::vector<std::int32_t>* ids) const {
  DirScore out;
  const int bins = params_.histogram_bins;
  g_scratch.prepare(bins, params_.histogram_sigma);
  if (ids) ids->clear();

  double d_c = 0, total_a = 0, total_b = 0;
  double d_c_sh = 0;
  std::int32_t len = 0, len_sh = 0;
  const float penalty = max_lab_l1();

  // boundary pixels with p - tau inside the u table: p in [tau+u0, tau+u0+size)
  const double x_lo = double(tx) + ux0_, x_hi = double(tx) + ux0_ + uw_ - 1;
  const double y_lo = double(ty) + uy0_, y_hi = double(ty) + uy0_ + uh_ - 1;
  const int c0x = std::max(0, int((x_lo - a_.cell_x0) / a_.cell));
  const int c1x = std::min(a_.cells_x - 1, int((x_hi - a_.cell_x0) / a_.cell));
  const int c0y = std::max(0, int((y_lo - a_.cell_y0) / a_.cell));
  const int c1y = std::min(a_.cells_y - 1, int((y_hi - a_.cell_y0) / a_.cell));
  if (c0x > c1x || c0y > c1y) return out;

  for (int cy = c0y; cy <= c1y; ++cy) {
    for (int cx = c0x; cx <= c1x; ++cx) {
      const std::int32_t s0 = a_.cell_start[cy * a_.cells_x + cx];
      const std::int32_t s1 = a_.cell_start[cy * a_.cells_x + cx + 1];
      for (std::int32_t i = s0; i < s1; ++i) {
        const std::int64_t vx = a_.px[i] - tx - ux0_;
        const std::int64_t vy = a_.py[i] - ty - uy0_;
        if (vx < 0 || vy < 0 || vx >= uw_ || vy >= uh_) continue;
        const size_t at = size_t(vy) * uw_ + vx;
        const std::uint8_t hit = band4_[at];
        if (!hit) continue;
        ++len;
        if (ids) ids->push_back(i);
        double err;
        if ((hit & 3) == 2) {
          err = penalty;
        } else {
          err = std::abs(a_.pL[i] - tL_[at]) + std::abs(a_.pa[i] - ta_[at]) +
                std::abs(a_.pb[i] - tb_[at]);
        }
        d_c += err;
        if (hit & 4) {
          d_c_sh += err;
          ++len_sh;
        }
        const float wa = a_.pw[i];
        if (wa > 0) {
          g_scratch.raw_a[a_.pbin[i]] += wa;
          total_a += wa;
        }
        const float wb = tw_[at];
        if (wb > 0) {
          g_scratch.raw_b[tbin_[at]] += wb;
          total_b += wb;
        }
      }
    }
  }
  if (len == 0) return out;
  out.len = len;
  out.d_c = d_c;
  out.d_c_shallow = d_c_sh;
  out.len_shallow = len_sh;
  out.d_h = g_scratch.finish(total_a, total_b);
  out.d = (params_.term_scale * out.d_h + d_c) / std::pow(double(len), params_.alpha);
  return out;
}

DirScore PairAngleScorer::score_ji(std::int64_t tx, std::int64_t ty,
                                   std::vector<std::int32_t>* ids) const {
  DirScore out;
  const int bins = params_.histogram_bins;
  g_scratch.prepare(bins, params_.histogram_sigma);
  if (ids) ids->clear();

  double d_c = 0, total_a = 0, total_b = 0;
  double d_c_sh = 0;
  std::int32_t len = 0, len_sh = 0;
  const float penalty = max_lab_l1();
  const int aw = int(a_.band.cols()), ah = int(a_.band.rows());
  const int fw = int(a_.field.weight.cols()), fh = int(a_.field.weight.rows());

  for (std::int32_t i = 0; i < b_.count(); ++i) {
    // position in a's local frame, then padded grid
    const std::int64_t bx = jx0_[i] + tx + a_.pad;
    const std::int64_t by = jy0_[i] + ty + a_.pad;
    if (bx < -1 || by < -1 || bx > aw - 1 || by > ah - 1) continue;
    if (!corner_hit(a_.band, int(bx), int(by))) continue;
    ++len;
    if (ids) ids->push_back(i);

    // masked bilinear with fixed weights (plus the lattice-edge fallback,
    // mirroring sample_bilinear_masked)
    float wsum = 0, L = 0, aa = 0, bb = 0;
    float fb_L = 0, fb_a = 0, fb_b = 0;
    int fb_n = 0;
    const int cxs[4] = {int(bx), int(bx) + 1, int(bx), int(bx) + 1};
    const int cys[4] = {int(by), int(by), int(by) + 1, int(by) + 1};
    for (int k = 0; k < 4; ++k) {
      const int x = cxs[k], y = cys[k];
      if (x < 0 || y < 0 || x >= aw || y >= ah || !a_.region(y, x)) continue;
      const float w = jw_[k][i];
      wsum += w;
      L += w * a_.lab.L(y, x);
      aa += w * a_.lab.a(y, x);
      bb += w * a_.lab.b(y, x);
      fb_L += a_.lab.L(y, x);
      fb_a += a_.lab.a(y, x);
      fb_b += a_.lab.b(y, x);
      ++fb_n;
    }
    double err;
    if (wsum > 0) {
      err = std::abs(b_.pL[i] - L / wsum) + std::abs(b_.pa[i] - aa / wsum) +
            std::abs(b_.pb[i] - bb / wsum);
    } else if (fb_n > 0) {
      err = std::abs(b_.pL[i] - fb_L / fb_n) + std::abs(b_.pa[i] - fb_a / fb_n) +
            std::abs(b_.pb[i] - fb_b / fb_n);
    } else {
      err = penalty;
    }
    d_c += err;
    if (corner_hit(a_.shallow, int(bx), int(by))) {
      d_c_sh += err;
      ++len_sh;
    }

    const float wb = b_.pw[i];
    if (wb > 0) {
      g_scratch.raw_a[b_.pbin[i]] += wb;
      total_a += wb;
    }
    const std::int64_t rx = jrx_[i] + tx + a_.pad, ry = jry_[i] + ty + a_.pad;
    if (rx >= 0 && ry >= 0 && rx < fw && ry < fh) {
      const float wa = a_.field.weight(int(ry), int(rx));
      if (wa > 0) {
        g_scratch.raw_b[bin_of(a_.field.direction(int(ry), int(rx)) - theta_, bins)] += wa;
        total_b += wa;
      }
    }
  }
  if (len == 0) return out;
  out.len = len;
  out.d_c = d_c;
  out.d_c_shallow = d_c_sh;
  out.len_shallow = len_sh;
  out.d_h = g_scratch.finish(total_a, total_b);
  out.d = (params_.term_scale * out.d_h + d_c) / std::pow(double(len), params_.alpha);
  return out;
}

void write_score_table(const std::vector<ScoreBreakdown>& rows, std::ostream& out) {
  out << "i,j,theta,tx,ty,d_c,d_h,length,d\n";
  for (const auto& r : rows) {
    out << r.i << ',' << r.j << ',' << r.t.theta << ',' << r.t.tx << ',' << r.t.ty << ','
        << r.d_c << ',' << r.d_h << ',' << r.length << ',' << r.d << '\n';
  }
}

}  // namespace fresco

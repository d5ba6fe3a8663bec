#include "fresco/raster.hpp"

#include "fresco/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;

double srgb_to_linear(double c) {
  c /= 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

}  // namespace

LabColor to_lab(double r, double g, double b) {
  const double rl = srgb_to_linear(r), gl = srgb_to_linear(g), bl = srgb_to_linear(b);
  // sRGB -> XYZ, D65
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  // D65 reference white
  const double fx = lab_f(x / 0.95047), fy = lab_f(y / 1.0), fz = lab_f(z / 1.08883);
  LabColor out;
  out.L = float(116.0 * fy - 16.0);
  out.a = float(500.0 * (fx - fy));
  out.b = float(200.0 * (fy - fz));
  return out;
}

void lab_to_rgb(const LabColor& c, double* r, double* g, double* b) {
  const double fy = (c.L + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  auto finv = [](double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d ? t * t * t : 3 * d * d * (t - 4.0 / 29.0);
  };
  const double x = 0.95047 * finv(fx);
  const double y = 1.0 * finv(fy);
  const double z = 1.08883 * finv(fz);
  const double rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  auto enc = [](double u) {
    u = u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(std::max(u, 0.0), 1.0 / 2.4) - 0.055;
    return std::clamp(u * 255.0, 0.0, 255.0);
  };
  *r = enc(rl);
  *g = enc(gl);
  *b = enc(bl);
}

LabPlanes lab_planes(const ImageRGB& img) {
  const int w = img.width(), h = img.height();
  LabPlanes out;
  out.L.resize(h, w);
  out.a.resize(h, w);
  out.b.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      LabColor c = to_lab(img.r(y, x), img.g(y, x), img.b(y, x));
      out.L(y, x) = c.L;
      out.a(y, x) = c.a;
      out.b(y, x) = c.b;
    }
  return out;
}

float max_lab_l1() {
  static float v = [] {
    const double lv[2] = {0, 255};
    float best = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        LabColor a = to_lab(lv[i & 1], lv[(i >> 1) & 1], lv[(i >> 2) & 1]);
        LabColor b = to_lab(lv[j & 1], lv[(j >> 1) & 1], lv[(j >> 2) & 1]);
        float d = std::abs(a.L - b.L) + std::abs(a.a - b.a) + std::abs(a.b - b.b);
        best = std::max(best, d);
      }
    return best;
  }();
  return v;
}

// --- boundary tracing ---

namespace {

// Directed crack edges around set pixels; material is always on the right of
// the walk direction. Corners are lattice points (i, j) at (i-0.5, j-0.5).
struct CrackEdges {
  int w = 0, h = 0;
  // outgoing edge(s) per corner: direction code 0=E,1=S,2=W,3=N
  std::map<std::pair<int, int>, std::vector<int>> out;

  static std::pair<int, int> step(std::pair<int, int> c, int dir) {
    switch (dir) {
      case 0: return {c.first + 1, c.second};
      case 1: return {c.first, c.second + 1};
      case 2: return {c.first - 1, c.second};
      default: return {c.first, c.second - 1};
    }
  }
};

std::vector<Ring> trace_rings(const MaskGrid& mask) {
  const int w = int(mask.cols()), h = int(mask.rows());
  auto at = [&](int x, int y) -> bool {
    return x >= 0 && y >= 0 && x < w && y < h && mask(y, x) != 0;
  };

  CrackEdges edges;
  edges.w = w;
  edges.h = h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      if (!at(x, y - 1)) edges.out[{x, y}].push_back(0);          // top: E
      if (!at(x + 1, y)) edges.out[{x + 1, y}].push_back(1);      // right: S
      if (!at(x, y + 1)) edges.out[{x + 1, y + 1}].push_back(2);  // bottom: W
      if (!at(x - 1, y)) edges.out[{x, y + 1}].push_back(3);      // left: N
    }

  std::vector<Ring> rings;
  while (!edges.out.empty()) {
    auto it = edges.out.begin();
    std::pair<int, int> start = it->first;
    int dir = it->second.back();
    it->second.pop_back();
    if (it->second.empty()) edges.out.erase(it);

    Ring ring;
    std::pair<int, int> cur = start;
    int cur_dir = dir;
    while (true) {
      ring.push_back(Vec2(cur.first - 0.5, cur.second - 0.5));
      cur = CrackEdges::step(cur, cur_dir);
      auto jt = edges.out.find(cur);
      if (jt == edges.out.end()) break;  // ring closed (start edge consumed)
      // prefer right turn, then straight, then left, keeping material hugged
      int pick = -1;
      const int prefs[3] = {(cur_dir + 1) % 4, cur_dir, (cur_dir + 3) % 4};
      for (int p : prefs) {
        auto pos = std::find(jt->second.begin(), jt->second.end(), p);
        if (pos != jt->second.end()) {
          pick = p;
          jt->second.erase(pos);
          break;
        }
      }
      if (pick < 0) break;
      if (jt->second.empty()) edges.out.erase(jt);
      cur_dir = pick;
    }
    // merge collinear runs
    Ring compact;
    for (size_t i = 0; i < ring.size(); ++i) {
      const Vec2& prev = ring[(i + ring.size() - 1) % ring.size()];
      const Vec2& cur_v = ring[i];
      const Vec2& next = ring[(i + 1) % ring.size()];
      Vec2 d1 = cur_v - prev, d2 = next - cur_v;
      if (std::abs(d1.x() * d2.y() - d1.y() * d2.x()) > 1e-12) compact.push_back(cur_v);
    }
    if (compact.size() >= 3) rings.push_back(std::move(compact));
  }
  return rings;
}

// Side-aware Douglas-Peucker on a closed ring. Points deviating to the
// material side (right of the chord) beyond `material_tol` force a split, as
// does any deviation beyond `free_tol`.
void dp_recurse(const Ring& pts, size_t a, size_t b, double material_tol, double free_tol,
                std::vector<char>& keep) {
  if (b <= a + 1) return;
  const Vec2& pa = pts[a];
  const Vec2& pb = pts[b];
  Vec2 ab = pb - pa;
  double len = ab.norm();
  size_t split = a;
  double worst = -1.0;
  for (size_t i = a + 1; i < b; ++i) {
    double dev;
    double side;
    if (len < 1e-12) {
      dev = (pts[i] - pa).norm();
      side = 0.0;
    } else {
      double cr = ab.x() * (pts[i].y() - pa.y()) - ab.y() * (pts[i].x() - pa.x());
      dev = std::abs(cr) / len;
      side = cr;  // positive = left of chord
    }
    double tol = side < 0 ? material_tol : free_tol;
    double score = dev / tol;
    if (score > worst) {
      worst = score;
      split = i;
    }
  }
  if (worst > 1.0) {
    keep[split] = 1;
    dp_recurse(pts, a, split, material_tol, free_tol, keep);
    dp_recurse(pts, split, b, material_tol, free_tol, keep);
  }
}

Ring simplify_ring(const Ring& ring, double material_tol, double free_tol) {
  const size_t n = ring.size();
  if (n <= 4) return ring;
  // anchor at two mutually distant vertices
  size_t a0 = 0, a1 = 0;
  double best = -1;
  for (size_t i = 1; i < n; ++i) {
    double d = (ring[i] - ring[0]).squaredNorm();
    if (d > best) {
      best = d;
      a1 = i;
    }
  }
  best = -1;
  for (size_t i = 0; i < n; ++i) {
    double d = (ring[i] - ring[a1]).squaredNorm();
    if (d > best) {
      best = d;
      a0 = i;
    }
  }
  if (a0 > a1) std::swap(a0, a1);
  if (a0 == a1) return ring;

  // rotate so the ring starts at a0
  Ring rot(n + 1);
  for (size_t i = 0; i <= n; ++i) rot[i] = ring[(a0 + i) % n];
  size_t mid = a1 - a0;

  std::vector<char> keep(n + 1, 0);
  keep[0] = keep[mid] = keep[n] = 1;
  dp_recurse(rot, 0, mid, material_tol, free_tol, keep);
  dp_recurse(rot, mid, n, material_tol, free_tol, keep);

  Ring out;
  for (size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(rot[i]);
  return out;
}

}  // namespace

Polygon trace_boundary(const MaskGrid& mask, double tol, bool keep_inside) {
  auto rings = trace_rings(mask);
  if (rings.empty()) throw std::invalid_argument("empty mask");

  // cutting toward material limited to 0.4 px so pixel centers stay enclosed
  double material_tol = keep_inside ? tol : 0.4;
  double free_tol = keep_inside ? 0.4 : tol;

  Polygon poly;
  double best_area = -1;
  for (auto& r : rings) {
    double a = signed_area(r);
    if (a > best_area) best_area = a;
  }
  for (auto& r : rings) {
    double a = signed_area(r);
    if (a == best_area && poly.outer.empty()) {
      poly.outer = simplify_ring(r, material_tol, free_tol);
    } else if (a < 0 && -a >= 8.0) {
      // holes: the material side flips relative to chord orientation
      poly.holes.push_back(simplify_ring(r, free_tol, material_tol));
    }
  }
  if (poly.outer.size() < 3) throw std::invalid_argument("mask boundary degenerate");
  return poly;
}

// --- fragment loading ---

namespace {

// Largest 4-connected component; clears everything else. Returns pixel count.
std::int64_t keep_largest_component(MaskGrid& mask) {
  const int w = int(mask.cols()), h = int(mask.rows());
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label(h, w);
  label.setConstant(-1);
  std::int32_t next = 0;
  std::vector<std::int64_t> count;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x) || label(y, x) >= 0) continue;
      std::int32_t id = next++;
      count.push_back(0);
      queue.push_back({x, y});
      label(y, x) = id;
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        ++count[id];
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!mask(ny, nx) || label(ny, nx) >= 0) continue;
          label(ny, nx) = id;
          queue.push_back({nx, ny});
        }
      }
    }
  if (next == 0) return 0;
  std::int32_t best = 0;
  for (std::int32_t i = 1; i < next; ++i)
    if (count[i] > count[best]) best = i;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask(y, x) = (label(y, x) == best) ? 1 : 0;
  return count[best];
}

// Fills enclosed false regions smaller than min_size (pinholes).
void fill_small_holes(MaskGrid& mask, std::int64_t min_size) {
  const int w = int(mask.cols()), h = int(mask.rows());
  MaskGrid outside = MaskGrid::Zero(h, w);
  std::deque<std::pair<int, int>> queue;
  for (int x = 0; x < w; ++x) {
    for (int y : {0, h - 1})
      if (!mask(y, x) && !outside(y, x)) {
        outside(y, x) = 1;
        queue.push_back({x, y});
      }
  }
  for (int y = 0; y < h; ++y) {
    for (int x : {0, w - 1})
      if (!mask(y, x) && !outside(y, x)) {
        outside(y, x) = 1;
        queue.push_back({x, y});
      }
  }
  while (!queue.empty()) {
    auto [cx, cy] = queue.front();
    queue.pop_front();
    const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int nx = cx + dx[k], ny = cy + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      if (mask(ny, nx) || outside(ny, nx)) continue;
      outside(ny, nx) = 1;
      queue.push_back({nx, ny});
    }
  }
  // enclosed false pixels: label 4-components and fill the small ones
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label(h, w);
  label.setConstant(-1);
  std::int32_t next = 0;
  std::vector<std::vector<std::pair<int, int>>> members;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask(y, x) || outside(y, x) || label(y, x) >= 0) continue;
      std::int32_t id = next++;
      members.push_back({});
      queue.push_back({x, y});
      label(y, x) = id;
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        members[id].push_back({cx, cy});
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (mask(ny, nx) || outside(ny, nx) || label(ny, nx) >= 0) continue;
          label(ny, nx) = id;
          queue.push_back({nx, ny});
        }
      }
    }
  for (const auto& m : members)
    if (std::int64_t(m.size()) < min_size)
      for (auto [x, y] : m) mask(y, x) = 1;
}

}  // namespace

Fragment load_fragment(const ImageRGB& image, const MaskGrid& mask, int id) {
  if (image.height() != int(mask.rows()) || image.width() != int(mask.cols()))
    throw std::invalid_argument("image and mask dimensions differ");
  if ((mask != 0).count() == 0) throw std::invalid_argument("empty mask");

  Fragment f;
  f.id = id;
  f.pixels = image;
  f.mask = (mask != 0).cast<std::uint8_t>();
  f.material_count = keep_largest_component(f.mask);
  if (f.material_count == 0) throw std::invalid_argument("empty mask");
  fill_small_holes(f.mask, 8);
  f.material_count = std::int64_t((f.mask != 0).count());

  f.lab = lab_planes(image);

  double tol = 1.5;
  for (int attempt = 0; attempt < 4; ++attempt) {
    f.boundary = trace_boundary(f.mask, tol, false);
    double poly_area = area(f.boundary);
    if (std::abs(poly_area - double(f.material_count)) <= 0.045 * double(f.material_count))
      break;
    tol *= 0.5;  // thin shapes need a tighter trace to hold the 5% invariant
  }

  for (int y = 0; y < int(f.mask.rows()); ++y)
    for (int x = 0; x < int(f.mask.cols()); ++x)
      if (f.mask(y, x)) f.bbox.expand(Vec2(x, y));
  return f;
}

Fragment load_fragment_png(const std::string& image_path, const std::string& mask_path, int id) {
  ImageRGB img = read_png(image_path);
  MaskGrid mask;
  if (!mask_path.empty()) {
    ImageRGB m = read_png(mask_path);
    if (m.width() != img.width() || m.height() != img.height())
      throw std::invalid_argument("image and mask dimensions differ: " + mask_path);
    mask = (m.r > 0).cast<std::uint8_t>();
  } else if (img.alpha) {
    mask = (*img.alpha > 127).cast<std::uint8_t>();
  } else {
    throw std::invalid_argument("no mask file and no alpha channel: " + image_path);
  }
  return load_fragment(img, mask, id);
}

// --- palettes ---

namespace {

struct PixelList {
  std::vector<std::int32_t> xs, ys;
  std::vector<float> L, a, b;
};

PixelList collect_region(const LabPlanes& lab, const MaskGrid& region) {
  PixelList out;
  for (int y = 0; y < int(region.rows()); ++y)
    for (int x = 0; x < int(region.cols()); ++x)
      if (region(y, x)) {
        out.xs.push_back(x);
        out.ys.push_back(y);
        out.L.push_back(lab.L(y, x));
        out.a.push_back(lab.a(y, x));
        out.b.push_back(lab.b(y, x));
      }
  return out;
}

inline float dist2(float l1, float a1, float b1, float l2, float a2, float b2) {
  float dl = l1 - l2, da = a1 - a2, db = b1 - b2;
  return dl * dl + da * da + db * db;
}

Palette lloyd(const PixelList& px, std::vector<LabColor> centroids, const MaskGrid& region) {
  const size_t n = px.L.size();
  std::vector<std::int32_t> assign(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    // assignment
    for (size_t i = 0; i < n; ++i) {
      float best = 1e30f;
      std::int32_t bj = 0;
      for (std::int32_t j = 0; j < std::int32_t(centroids.size()); ++j) {
        float d = dist2(px.L[i], px.a[i], px.b[i], centroids[j].L, centroids[j].a,
                        centroids[j].b);
        if (d < best) {
          best = d;
          bj = j;
        }
      }
      assign[i] = bj;
    }
    // update
    std::vector<double> sl(centroids.size(), 0), sa(centroids.size(), 0),
        sb(centroids.size(), 0);
    std::vector<std::int64_t> cnt(centroids.size(), 0);
    for (size_t i = 0; i < n; ++i) {
      sl[assign[i]] += px.L[i];
      sa[assign[i]] += px.a[i];
      sb[assign[i]] += px.b[i];
      ++cnt[assign[i]];
    }
    double moved = 0;
    for (size_t j = 0; j < centroids.size(); ++j) {
      if (!cnt[j]) continue;
      LabColor next{float(sl[j] / cnt[j]), float(sa[j] / cnt[j]), float(sb[j] / cnt[j])};
      moved = std::max(moved, double(std::abs(next.L - centroids[j].L) +
                                     std::abs(next.a - centroids[j].a) +
                                     std::abs(next.b - centroids[j].b)));
      centroids[j] = next;
    }
    if (moved < 1e-3) break;
  }

  // final assignment with empty/duplicate centroids dropped
  std::vector<std::int64_t> cnt(centroids.size(), 0);
  for (size_t i = 0; i < n; ++i) {
    float best = 1e30f;
    std::int32_t bj = 0;
    for (std::int32_t j = 0; j < std::int32_t(centroids.size()); ++j) {
      float d =
          dist2(px.L[i], px.a[i], px.b[i], centroids[j].L, centroids[j].a, centroids[j].b);
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    assign[i] = bj;
    ++cnt[bj];
  }
  std::vector<std::int32_t> remap(centroids.size(), -1);
  std::vector<LabColor> kept;
  for (size_t j = 0; j < centroids.size(); ++j) {
    if (!cnt[j]) continue;
    std::int32_t dup = -1;
    for (std::int32_t m = 0; m < std::int32_t(kept.size()); ++m) {
      if (dist2(kept[m].L, kept[m].a, kept[m].b, centroids[j].L, centroids[j].a,
                centroids[j].b) < 1e-10f) {
        dup = m;
        break;
      }
    }
    if (dup >= 0) {
      remap[j] = dup;
    } else {
      remap[j] = std::int32_t(kept.size());
      kept.push_back(centroids[j]);
    }
  }

  Palette out;
  out.k = int(kept.size());
  out.colors = std::move(kept);
  out.assignment.resize(region.rows(), region.cols());
  out.assignment.setConstant(-1);
  for (size_t i = 0; i < n; ++i)
    out.assignment(px.ys[i], px.xs[i]) = std::int16_t(remap[assign[i]]);
  return out;
}

std::vector<LabColor> kmeanspp_extend(const PixelList& px, std::vector<LabColor> centroids,
                                      int k, Rng& rng) {
  const size_t n = px.L.size();
  std::vector<float> d2(n, 1e30f);
  auto refresh = [&](const LabColor& c) {
    for (size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], dist2(px.L[i], px.a[i], px.b[i], c.L, c.a, c.b));
  };
  if (centroids.empty()) {
    size_t i0 = size_t(rng.range(n));
    centroids.push_back({px.L[i0], px.a[i0], px.b[i0]});
  }
  for (const auto& c : centroids) refresh(c);
  while (int(centroids.size()) < k) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) total += d2[i];
    if (total <= 1e-12) break;  // fewer distinct colors than k
    double target = rng.uniform() * total;
    size_t pick = n - 1;
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    centroids.push_back({px.L[pick], px.a[pick], px.b[pick]});
    refresh(centroids.back());
  }
  return centroids;
}

}  // namespace

Palette build_palette(const LabPlanes& lab, const MaskGrid& region, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("palette k must be >= 2");
  PixelList px = collect_region(lab, region);
  if (std::int64_t(px.L.size()) < k)
    throw std::invalid_argument("fewer in-region pixels than palette colors");
  Rng rng(derive_seed(seed, std::uint64_t(k)));
  auto centroids = kmeanspp_extend(px, {}, k, rng);
  Palette out = lloyd(px, std::move(centroids), region);
  out.requested_k = k;
  return out;
}

Palette build_palette(const Fragment& f, int k) {
  return build_palette(f.lab, f.mask, k, std::uint64_t(f.id));
}

std::vector<Palette> build_palettes(const LabPlanes& lab, const MaskGrid& region,
                                    const std::vector<int>& ks, std::uint64_t seed) {
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  PixelList px = collect_region(lab, region);
  std::vector<Palette> out;
  std::vector<LabColor> carry;
  for (int k : sorted) {
    if (std::int64_t(px.L.size()) < k) break;
    Rng rng(derive_seed(seed, std::uint64_t(k)));
    auto centroids = kmeanspp_extend(px, carry, k, rng);
    out.push_back(lloyd(px, std::move(centroids), region));
    out.back().requested_k = k;
    carry = out.back().colors;
  }
  return out;
}

double quantization_error(const LabPlanes& lab, const MaskGrid& region, const Palette& p) {
  double total = 0;
  std::int64_t n = 0;
  for (int y = 0; y < int(region.rows()); ++y)
    for (int x = 0; x < int(region.cols()); ++x) {
      if (!region(y, x)) continue;
      std::int16_t j = p.assignment(y, x);
      const LabColor& c = p.colors[j];
      total += std::sqrt(dist2(lab.L(y, x), lab.a(y, x), lab.b(y, x), c.L, c.a, c.b));
      ++n;
    }
  return n ? total / double(n) : 0.0;
}

// --- gradient field ---

namespace {

// L plane with region values pushed `rings` pixels outward so Sobel windows
// at region boundaries read plausible values.
GrayF extend_plane(const GrayF& plane, const MaskGrid& region, int rings) {
  GrayF out = plane;
  MaskGrid known = region;
  const int w = int(region.cols()), h = int(region.rows());
  for (int r = 0; r < rings; ++r) {
    MaskGrid next = known;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (known(y, x)) continue;
        float sum = 0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!known(ny, nx)) continue;
            sum += out(ny, nx);
            ++cnt;
          }
        if (cnt) {
          out(y, x) = sum / float(cnt);
          next(y, x) = 1;
        }
      }
    known.swap(next);
  }
  return out;
}

}  // namespace

GradientField palette_gradient_field(const LabPlanes& lab, const MaskGrid& region,
                                     const std::vector<Palette>& palettes) {
  const int w = int(region.cols()), h = int(region.rows());
  GradientField out;
  out.direction = GrayF::Zero(h, w);
  out.weight = GrayF::Zero(h, w);

  GrayF ext = extend_plane(lab.L, region, 2);
  auto v = [&](int x, int y) -> float {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return ext(y, x);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!region(y, x)) continue;
      float gx = (v(x + 1, y - 1) + 2 * v(x + 1, y) + v(x + 1, y + 1)) -
                 (v(x - 1, y - 1) + 2 * v(x - 1, y) + v(x - 1, y + 1));
      float gy = (v(x - 1, y + 1) + 2 * v(x, y + 1) + v(x + 1, y + 1)) -
                 (v(x - 1, y - 1) + 2 * v(x, y - 1) + v(x + 1, y - 1));
      double ang = std::atan2(double(gy), double(gx));
      if (ang < 0) ang += kTau;
      if (ang >= kTau) ang = 0;
      out.direction(y, x) = float(ang);
    }

  const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
  for (const auto& p : palettes) {
    if (p.k <= 0) continue;
    const float inv_k = 1.0f / float(p.requested_k > 0 ? p.requested_k : p.k);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!region(y, x)) continue;
        std::int16_t a = p.assignment(y, x);
        bool edge = false;
        for (int k = 0; k < 4; ++k) {
          int nx = x + dx4[k], ny = y + dy4[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!region(ny, nx)) continue;
          if (p.assignment(ny, nx) != a) {
            edge = true;
            break;
          }
        }
        if (edge) out.weight(y, x) += inv_k;
      }
  }
  return out;
}

GradientField palette_gradient_field(const Fragment& f, const std::vector<Palette>& palettes) {
  return palette_gradient_field(f.lab, f.mask, palettes);
}

void dump_gradient_field_png(const GradientField& field, const std::string& path) {
  const int w = int(field.weight.cols()), h = int(field.weight.rows());
  float wmax = 1e-6f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) wmax = std::max(wmax, field.weight(y, x));
  ImageRGB img;
  img.r = GrayU8::Zero(h, w);
  img.g = GrayU8::Zero(h, w);
  img.b = GrayU8::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float val = field.weight(y, x) / wmax;
      double hue = field.direction(y, x) / kTau * 6.0;
      double c = val;
      double xr = c * (1.0 - std::abs(std::fmod(hue, 2.0) - 1.0));
      double rr = 0, gg = 0, bb = 0;
      switch (int(hue) % 6) {
        case 0: rr = c, gg = xr; break;
        case 1: rr = xr, gg = c; break;
        case 2: gg = c, bb = xr; break;
        case 3: gg = xr, bb = c; break;
        case 4: rr = xr, bb = c; break;
        default: rr = c, bb = xr; break;
      }
      img.r(y, x) = std::uint8_t(std::lround(255 * rr));
      img.g(y, x) = std::uint8_t(std::lround(255 * gg));
      img.b(y, x) = std::uint8_t(std::lround(255 * bb));
    }
  write_png(path, img);
}

}  // namespace fresco

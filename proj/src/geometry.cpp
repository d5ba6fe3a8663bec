#include "fresco/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;
constexpr double kSnapEps = 1e-9;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double point_segment_dist2(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 <= 0) return (p - a).squaredNorm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

bool on_ring_boundary(const Ring& ring, const Vec2& p, double eps) {
  const double eps2 = eps * eps;
  for (size_t i = 0, n = ring.size(); i < n; ++i) {
    if (point_segment_dist2(p, ring[i], ring[(i + 1) % n]) <= eps2) return true;
  }
  return false;
}

// Crossing-number test; points exactly on the boundary are not its concern
// (callers test boundary membership separately).
bool in_ring_interior(const Ring& ring, const Vec2& p) {
  bool in = false;
  for (size_t i = 0, n = ring.size(); i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      double xi = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < xi) in = !in;
    }
  }
  return in;
}

Ring dedup_ring(const Ring& in) {
  Ring out;
  out.reserve(in.size());
  for (const auto& p : in) {
    if (out.empty() || (p - out.back()).norm() > kSnapEps) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= kSnapEps) out.pop_back();
  return out;
}

}  // namespace

double normalize_angle(double theta) {
  theta = std::fmod(theta, kTau);
  if (theta < 0) theta += kTau;
  if (theta >= kTau) theta = 0.0;
  return theta;
}

RigidTransform make_transform(double theta, double tx, double ty) {
  return RigidTransform{normalize_angle(theta), tx, ty};
}

RigidTransform identity_transform() { return RigidTransform{}; }

Vec2 apply(const RigidTransform& t, const Vec2& p) {
  double c = std::cos(t.theta), s = std::sin(t.theta);
  return Vec2(c * p.x() - s * p.y() + t.tx, s * p.x() + c * p.y() + t.ty);
}

Polygon apply(const RigidTransform& t, const Polygon& p) {
  Polygon out;
  out.outer.reserve(p.outer.size());
  for (const auto& v : p.outer) out.outer.push_back(apply(t, v));
  out.holes.reserve(p.holes.size());
  for (const auto& h : p.holes) {
    Ring r;
    r.reserve(h.size());
    for (const auto& v : h) r.push_back(apply(t, v));
    out.holes.push_back(std::move(r));
  }
  return out;
}

RigidTransform compose(const RigidTransform& t1, const RigidTransform& t2) {
  double c = std::cos(t1.theta), s = std::sin(t1.theta);
  return make_transform(t1.theta + t2.theta, c * t2.tx - s * t2.ty + t1.tx,
                        s * t2.tx + c * t2.ty + t1.ty);
}

RigidTransform invert(const RigidTransform& t) {
  double c = std::cos(t.theta), s = std::sin(t.theta);
  // R(-theta) * (-t)
  return make_transform(-t.theta, -(c * t.tx + s * t.ty), -(-s * t.tx + c * t.ty));
}

double signed_area(const Ring& ring) {
  double a = 0.0;
  for (size_t i = 0, n = ring.size(); i < n; ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double ring_perimeter(const Ring& ring) {
  double len = 0.0;
  for (size_t i = 0, n = ring.size(); i < n; ++i) len += (ring[(i + 1) % n] - ring[i]).norm();
  return len;
}

double area(const Polygon& p) {
  double a = std::abs(signed_area(p.outer));
  for (const auto& h : p.holes) a -= std::abs(signed_area(h));
  return a;
}

double perimeter(const Polygon& p) { return ring_perimeter(p.outer); }

Box2 bounds(const Polygon& p) { return bounds_of(p.outer); }

Polygon reflect(const Polygon& p) {
  // point reflection through the origin is a rotation by pi, so orientation
  // is already preserved
  Polygon out;
  auto flip = [](const Ring& r) {
    Ring o(r.size());
    for (size_t i = 0; i < r.size(); ++i) o[i] = -r[i];
    return o;
  };
  out.outer = flip(p.outer);
  for (const auto& h : p.holes) out.holes.push_back(flip(h));
  return out;
}

bool contains(const Polygon& p, const Vec2& point) {
  constexpr double kBoundaryEps = 1e-7;
  if (on_ring_boundary(p.outer, point, kBoundaryEps)) return true;
  for (const auto& h : p.holes)
    if (on_ring_boundary(h, point, kBoundaryEps)) return true;
  if (!in_ring_interior(p.outer, point)) return false;
  for (const auto& h : p.holes)
    if (in_ring_interior(h, point)) return false;
  return true;
}

bool contains(const RegionSet& r, const Vec2& point) {
  for (const auto& p : r.polygons)
    if (contains(p, point)) return true;
  return false;
}

// --- convex decomposition ---

namespace {

bool is_convex_ccw(const Ring& ring, double eps = 1e-9) {
  const size_t n = ring.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    if (cross(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]) < -eps) return false;
  }
  return true;
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  double d1 = cross(a, b, p), d2 = cross(b, c, p), d3 = cross(c, a, p);
  bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
  bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
  return !(has_neg && has_pos);
}

std::vector<std::array<int, 3>> ear_clip(const Ring& ring) {
  const int n = int(ring.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;

  std::vector<std::array<int, 3>> tris;
  tris.reserve(size_t(std::max(0, n - 2)));

  int guard = 0;
  while (idx.size() > 3 && guard < n * n + 16) {
    ++guard;
    bool clipped = false;
    const int m = int(idx.size());
    for (int i = 0; i < m; ++i) {
      int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      const Vec2 &a = ring[ia], &b = ring[ib], &c = ring[ic];
      double cr = cross(a, b, c);
      if (cr <= 1e-12) continue;  // reflex or collinear
      bool ear = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (point_in_triangle(ring[j], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) {
      // numerically stuck (collinear runs); drop the flattest vertex
      const int m2 = int(idx.size());
      int best = 0;
      double best_abs = 1e300;
      for (int i = 0; i < m2; ++i) {
        double cr = std::abs(cross(ring[idx[(i + m2 - 1) % m2]], ring[idx[i]],
                                   ring[idx[(i + 1) % m2]]));
        if (cr < best_abs) {
          best_abs = cr;
          best = i;
        }
      }
      idx.erase(idx.begin() + best);
    }
  }
  if (idx.size() == 3) tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

std::vector<ConvexPart> decompose_convex(const Ring& outer_ccw) {
  Ring ring = dedup_ring(outer_ccw);
  if (ring.size() < 3) throw std::invalid_argument("degenerate polygon (< 3 vertices)");
  if (signed_area(ring) < 0) std::reverse(ring.begin(), ring.end());

  if (is_convex_ccw(ring)) return {ring};

  auto tris = ear_clip(ring);
  std::vector<Ring> polys;
  polys.reserve(tris.size());
  for (const auto& t : tris) {
    Ring r = {ring[t[0]], ring[t[1]], ring[t[2]]};
    if (signed_area(r) > 1e-12) polys.push_back(std::move(r));
  }

  // Hertel-Mehlhorn style greedy merge across shared edges.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < polys.size() && !merged; ++i) {
      for (size_t j = i + 1; j < polys.size() && !merged; ++j) {
        const Ring& a = polys[i];
        const Ring& b = polys[j];
        // find a shared directed edge a[k]->a[k+1] == b[l+1]->b[l]
        for (size_t k = 0; k < a.size() && !merged; ++k) {
          const Vec2& a0 = a[k];
          const Vec2& a1 = a[(k + 1) % a.size()];
          for (size_t l = 0; l < b.size(); ++l) {
            const Vec2& b0 = b[l];
            const Vec2& b1 = b[(l + 1) % b.size()];
            if ((a0 - b1).norm() <= kSnapEps && (a1 - b0).norm() <= kSnapEps) {
              Ring u;
              u.reserve(a.size() + b.size() - 2);
              for (size_t m = 1; m < a.size(); ++m) u.push_back(a[(k + m) % a.size()]);
              for (size_t m = 1; m < b.size(); ++m) u.push_back(b[(l + m) % b.size()]);
              u = dedup_ring(u);
              // drop collinear joints before the convexity check
              Ring clean;
              for (size_t m = 0; m < u.size(); ++m) {
                const Vec2& prev = u[(m + u.size() - 1) % u.size()];
                const Vec2& cur = u[m];
                const Vec2& next = u[(m + 1) % u.size()];
                if (std::abs(cross(prev, cur, next)) > 1e-12) clean.push_back(cur);
              }
              if (clean.size() >= 3 && is_convex_ccw(clean)) {
                polys[i] = clean;
                polys.erase(polys.begin() + j);
                merged = true;
              }
              break;
            }
          }
        }
      }
    }
  }
  return polys;
}

ConvexPart convex_minkowski(const ConvexPart& a, const ConvexPart& b) {
  auto bottom = [](const Ring& r) {
    size_t best = 0;
    for (size_t i = 1; i < r.size(); ++i) {
      if (r[i].y() < r[best].y() || (r[i].y() == r[best].y() && r[i].x() < r[best].x()))
        best = i;
    }
    return best;
  };
  const size_t na = a.size(), nb = b.size();
  size_t ia = bottom(a), ib = bottom(b);
  Ring out;
  out.reserve(na + nb);
  size_t ca = 0, cb = 0;
  while (ca < na || cb < nb) {
    out.push_back(a[ia % na] + b[ib % nb]);
    Vec2 ea = a[(ia + 1) % na] - a[ia % na];
    Vec2 eb = b[(ib + 1) % nb] - b[ib % nb];
    double cr = ea.x() * eb.y() - ea.y() * eb.x();
    if (cb >= nb || (ca < na && cr > 1e-12)) {
      ++ia;
      ++ca;
    } else if (ca >= na || cr < -1e-12) {
      ++ib;
      ++cb;
    } else {  // parallel edges advance together
      ++ia;
      ++ca;
      ++ib;
      ++cb;
    }
  }
  out = dedup_ring(out);
  if (signed_area(out) < 0) std::reverse(out.begin(), out.end());
  return out;
}

bool convex_contains(const ConvexPart& part, const Vec2& p, double eps) {
  for (size_t i = 0, n = part.size(); i < n; ++i) {
    if (cross(part[i], part[(i + 1) % n], p) < -eps) return false;
  }
  return true;
}

RegionSet minkowski_sum(const Polygon& p, const Polygon& q) {
  if (p.outer.size() < 3 || q.outer.size() < 3)
    throw std::invalid_argument("degenerate polygon (< 3 vertices)");
  auto pa = decompose_convex(p.outer);
  auto qa = decompose_convex(q.outer);
  RegionSet out;
  out.polygons.reserve(pa.size() * qa.size());
  for (const auto& a : pa)
    for (const auto& b : qa) out.polygons.push_back(Polygon{convex_minkowski(a, b), {}});
  return out;
}

Polygon minkowski_sum(const Polygon& p, const Vec2& point) {
  Polygon out = p;
  for (auto& v : out.outer) v += point;
  for (auto& h : out.holes)
    for (auto& v : h) v += point;
  return out;
}

// --- PartSet ---

PartSet::PartSet(std::vector<ConvexPart> parts) : parts_(std::move(parts)) {
  part_boxes_.reserve(parts_.size());
  for (const auto& part : parts_) {
    part_boxes_.push_back(bounds_of(part));
    bbox_.expand(part_boxes_.back());
  }
  if (parts_.empty() || bbox_.empty()) return;
  Vec2 sz = bbox_.size();
  double mean_dim = 0.0;
  for (const auto& b : part_boxes_) mean_dim += (b.size().x() + b.size().y()) * 0.5;
  mean_dim /= double(part_boxes_.size());
  cell_ = std::max(4.0, mean_dim);
  nx_ = std::max(1, int(std::ceil(sz.x() / cell_)));
  ny_ = std::max(1, int(std::ceil(sz.y() / cell_)));
  if (std::int64_t(nx_) * ny_ > 1 << 20) {  // cap grid size
    double scale = std::sqrt(double(std::int64_t(nx_) * ny_) / double(1 << 20));
    cell_ *= scale;
    nx_ = std::max(1, int(std::ceil(sz.x() / cell_)));
    ny_ = std::max(1, int(std::ceil(sz.y() / cell_)));
  }
  buckets_.assign(size_t(nx_) * ny_, {});
  for (std::int32_t i = 0; i < std::int32_t(parts_.size()); ++i) {
    const Box2& b = part_boxes_[i];
    int x0 = std::clamp(int((b.lo.x() - bbox_.lo.x()) / cell_), 0, nx_ - 1);
    int x1 = std::clamp(int((b.hi.x() - bbox_.lo.x()) / cell_), 0, nx_ - 1);
    int y0 = std::clamp(int((b.lo.y() - bbox_.lo.y()) / cell_), 0, ny_ - 1);
    int y1 = std::clamp(int((b.hi.y() - bbox_.lo.y()) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) buckets_[size_t(y) * nx_ + x].push_back(i);
  }
}

bool PartSet::contains(const Vec2& p) const {
  if (parts_.empty() || !bbox_.contains(p)) return false;
  int x = std::clamp(int((p.x() - bbox_.lo.x()) / cell_), 0, nx_ - 1);
  int y = std::clamp(int((p.y() - bbox_.lo.y()) / cell_), 0, ny_ - 1);
  for (std::int32_t i : buckets_[size_t(y) * nx_ + x]) {
    if (!part_boxes_[i].contains(p)) continue;
    if (convex_contains(parts_[i], p)) return true;
  }
  return false;
}

}  // namespace fresco

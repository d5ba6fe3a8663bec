#include "fresco/sampler.hpp"

#include "fresco/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;

std::vector<ConvexPart> rotate_reflect(const std::vector<ConvexPart>& parts, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  std::vector<ConvexPart> out;
  out.reserve(parts.size());
  for (const auto& part : parts) {
    ConvexPart r(part.size());
    for (size_t i = 0; i < part.size(); ++i) {
      // -R(theta) * v
      r[i] = Vec2(-(c * part[i].x() - s * part[i].y()), -(s * part[i].x() + c * part[i].y()));
    }
    out.push_back(std::move(r));
  }
  return out;
}

int snap_index(double theta, int n) {
  int k = int(std::lround(normalize_angle(theta) / (kTau / n))) % n;
  return k < 0 ? k + n : k;
}

}  // namespace

PairGeometry decompose_pair(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj) {
  PairGeometry g;
  g.mat_i = decompose_convex(fi.base.boundary.outer);
  g.plus_i = decompose_convex(fi.boundary_plus.outer);
  g.mat_j = decompose_convex(fj.base.boundary.outer);
  g.plus_j = decompose_convex(fj.boundary_plus.outer);
  return g;
}

PartSet build_cspace(const std::vector<ConvexPart>& obstacle_parts,
                     const std::vector<ConvexPart>& robot_parts, double theta) {
  auto robot = rotate_reflect(robot_parts, theta);
  std::vector<ConvexPart> sums;
  sums.reserve(obstacle_parts.size() * robot.size());
  for (const auto& a : obstacle_parts)
    for (const auto& b : robot) sums.push_back(convex_minkowski(a, b));
  return PartSet(std::move(sums));
}

namespace {

PairConfigSpace build_space_impl(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj,
                                 const SolverParams& params, std::vector<int> angle_indices) {
  // the role-swapped side of is_valid queries the inverse rotation, so every
  // requested index pulls in its inverse
  {
    std::vector<int> expanded = angle_indices;
    for (int k : angle_indices) expanded.push_back((params.n_rotations - k) % params.n_rotations);
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());
    angle_indices = std::move(expanded);
  }
  PairConfigSpace space;
  space.id_i = fi.base.id;
  space.id_j = fj.base.id;
  space.n_rotations = params.n_rotations;
  space.angle_indices = std::move(angle_indices);
  space.slot_of_index.assign(params.n_rotations, -1);
  space.ij.resize(space.angle_indices.size());
  space.ji.resize(space.angle_indices.size());

  PairGeometry g = decompose_pair(fi, fj);
  const double step = kTau / params.n_rotations;

  parallel_for(int64_t(space.angle_indices.size()), [&](int64_t s) {
    const int k = space.angle_indices[s];
    const double theta = k * step;
    space.ij[s].material = build_cspace(g.mat_i, g.mat_j, theta);
    space.ij[s].band = build_cspace(g.plus_i, g.mat_j, theta);
    space.ji[s].material = build_cspace(g.mat_j, g.mat_i, theta);
    space.ji[s].band = build_cspace(g.plus_j, g.mat_i, theta);
  });
  for (size_t s = 0; s < space.angle_indices.size(); ++s)
    space.slot_of_index[space.angle_indices[s]] = int(s);
  return space;
}

// --- cache serialization ---

void write_parts(std::ofstream& out, const PartSet& set) {
  std::uint32_t n = std::uint32_t(set.parts().size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (const auto& part : set.parts()) {
    std::uint32_t m = std::uint32_t(part.size());
    out.write(reinterpret_cast<const char*>(&m), 4);
    for (const auto& v : part) {
      double xy[2] = {v.x(), v.y()};
      out.write(reinterpret_cast<const char*>(xy), 16);
    }
  }
}

bool read_parts(std::ifstream& in, PartSet* set) {
  std::uint32_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), 4)) return false;
  if (n > (1u << 24)) return false;
  std::vector<ConvexPart> parts(n);
  for (auto& part : parts) {
    std::uint32_t m = 0;
    if (!in.read(reinterpret_cast<char*>(&m), 4)) return false;
    if (m > (1u << 16)) return false;
    part.resize(m);
    for (auto& v : part) {
      double xy[2];
      if (!in.read(reinterpret_cast<char*>(xy), 16)) return false;
      v = Vec2(xy[0], xy[1]);
    }
  }
  *set = PartSet(std::move(parts));
  return true;
}

constexpr std::uint32_t kCacheMagic = 0x46435031;  // "FCP1"

bool load_space_cache(const std::string& path, PairConfigSpace* space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::uint32_t magic = 0;
  std::int32_t n_rot = 0, n_slices = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&n_rot), 4);
  in.read(reinterpret_cast<char*>(&n_slices), 4);
  if (!in || magic != kCacheMagic) return false;
  if (n_rot != space->n_rotations || n_slices != std::int32_t(space->angle_indices.size()))
    return false;
  space->ij.resize(n_slices);
  space->ji.resize(n_slices);
  for (int s = 0; s < n_slices; ++s) {
    std::int32_t k = -1;
    in.read(reinterpret_cast<char*>(&k), 4);
    if (!in || k != space->angle_indices[s]) return false;
    if (!read_parts(in, &space->ij[s].material)) return false;
    if (!read_parts(in, &space->ij[s].band)) return false;
    if (!read_parts(in, &space->ji[s].material)) return false;
    if (!read_parts(in, &space->ji[s].band)) return false;
  }
  for (size_t s = 0; s < space->angle_indices.size(); ++s)
    space->slot_of_index[space->angle_indices[s]] = int(s);
  return true;
}

void save_space_cache(const std::string& path, const PairConfigSpace& space) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    std::int32_t n_rot = space.n_rotations, n_slices = std::int32_t(space.angle_indices.size());
    out.write(reinterpret_cast<const char*>(&kCacheMagic), 4);
    out.write(reinterpret_cast<const char*>(&n_rot), 4);
    out.write(reinterpret_cast<const char*>(&n_slices), 4);
    for (int s = 0; s < n_slices; ++s) {
      std::int32_t k = space.angle_indices[s];
      out.write(reinterpret_cast<const char*>(&k), 4);
      write_parts(out, space.ij[s].material);
      write_parts(out, space.ij[s].band);
      write_parts(out, space.ji[s].material);
      write_parts(out, space.ji[s].band);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

std::uint64_t fragment_content_hash(const Fragment& f) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::uint8_t* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= data[i];
      h *= 0x100000001b3ull;
    }
  };
  mix(f.mask.data(), size_t(f.mask.size()));
  mix(f.pixels.r.data(), size_t(f.pixels.r.size()));
  mix(f.pixels.g.data(), size_t(f.pixels.g.size()));
  mix(f.pixels.b.data(), size_t(f.pixels.b.size()));
  return h;
}

PairConfigSpace build_pair_space(const ExtrapolatedFragment& fi, const ExtrapolatedFragment& fj,
                                 const SolverParams& params, const std::string& cache_dir) {
  std::vector<int> all(params.n_rotations);
  for (int k = 0; k < params.n_rotations; ++k) all[k] = k;

  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    char name[128];
    std::snprintf(name, sizeof(name), "pairspace_%016llx_%016llx_%016llx.bin",
                  (unsigned long long)fragment_content_hash(fi.base),
                  (unsigned long long)fragment_content_hash(fj.base),
                  (unsigned long long)params_hash(params));
    std::string path = (std::filesystem::path(cache_dir) / name).string();

    PairConfigSpace space;
    space.id_i = fi.base.id;
    space.id_j = fj.base.id;
    space.n_rotations = params.n_rotations;
    space.angle_indices = all;
    space.slot_of_index.assign(params.n_rotations, -1);
    if (load_space_cache(path, &space)) return space;

    space = build_space_impl(fi, fj, params, all);
    save_space_cache(path, space);
    return space;
  }
  return build_space_impl(fi, fj, params, all);
}

PairConfigSpace build_pair_space_slices(const ExtrapolatedFragment& fi,
                                        const ExtrapolatedFragment& fj,
                                        const SolverParams& params,
                                        const std::vector<int>& angle_indices) {
  return build_space_impl(fi, fj, params, angle_indices);
}

bool is_valid(const RigidTransform& t, const PairConfigSpace& space) {
  const int n = space.n_rotations;
  const int k = snap_index(t.theta, n);
  const int k_inv = (n - k) % n;
  if (!space.has_index(k) || !space.has_index(k_inv))
    throw std::invalid_argument("rotation slice not built for is_valid query");

  const PairSlice& fwd = space.ij[space.slot_of_index[k]];
  const Vec2 tau = t.translation();
  if (!fwd.band.contains(tau)) return false;
  if (fwd.material.contains(tau)) return false;

  // role-swapped check at the inverse rotation
  RigidTransform snapped = make_transform(k * space.angle_step(), t.tx, t.ty);
  const Vec2 tau_inv = invert(snapped).translation();
  const PairSlice& rev = space.ji[space.slot_of_index[k_inv]];
  if (!rev.band.contains(tau_inv)) return false;
  if (rev.material.contains(tau_inv)) return false;
  return true;
}

std::vector<RigidTransform> sample_valid_at(const PairConfigSpace& space,
                                            const SolverParams& params, int angle_index) {
  std::vector<RigidTransform> out;
  if (!space.has_index(angle_index)) return out;
  const PairSlice& fwd = space.ij[space.slot_of_index[angle_index]];
  if (fwd.band.empty()) return out;
  const double step = params.translation_step;
  const Box2& bb = fwd.band.bbox();
  const double theta = angle_index * space.angle_step();
  const std::int64_t x0 = std::int64_t(std::ceil(bb.lo.x() / step));
  const std::int64_t x1 = std::int64_t(std::floor(bb.hi.x() / step));
  const std::int64_t y0 = std::int64_t(std::ceil(bb.lo.y() / step));
  const std::int64_t y1 = std::int64_t(std::floor(bb.hi.y() / step));
  for (std::int64_t gy = y0; gy <= y1; ++gy)
    for (std::int64_t gx = x0; gx <= x1; ++gx) {
      RigidTransform t = make_transform(theta, double(gx) * step, double(gy) * step);
      if (is_valid(t, space)) out.push_back(t);
    }
  return out;
}

std::vector<RigidTransform> sample_valid(const PairConfigSpace& space,
                                         const SolverParams& params) {
  std::vector<std::vector<RigidTransform>> per_angle(space.angle_indices.size());
  parallel_for(int64_t(space.angle_indices.size()), [&](int64_t s) {
    per_angle[s] = sample_valid_at(space, params, space.angle_indices[s]);
  });
  std::vector<RigidTransform> out;
  for (auto& v : per_angle) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace fresco

#include "fresco/generator.hpp"

#include "fresco/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fresco {

namespace {

constexpr double kTau = 6.283185307179586476925287;

double lattice_noise(std::uint64_t seed, std::int64_t x, std::int64_t y) {
  std::uint64_t s = seed ^ (std::uint64_t(x) * 0x8DA6B343u) ^ (std::uint64_t(y) * 0xD8163841u);
  splitmix64(s);
  return double(splitmix64(s) >> 11) * 0x1.0p-53 * 2.0 - 1.0;  // [-1, 1)
}

// band-limited value noise, `octaves` octaves starting at `scale` px
double value_noise(std::uint64_t seed, double x, double y, double scale, int octaves) {
  double acc = 0, amp = 1, norm = 0;
  for (int o = 0; o < octaves; ++o) {
    const double s = scale / double(1 << o);
    const double fx = x / s, fy = y / s;
    const std::int64_t x0 = std::int64_t(std::floor(fx)), y0 = std::int64_t(std::floor(fy));
    const double tx = fx - double(x0), ty = fy - double(y0);
    const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
    const double v00 = lattice_noise(seed + o, x0, y0);
    const double v10 = lattice_noise(seed + o, x0 + 1, y0);
    const double v01 = lattice_noise(seed + o, x0, y0 + 1);
    const double v11 = lattice_noise(seed + o, x0 + 1, y0 + 1);
    acc += amp * ((1 - sy) * ((1 - sx) * v00 + sx * v10) + sy * ((1 - sx) * v01 + sx * v11));
    norm += amp;
    amp *= 0.5;
  }
  return acc / norm;
}

using LabelGrid = Eigen::Array<std::int16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

void degrade(ImageRGB* pixels, const MaskGrid& mask, const DegradeParams& dp,
             std::uint64_t seed) {
  const int w = pixels->width(), h = pixels->height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      LabColor c = to_lab(pixels->r(y, x), pixels->g(y, x), pixels->b(y, x));
      c.L = float(c.L * dp.l_factor);
      c.a = float(c.a * (1.0 - dp.desaturation));
      c.b = float(c.b * (1.0 - dp.desaturation));
      if (dp.mottle_amp > 0) {
        double n = value_noise(seed, x, y, 9.0, 3) * 2.2;  // approx unit sigma
        n = std::clamp(n, -3.0, 3.0);
        c.L = float(c.L + dp.mottle_amp * n);
      }
      c.L = std::clamp(c.L, 0.0f, 100.0f);
      double r, g, b;
      lab_to_rgb(c, &r, &g, &b);
      pixels->r(y, x) = std::uint8_t(std::lround(r));
      pixels->g(y, x) = std::uint8_t(std::lround(g));
      pixels->b(y, x) = std::uint8_t(std::lround(b));
    }
}

ImageRGB make_synthetic_artwork(int w, int h, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xA27u));
  // fresco-ish palette
  struct Paint {
    double L, a, b;
  };
  std::vector<Paint> palette;
  const int n_colors = 6 + int(rng.range(4));
  for (int i = 0; i < n_colors; ++i)
    palette.push_back({rng.uniform(25, 85), rng.uniform(-45, 55), rng.uniform(-40, 60)});

  // figurative, non-repeating elements: discs, rings, finite strokes, crescents
  struct Shape {
    int kind;  // 0 disc, 1 ring, 2 stroke segment, 3 crescent
    double cx, cy, r1, r2, ang, len;
    double ox, oy;  // crescent offset
    int color;
    bool outline;
  };
  std::vector<Shape> shapes;
  const int n_shapes = 26 + int(rng.range(14));
  for (int i = 0; i < n_shapes; ++i) {
    Shape s;
    s.kind = int(rng.range(4));
    s.cx = rng.uniform(0, w);
    s.cy = rng.uniform(0, h);
    s.r1 = rng.uniform(w * 0.03, w * 0.14);
    s.r2 = s.r1 + rng.uniform(w * 0.012, w * 0.05);
    s.ang = rng.uniform(0, kTau);
    s.len = rng.uniform(w * 0.08, w * 0.35);
    s.ox = rng.uniform(-0.5, 0.5) * s.r1;
    s.oy = rng.uniform(-0.5, 0.5) * s.r1;
    s.color = int(rng.range(std::uint64_t(palette.size())));
    s.outline = rng.uniform() < 0.45;
    shapes.push_back(s);
  }
  const int base_color = int(rng.range(std::uint64_t(palette.size())));
  const std::uint64_t tex_seed = derive_seed(seed, 0xBEE5u);

  ImageRGB img;
  img.r = GrayU8::Zero(h, w);
  img.g = GrayU8::Zero(h, w);
  img.b = GrayU8::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // warped coordinates give the shapes a hand-painted wobble
      const double wx = x + 5.0 * value_noise(tex_seed, x, y, 48.0, 2);
      const double wy = y + 5.0 * value_noise(tex_seed + 1, x, y, 48.0, 2);
      Paint p = palette[base_color];
      bool dark_line = false;
      for (const auto& s : shapes) {
        bool inside = false;
        bool edge = false;
        const double dx = wx - s.cx, dy = wy - s.cy;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (s.kind == 0) {
          inside = d < s.r1;
          edge = s.outline && std::abs(d - s.r1) < 1.4;
        } else if (s.kind == 1) {
          inside = d >= s.r1 && d < s.r2;
          edge = s.outline && (std::abs(d - s.r1) < 1.2 || std::abs(d - s.r2) < 1.2);
        } else if (s.kind == 2) {
          // one finite thick stroke
          const double t = dx * std::cos(s.ang) + dy * std::sin(s.ang);
          const double n = -dx * std::sin(s.ang) + dy * std::cos(s.ang);
          inside = std::abs(t) < s.len * 0.5 && std::abs(n) < s.r1 * 0.45;
          edge = s.outline && inside && std::abs(std::abs(n) - s.r1 * 0.45) < 1.2;
        } else {
          const double d2 = std::sqrt((wx - s.cx - s.ox) * (wx - s.cx - s.ox) +
                                      (wy - s.cy - s.oy) * (wy - s.cy - s.oy));
          inside = d < s.r1 && d2 >= s.r1 * 0.75;
          edge = s.outline && inside && std::abs(d - s.r1) < 1.3;
        }
        if (inside) {
          p = palette[s.color];
          dark_line = edge;
        }
      }
      LabColor c;
      // illumination drift plus granulation keeps flat areas distinguishable
      const double light = 6.0 * value_noise(tex_seed + 5, x, y, double(w), 1) +
                           3.5 * value_noise(tex_seed + 6, x, y, 64.0, 2);
      c.L = float(std::clamp(
          (dark_line ? p.L * 0.45 : p.L) + light +
              4.0 * value_noise(tex_seed + 2, x, y, 13.0, 3),
          0.0, 100.0));
      c.a = float(p.a + 2.0 * value_noise(tex_seed + 3, x, y, 13.0, 2));
      c.b = float(p.b + 2.0 * value_noise(tex_seed + 4, x, y, 13.0, 2));
      double r, g, b;
      lab_to_rgb(c, &r, &g, &b);
      img.r(y, x) = std::uint8_t(std::lround(r));
      img.g(y, x) = std::uint8_t(std::lround(g));
      img.b(y, x) = std::uint8_t(std::lround(b));
    }
  return img;
}

namespace {

struct Cells {
  LabelGrid labels;
  std::vector<MaskGrid> eroded;
  bool ok = false;
};

Cells make_cells(int w, int h, const PuzzleSpec& spec, std::uint64_t attempt_seed) {
  Cells out;
  Rng rng(attempt_seed);
  const double mean_diam = std::sqrt(double(w) * h / spec.n_fragments);

  // sites with a minimum separation
  std::vector<Vec2> sites;
  int guard = 0;
  while (int(sites.size()) < spec.n_fragments && guard < 20000) {
    ++guard;
    Vec2 p(rng.uniform(0.08 * w, 0.92 * w), rng.uniform(0.08 * h, 0.92 * h));
    bool ok = true;
    for (const auto& s : sites)
      if ((s - p).norm() < 0.55 * mean_diam) {
        ok = false;
        break;
      }
    if (ok) sites.push_back(p);
  }
  if (int(sites.size()) < spec.n_fragments) return out;

  // crack wiggle: warp the plane before the nearest-site assignment
  const double amp = 0.04 * mean_diam;
  const double noise_scale = std::max(8.0, 0.5 * mean_diam);
  const std::uint64_t nseed = derive_seed(attempt_seed, 0x17u);

  out.labels.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double nx = x + amp * value_noise(nseed, x, y, noise_scale, 3);
      const double ny = y + amp * value_noise(nseed + 99, x, y, noise_scale, 3);
      int best = 0;
      double best_d = 1e300;
      for (int i = 0; i < int(sites.size()); ++i) {
        const double dx = nx - sites[i].x(), dy = ny - sites[i].y();
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      out.labels(y, x) = std::int16_t(best);
    }

  // per-cell erosion by a disk; outside the image counts as own material so
  // artifact borders stay crisp
  const int e = int(std::lround(spec.erosion_px));
  std::vector<std::pair<int, int>> disk;
  for (int dy = -e; dy <= e; ++dy)
    for (int dx = -e; dx <= e; ++dx)
      if (dx * dx + dy * dy <= e * e) disk.push_back({dx, dy});

  out.eroded.assign(spec.n_fragments, MaskGrid::Zero(h, w));
  std::vector<std::int64_t> count(spec.n_fragments, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::int16_t id = out.labels(y, x);
      bool keep = true;
      if (e > 0) {
        for (const auto& [dx, dy] : disk) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (out.labels(yy, xx) != id) {
            keep = false;
            break;
          }
        }
      }
      if (keep) {
        out.eroded[id](y, x) = 1;
        ++count[id];
      }
    }

  // reject attempts that eroded a fragment away or made one too small
  for (int i = 0; i < spec.n_fragments; ++i) {
    if (count[i] < 16) return out;
    const double diam = std::sqrt(double(count[i]));
    if (spec.erosion_px > 0.25 * diam) return out;
  }
  out.ok = true;
  return out;
}

}  // namespace

GeneratedPuzzle fragment_image(const ImageRGB& source, const PuzzleSpec& spec) {
  const int w = source.width(), h = source.height();
  if (w < 64 || h < 64) throw std::invalid_argument("source image must be at least 64x64");
  if (spec.n_fragments < 2) throw std::invalid_argument("need at least 2 fragments");
  if (spec.erosion_px < 0) throw std::invalid_argument("erosion must be non-negative");

  Cells cells;
  for (int attempt = 0; attempt < 10 && !cells.ok; ++attempt)
    cells = make_cells(w, h, spec, derive_seed(spec.seed, 0x5EEDu, std::uint64_t(attempt)));
  if (!cells.ok)
    throw std::runtime_error("fragmentation failed: cells erode below the minimum size");

  GeneratedPuzzle out;
  out.labels = cells.labels;
  out.source_masks = cells.eroded;
  out.truth.poses.resize(spec.n_fragments);

  // adjacency: masks within 2*erosion + 2 px in the source frame
  const double reach = 2.0 * spec.erosion_px + 2.0;
  const int r = int(std::ceil(reach / 2.0));
  std::vector<MaskGrid> dilated(spec.n_fragments, MaskGrid::Zero(h, w));
  for (int i = 0; i < spec.n_fragments; ++i) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!cells.eroded[i](y, x)) continue;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > r * r) continue;
            const int xx = x + dx, yy = y + dy;
            if (xx >= 0 && yy >= 0 && xx < w && yy < h) dilated[i](yy, xx) = 1;
          }
      }
  }
  for (int i = 0; i < spec.n_fragments; ++i)
    for (int j = i + 1; j < spec.n_fragments; ++j) {
      bool touch = false;
      for (int y = 0; y < h && !touch; ++y)
        for (int x = 0; x < w && !touch; ++x)
          if (dilated[i](y, x) && dilated[j](y, x)) touch = true;
      if (touch) out.truth.adjacency.push_back({i, j});
    }

  // emit fragments: crop, degrade, scatter-rotate
  for (int i = 0; i < spec.n_fragments; ++i) {
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (cells.eroded[i](y, x)) {
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
        }
    const int cw = x1 - x0 + 1, ch = y1 - y0 + 1;
    ImageRGB crop;
    crop.r = source.r.block(y0, x0, ch, cw);
    crop.g = source.g.block(y0, x0, ch, cw);
    crop.b = source.b.block(y0, x0, ch, cw);
    MaskGrid cmask(ch, cw);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) cmask(y, x) = cells.eroded[i](y + y0, x + x0);

    Rng frng(derive_seed(spec.seed, 0xF00Du, std::uint64_t(i)));
    DegradeParams dp;
    dp.l_factor = 1.0 + spec.fade_amp * (2.0 * frng.uniform() - 1.0);
    dp.desaturation = spec.saturation_amp * frng.uniform();
    dp.mottle_amp = spec.mottle_amp;
    degrade(&crop, cmask, dp, derive_seed(spec.seed, 0x0DDu, std::uint64_t(i)));

    const double rho = frng.uniform(0.0, kTau);
    RotatedRaster rot = rotate_raster(crop, cmask, rho);
    out.images.push_back(rot.image);
    out.masks.push_back(rot.mask);

    // emitted raster -> source frame: undo the rotation map, add crop origin
    RigidTransform rot_map = make_transform(
        rho, rot.center.x() + rot.offset.x() -
                 (std::cos(rho) * rot.center.x() - std::sin(rho) * rot.center.y()),
        rot.center.y() + rot.offset.y() -
            (std::sin(rho) * rot.center.x() + std::cos(rho) * rot.center.y()));
    out.truth.poses[i] = compose(make_transform(0, x0, y0), invert(rot_map));
  }
  return out;
}

void write_puzzle_dir(const std::string& dir, const GeneratedPuzzle& puzzle,
                      const PuzzleSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t i = 0; i < puzzle.images.size(); ++i) {
    const std::string base = (fs::path(dir) / ("fragment_" + std::to_string(i))).string();
    write_png(base + ".png", puzzle.images[i]);
    write_png_gray(base + "_mask.png", (puzzle.masks[i] != 0).cast<std::uint8_t>() * 255);
  }
  nlohmann::json j;
  j["fragments"] = nlohmann::json::array();
  for (size_t i = 0; i < puzzle.truth.poses.size(); ++i) {
    const auto& t = puzzle.truth.poses[i];
    j["fragments"].push_back({{"id", int(i)},
                              {"theta_radians", t.theta},
                              {"tx", t.tx},
                              {"ty", t.ty}});
  }
  j["adjacency"] = nlohmann::json::array();
  for (auto [a, b] : puzzle.truth.adjacency) j["adjacency"].push_back({a, b});
  j["spec"] = {{"n_fragments", spec.n_fragments}, {"erosion_px", spec.erosion_px},
               {"fade_amp", spec.fade_amp},       {"saturation_amp", spec.saturation_amp},
               {"mottle_amp", spec.mottle_amp},   {"seed", spec.seed}};
  j["conventions"] = {{"angles", "radians"}, {"y_axis", "down"}, {"translations", "pixels"}};
  std::ofstream out(fs::path(dir) / "truth.json");
  out << j.dump(2) << "\n";
}

PuzzleDir read_puzzle_dir(const std::string& dir, bool need_truth) {
  namespace fs = std::filesystem;
  PuzzleDir out;
  for (int id = 0;; ++id) {
    const std::string base = (fs::path(dir) / ("fragment_" + std::to_string(id))).string();
    if (!fs::exists(base + ".png")) break;
    const std::string mask_path = fs::exists(base + "_mask.png") ? base + "_mask.png" : "";
    out.fragments.push_back(load_fragment_png(base + ".png", mask_path, id));
  }
  if (out.fragments.empty()) throw std::runtime_error("no fragment_<id>.png files in " + dir);

  const fs::path truth_path = fs::path(dir) / "truth.json";
  if (fs::exists(truth_path)) {
    std::ifstream in(truth_path);
    nlohmann::json j;
    in >> j;
    out.truth.poses.assign(out.fragments.size(), RigidTransform{});
    for (const auto& f : j.at("fragments")) {
      const int id = f.at("id").get<int>();
      if (id < 0 || id >= int(out.truth.poses.size()))
        throw std::runtime_error("truth.json fragment id out of range");
      out.truth.poses[id] = make_transform(f.at("theta_radians").get<double>(),
                                           f.at("tx").get<double>(), f.at("ty").get<double>());
    }
    for (const auto& a : j.at("adjacency"))
      out.truth.adjacency.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
    out.has_truth = true;
  } else if (need_truth) {
    throw std::runtime_error("missing truth.json in " + dir);
  }
  return out;
}

}  // namespace fresco

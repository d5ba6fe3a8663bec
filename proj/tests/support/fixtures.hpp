#pragma once

#include "fresco/extrapolate.hpp"
#include "fresco/raster.hpp"
#include "fresco/rng.hpp"

#include <functional>

// Shared construction helpers for tests.
namespace fresco::fixtures {

inline ImageRGB make_image(int w, int h,
                           const std::function<void(int, int, std::uint8_t*)>& px) {
  ImageRGB img;
  img.r = GrayU8::Zero(h, w);
  img.g = GrayU8::Zero(h, w);
  img.b = GrayU8::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t c[3];
      px(x, y, c);
      img.r(y, x) = c[0];
      img.g(y, x) = c[1];
      img.b(y, x) = c[2];
    }
  return img;
}

inline ImageRGB noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  return make_image(w, h, [&](int, int, std::uint8_t* c) {
    c[0] = std::uint8_t(rng.range(256));
    c[1] = std::uint8_t(rng.range(256));
    c[2] = std::uint8_t(rng.range(256));
  });
}

// Smooth multi-blob test picture: distinctive large-scale content.
inline ImageRGB textured_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  struct Blob {
    double cx, cy, r;
    double col[3];
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 14; ++i)
    blobs.push_back({rng.uniform(0, w), rng.uniform(0, h), rng.uniform(w * 0.08, w * 0.3),
                     {rng.uniform(30, 225), rng.uniform(30, 225), rng.uniform(30, 225)}});
  return make_image(w, h, [&](int x, int y, std::uint8_t* c) {
    double acc[3] = {40 + 60.0 * x / w, 50 + 40.0 * y / h, 70.0};
    for (const auto& b : blobs) {
      double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
      double wgt = std::exp(-d2 / (b.r * b.r));
      for (int kk = 0; kk < 3; ++kk) acc[kk] = (1 - wgt) * acc[kk] + wgt * b.col[kk];
    }
    for (int kk = 0; kk < 3; ++kk) c[kk] = std::uint8_t(std::clamp(acc[kk], 0.0, 255.0));
  });
}

inline Fragment solid_fragment(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                               int id) {
  ImageRGB img = make_image(w, h, [&](int, int, std::uint8_t* c) {
    c[0] = r;
    c[1] = g;
    c[2] = b;
  });
  MaskGrid mask = MaskGrid::Constant(h, w, 1);
  return load_fragment(img, mask, id);
}

// Crop [x0, x0+w) x [y0, y0+h) of an image as a fragment.
inline Fragment crop_fragment(const ImageRGB& src, int x0, int y0, int w, int h, int id) {
  ImageRGB img;
  img.r = src.r.block(y0, x0, h, w);
  img.g = src.g.block(y0, x0, h, w);
  img.b = src.b.block(y0, x0, h, w);
  MaskGrid mask = MaskGrid::Constant(h, w, 1);
  return load_fragment(img, mask, id);
}

// Fragment with a random blob mask filled from an image.
inline Fragment blob_fragment(const ImageRGB& src, Rng& rng, double radius, int id) {
  const int w = src.width(), h = src.height();
  Polygon blob;
  while (true) {
    blob = Polygon{};
    double cx = w / 2.0, cy = h / 2.0;
    int verts = 10 + int(rng.range(6));
    for (int i = 0; i < verts; ++i) {
      double ang = 6.283185307179586 * i / verts;
      double rr = radius * rng.uniform(0.55, 1.25);
      blob.outer.push_back(Vec2(cx + rr * std::cos(ang), cy + rr * std::sin(ang)));
    }
    if (std::abs(signed_area(blob.outer)) > 80) break;
  }
  MaskGrid mask = MaskGrid::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (contains(blob, Vec2(x, y))) mask(y, x) = 1;
  return load_fragment(src, mask, id);
}

}  // namespace fresco::fixtures

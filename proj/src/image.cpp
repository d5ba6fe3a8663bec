#include "fresco/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace fresco {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageRGB read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("undecodable PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> row(size_t(w) * channels);

  ImageRGB out;
  out.r.resize(h, w);
  out.g.resize(h, w);
  out.b.resize(h, w);
  bool has_alpha = channels == 4;
  if (has_alpha) out.alpha = GrayU8(h, w);

  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      const std::uint8_t* px = row.data() + size_t(x) * channels;
      out.r(y, x) = px[0];
      out.g(y, x) = px[1];
      out.b(y, x) = px[2];
      if (has_alpha) (*out.alpha)(y, x) = px[3];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

namespace {

void write_png_impl(const std::string& path, int w, int h, int channels,
                    const std::function<void(int, std::uint8_t*)>& fill_row) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed: " + path);
  }

  png_init_io(png, fp.get());
  int type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, w, h, 8, type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(size_t(w) * channels);
  for (int y = 0; y < h; ++y) {
    fill_row(y, row.data());
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::string& path, const ImageRGB& img) {
  write_png_impl(path, img.width(), img.height(), 3, [&](int y, std::uint8_t* row) {
    for (int x = 0; x < img.width(); ++x) {
      row[3 * x + 0] = img.r(y, x);
      row[3 * x + 1] = img.g(y, x);
      row[3 * x + 2] = img.b(y, x);
    }
  });
}

void write_png_gray(const std::string& path, const GrayU8& img) {
  write_png_impl(path, int(img.cols()), int(img.rows()), 1, [&](int y, std::uint8_t* row) {
    for (int x = 0; x < img.cols(); ++x) row[x] = img(y, x);
  });
}

float sample_bilinear(const GrayF& img, double x, double y) {
  const int w = int(img.cols()), h = int(img.rows());
  if (x < 0) x = 0;
  if (y < 0) y = 0;
  if (x > w - 1) x = w - 1;
  if (y > h - 1) y = h - 1;
  int x0 = int(std::floor(x)), y0 = int(std::floor(y));
  int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  float fx = float(x - x0), fy = float(y - y0);
  float v00 = img(y0, x0), v10 = img(y0, x1), v01 = img(y1, x0), v11 = img(y1, x1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

bool sample_bilinear_masked(const GrayF& img, const MaskGrid& valid, double x, double y,
                            float* out) {
  const int w = int(img.cols()), h = int(img.rows());
  int x0 = int(std::floor(x)), y0 = int(std::floor(y));
  float fx = float(x - x0), fy = float(y - y0);
  float wsum = 0.0f, vsum = 0.0f;
  float fallback_sum = 0.0f;
  int fallback_n = 0;
  const float cw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const int cx[4] = {x0, x0 + 1, x0, x0 + 1};
  const int cy[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int k = 0; k < 4; ++k) {
    if (cx[k] < 0 || cy[k] < 0 || cx[k] >= w || cy[k] >= h) continue;
    if (!valid(cy[k], cx[k])) continue;
    wsum += cw[k];
    vsum += cw[k] * img(cy[k], cx[k]);
    fallback_sum += img(cy[k], cx[k]);
    ++fallback_n;
  }
  if (wsum > 0.0f) {
    *out = vsum / wsum;
    return true;
  }
  // lattice point exactly on the region edge: all weight fell on invalid
  // corners; use the footprint's valid corners evenly
  if (fallback_n > 0) {
    *out = fallback_sum / float(fallback_n);
    return true;
  }
  return false;
}

RotatedRaster rotate_raster(const ImageRGB& img, const MaskGrid& mask, double angle) {
  const int w = img.width(), h = img.height();
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double c = std::cos(angle), s = std::sin(angle);

  double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;
  const double corners[4][2] = {{-0.5, -0.5},
                                {w - 0.5, -0.5},
                                {w - 0.5, h - 0.5},
                                {-0.5, h - 0.5}};
  for (auto& q : corners) {
    double dx = q[0] - cx, dy = q[1] - cy;
    double rx = c * dx - s * dy + cx, ry = s * dx + c * dy + cy;
    min_x = std::min(min_x, rx);
    min_y = std::min(min_y, ry);
    max_x = std::max(max_x, rx);
    max_y = std::max(max_y, ry);
  }
  const int ow = int(std::ceil(max_x - min_x)) + 2;
  const int oh = int(std::ceil(max_y - min_y)) + 2;
  const double off_x = -min_x + 0.5, off_y = -min_y + 0.5;

  RotatedRaster out;
  out.center = Vec2(cx, cy);
  out.offset = Vec2(off_x, off_y);
  out.angle = angle;
  out.image.r = GrayU8::Zero(oh, ow);
  out.image.g = GrayU8::Zero(oh, ow);
  out.image.b = GrayU8::Zero(oh, ow);
  out.mask = MaskGrid::Zero(oh, ow);

  GrayF fr(h, w), fg(h, w), fb(h, w), fm(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      fr(y, x) = img.r(y, x);
      fg(y, x) = img.g(y, x);
      fb(y, x) = img.b(y, x);
      fm(y, x) = mask(y, x) ? 1.0f : 0.0f;
    }

  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      // inverse map into source coords
      double dx = x - off_x - cx, dy = y - off_y - cy;
      double sx = c * dx + s * dy + cx, sy = -s * dx + c * dy + cy;
      if (sx < -1 || sy < -1 || sx > w || sy > h) continue;
      if (sample_bilinear(fm, sx, sy) > 0.5f) {
        out.mask(y, x) = 1;
        out.image.r(y, x) = std::uint8_t(std::lround(sample_bilinear(fr, sx, sy)));
        out.image.g(y, x) = std::uint8_t(std::lround(sample_bilinear(fg, sx, sy)));
        out.image.b(y, x) = std::uint8_t(std::lround(sample_bilinear(fb, sx, sy)));
      }
    }
  }
  return out;
}

}  // namespace fresco

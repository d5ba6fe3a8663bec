#include "fresco/generator.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace fresco;

TEST_CASE("generator: erosion-free fragmentation tiles the source") {
  ImageRGB src = make_synthetic_artwork(96, 96, 5);
  PuzzleSpec spec;
  spec.n_fragments = 2;
  spec.seed = 7;
  GeneratedPuzzle p = fragment_image(src, spec);

  REQUIRE(p.source_masks.size() == 2);
  // partition: each pixel in exactly one eroded mask when erosion is 0
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      int owners = 0;
      for (const auto& m : p.source_masks) owners += m(y, x) ? 1 : 0;
      CHECK(owners == 1);
    }
  // emitted rasters carry the same material up to rotation resampling
  for (int i = 0; i < 2; ++i) {
    std::int64_t src_n = (p.source_masks[i] != 0).count();
    std::int64_t emit_n = (p.masks[i] != 0).count();
    CHECK(std::abs(double(emit_n - src_n)) <= 0.03 * double(src_n) + 16);
  }
}

TEST_CASE("generator: truth poses map emitted material onto the source cells") {
  ImageRGB src = make_synthetic_artwork(96, 96, 9);
  PuzzleSpec spec;
  spec.n_fragments = 3;
  spec.seed = 11;
  GeneratedPuzzle p = fragment_image(src, spec);

  for (int i = 0; i < 3; ++i) {
    std::int64_t hits = 0, total = 0;
    for (int y = 0; y < int(p.masks[i].rows()); ++y)
      for (int x = 0; x < int(p.masks[i].cols()); ++x) {
        if (!p.masks[i](y, x)) continue;
        Vec2 q = apply(p.truth.poses[i], Vec2(x, y));
        int qx = int(std::lround(q.x())), qy = int(std::lround(q.y()));
        ++total;
        if (qx >= 0 && qy >= 0 && qx < 96 && qy < 96 && p.labels(qy, qx) == i) ++hits;
      }
    REQUIRE(total > 0);
    CHECK(double(hits) >= 0.97 * double(total));  // rotation resampling slack
  }
}

TEST_CASE("generator: erosion opens gaps along shared borders") {
  ImageRGB src = make_synthetic_artwork(128, 128, 13);
  PuzzleSpec spec;
  spec.n_fragments = 9;
  spec.erosion_px = 2;
  spec.seed = 3;
  GeneratedPuzzle p = fragment_image(src, spec);

  // distance-transform audit: no two masks closer than 2e - 1
  const double min_gap = 2.0 * spec.erosion_px - 1.0;
  for (int i = 0; i < spec.n_fragments; ++i)
    for (int j = i + 1; j < spec.n_fragments; ++j) {
      double closest = 1e9;
      for (int y = 0; y < 128 && closest > min_gap; ++y)
        for (int x = 0; x < 128; ++x) {
          if (!p.source_masks[i](y, x)) continue;
          for (int dy = -4; dy <= 4; ++dy)
            for (int dx = -4; dx <= 4; ++dx) {
              const int xx = x + dx, yy = y + dy;
              if (xx < 0 || yy < 0 || xx >= 128 || yy >= 128) continue;
              if (p.source_masks[j](yy, xx))
                closest = std::min(closest, std::sqrt(double(dx * dx + dy * dy)));
            }
        }
      CHECK(closest >= min_gap);
    }
}

TEST_CASE("generator: adjacency equals an independent dilation-overlap oracle") {
  ImageRGB src = make_synthetic_artwork(128, 128, 21);
  PuzzleSpec spec;
  spec.n_fragments = 6;
  spec.erosion_px = 1;
  spec.seed = 17;
  GeneratedPuzzle p = fragment_image(src, spec);

  const double reach = 2.0 * spec.erosion_px + 2.0;
  std::vector<std::pair<int, int>> expected;
  for (int i = 0; i < spec.n_fragments; ++i)
    for (int j = i + 1; j < spec.n_fragments; ++j) {
      bool close = false;
      for (int y = 0; y < 128 && !close; ++y)
        for (int x = 0; x < 128 && !close; ++x) {
          if (!p.source_masks[i](y, x)) continue;
          const int r = int(reach) + 1;
          for (int dy = -r; dy <= r && !close; ++dy)
            for (int dx = -r; dx <= r && !close; ++dx) {
              const int xx = x + dx, yy = y + dy;
              if (xx < 0 || yy < 0 || xx >= 128 || yy >= 128) continue;
              if (p.source_masks[j](yy, xx) && dx * dx + dy * dy <= reach * reach) close = true;
            }
        }
      if (close) expected.push_back({i, j});
    }
  CHECK(p.truth.adjacency == expected);
}

TEST_CASE("generator: determinism and reseeded variation") {
  ImageRGB src = make_synthetic_artwork(96, 96, 33);
  PuzzleSpec spec;
  spec.n_fragments = 4;
  spec.erosion_px = 1;
  spec.fade_amp = 0.05;
  spec.mottle_amp = 1.0;
  spec.seed = 99;
  GeneratedPuzzle a = fragment_image(src, spec);
  GeneratedPuzzle b = fragment_image(src, spec);
  REQUIRE(a.images.size() == b.images.size());
  for (size_t i = 0; i < a.images.size(); ++i) {
    CHECK((a.images[i].r == b.images[i].r).all());
    CHECK((a.images[i].g == b.images[i].g).all());
    CHECK((a.images[i].b == b.images[i].b).all());
    CHECK((a.masks[i] == b.masks[i]).all());
  }
  spec.seed = 100;
  GeneratedPuzzle c = fragment_image(src, spec);
  bool any_diff = false;
  for (size_t i = 0; i < a.masks.size() && !any_diff; ++i)
    if (a.masks[i].rows() != c.masks[i].rows() || a.masks[i].cols() != c.masks[i].cols() ||
        !(a.masks[i] == c.masks[i]).all())
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("generator: degrade identity and commanded fade") {
  ImageRGB img = fixtures::textured_image(64, 64, 3);
  MaskGrid mask = MaskGrid::Constant(64, 64, 1);

  ImageRGB same = img;
  degrade(&same, mask, DegradeParams{}, 5);
  CHECK((same.r == img.r).all());
  CHECK((same.g == img.g).all());
  CHECK((same.b == img.b).all());

  // fade 20%: mean L ratio within 2% of the commanded factor
  for (double factor : {0.8, 1.2}) {
    ImageRGB faded = img;
    DegradeParams dp;
    dp.l_factor = factor;
    degrade(&faded, mask, dp, 5);
    double before = 0, after = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        before += to_lab(img.r(y, x), img.g(y, x), img.b(y, x)).L;
        after += to_lab(faded.r(y, x), faded.g(y, x), faded.b(y, x)).L;
      }
    CHECK(std::abs(after / before - factor) < 0.02);
  }
}

TEST_CASE("generator: mottle stays within its 3-sigma bound") {
  ImageRGB img = fixtures::make_image(96, 96, [](int, int, std::uint8_t* c) {
    c[0] = 120;
    c[1] = 125;
    c[2] = 118;
  });
  MaskGrid mask = MaskGrid::Constant(96, 96, 1);
  ImageRGB noisy = img;
  DegradeParams dp;
  dp.mottle_amp = 3.0;
  degrade(&noisy, mask, dp, 77);

  std::int64_t within = 0, total = 0, changed = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      LabColor a = to_lab(img.r(y, x), img.g(y, x), img.b(y, x));
      LabColor b = to_lab(noisy.r(y, x), noisy.g(y, x), noisy.b(y, x));
      double d = std::abs(a.L - b.L) + std::abs(a.a - b.a) + std::abs(a.b - b.b);
      if (d <= 3.0 * dp.mottle_amp + 0.5) ++within;
      if (d > 0.5) ++changed;
      ++total;
    }
  CHECK(double(within) >= 0.99 * double(total));
  CHECK(changed > total / 10);  // the noise actually does something
}

TEST_CASE("generator: puzzle directory round trip") {
  ImageRGB src = make_synthetic_artwork(96, 96, 55);
  PuzzleSpec spec;
  spec.n_fragments = 3;
  spec.erosion_px = 1;
  spec.seed = 12;
  GeneratedPuzzle p = fragment_image(src, spec);

  auto dir = std::filesystem::temp_directory_path() / "fresco_gen_test";
  std::filesystem::remove_all(dir);
  write_puzzle_dir(dir.string(), p, spec);

  PuzzleDir loaded = read_puzzle_dir(dir.string(), true);
  REQUIRE(loaded.fragments.size() == 3);
  REQUIRE(loaded.has_truth);
  CHECK(loaded.truth.adjacency == p.truth.adjacency);
  for (int i = 0; i < 3; ++i) {
    CHECK(loaded.truth.poses[i].theta == doctest::Approx(p.truth.poses[i].theta));
    CHECK(loaded.truth.poses[i].tx == doctest::Approx(p.truth.poses[i].tx));
    // the loader may clean up resampling specks and pinholes
    CHECK(std::abs(double(loaded.fragments[i].material_count) -
                   double((p.masks[i] != 0).count())) <= 16.0);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("generator: bad inputs are rejected") {
  ImageRGB tiny = make_synthetic_artwork(64, 48, 1);
  PuzzleSpec spec;
  spec.n_fragments = 2;
  CHECK_THROWS_AS(fragment_image(tiny, spec), std::invalid_argument);

  ImageRGB src = make_synthetic_artwork(96, 96, 2);
  spec.n_fragments = 1;
  CHECK_THROWS_AS(fragment_image(src, spec), std::invalid_argument);

  // erosion so large every cell dies: ten attempts then an error
  spec.n_fragments = 24;
  spec.erosion_px = 12;
  CHECK_THROWS_AS(fragment_image(src, spec), std::runtime_error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "srcondense/errors.hpp"
#include "srcondense/image.hpp"
#include "srcondense/patches.hpp"

using namespace srcn;
namespace fs = std::filesystem;

namespace {

ImagePlane random_plane(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 255.0f);
  ImagePlane p(h, w);
  for (float& v : p.pixels) v = dist(rng);
  return p;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("srcn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

float max_abs(const ImagePlane& a, const ImagePlane& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
  return m;
}

}  // namespace

TEST_CASE("BT.601 studio-swing conversion") {
  ImagePlane white(1, 1, PlaneRole::Gray, 255.0f);
  auto ycc = rgb_to_ycbcr(white, white, white);
  CHECK(std::abs(ycc[0].pixels[0] - 235.0f) <= 0.5f);
  CHECK(ycc[1].pixels[0] == doctest::Approx(128.0f).epsilon(1e-4));
  CHECK(ycc[2].pixels[0] == doctest::Approx(128.0f).epsilon(1e-4));

  ImagePlane black(1, 1);
  ycc = rgb_to_ycbcr(black, black, black);
  CHECK(ycc[0].pixels[0] == 16.0f);
  CHECK(ycc[1].pixels[0] == 128.0f);
  CHECK(ycc[2].pixels[0] == 128.0f);
  CHECK(ycc[0].role == PlaneRole::Y);
}

TEST_CASE("YCbCr round trip on a random image") {
  const auto r = random_plane(17, 23, 1);
  const auto g = random_plane(17, 23, 2);
  const auto b = random_plane(17, 23, 3);
  const auto ycc = rgb_to_ycbcr(r, g, b);
  const auto rgb = ycbcr_to_rgb(ycc[0], ycc[1], ycc[2]);
  const float err = std::max({max_abs(rgb[0], r), max_abs(rgb[1], g), max_abs(rgb[2], b)});
  CHECK(err < 1.0f);
  CHECK(err < 1e-3f);
  // Through 8-bit storage the error stays within quantisation.
  const auto back = split_rgb(merge_rgb(rgb[0], rgb[1], rgb[2]));
  CHECK(max_abs(back[0], r) <= 0.51f);
}

TEST_CASE("bicubic: constant planes stay constant") {
  ImagePlane c(13, 9, PlaneRole::Y, 87.25f);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{26, 18}, {39, 27}, {52, 36}, {7, 5}, {4, 3}, {1, 1}}) {
    const auto out = bicubic_resize(c, h, w);
    REQUIRE(out.height == h);
    REQUIRE(out.width == w);
    for (float v : out.pixels) CHECK(std::abs(v - 87.25f) <= 1e-4f);
  }
  const auto roundtrip = bicubic_resize(bicubic_resize(ImagePlane(64, 64, PlaneRole::Y, 200.0f), 32, 32), 64, 64);
  for (float v : roundtrip.pixels) CHECK(std::abs(v - 200.0f) <= 1e-4f);
}

TEST_CASE("bicubic: identity size is exact") {
  const auto p = random_plane(11, 15, 4);
  CHECK(bicubic_resize(p, 11, 15).pixels == p.pixels);
}

TEST_CASE("bicubic: 2x upsample of a delta samples the kernel") {
  const std::size_t n = 16;
  ImagePlane delta(n, n);
  const std::size_t c = 8;
  delta.at(c, c) = 1.0f;
  const auto up = bicubic_resize(delta, 2 * n, 2 * n);
  double worst = 0;
  for (std::size_t y = 4; y < 2 * n - 4; ++y)
    for (std::size_t x = 4; x < 2 * n - 4; ++x) {
      const double sy = (static_cast<double>(y) + 0.5) / 2.0 - 0.5;
      const double sx = (static_cast<double>(x) + 0.5) / 2.0 - 0.5;
      // Direct evaluation of the Catmull-Rom kernel, written out here.
      auto k = [](double t) {
        t = std::abs(t);
        if (t <= 1) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
        if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
        return 0.0;
      };
      const double expected = k(sy - c) * k(sx - c);
      worst = std::max(worst, std::abs(expected - up.at(y, x)));
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("bicubic is linear in pixel values") {
  const auto a = random_plane(20, 14, 5);
  const auto b = random_plane(20, 14, 6);
  ImagePlane mix(20, 14);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.pixels[i] = 0.3f * a.pixels[i] - 1.7f * b.pixels[i];
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{40, 28}, {10, 7}, {31, 9}}) {
    const auto ra = bicubic_resize(a, h, w);
    const auto rb = bicubic_resize(b, h, w);
    const auto rm = bicubic_resize(mix, h, w);
    double worst = 0;
    for (std::size_t i = 0; i < rm.size(); ++i)
      worst = std::max(worst, std::abs(static_cast<double>(rm.pixels[i]) - (0.3 * ra.pixels[i] - 1.7 * rb.pixels[i])));
    // Relative to the 8-bit range the inputs live on.
    CHECK(worst / 255.0 < 1e-5);
  }
}

TEST_CASE("extract_patches: window counts") {
  CHECK(extract_patches(random_plane(128, 128, 1), 2).size() == 20);
  CHECK(extract_patches(random_plane(64, 64, 1), 2).size() == 5);
  CHECK(extract_patches(random_plane(63, 64, 1), 2).empty());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t h = 60 + seed * 23;
    const std::size_t w = 200 - seed * 11;
    for (std::size_t r : {2u, 3u, 4u}) {
      const auto patches = extract_patches(random_plane(h, w, seed), r);
      CHECK(patches.size() == windows_per_axis(h, 32 * r, 64) * windows_per_axis(w, 32 * r, 64) * 5);
      for (const auto& p : patches) {
        CHECK(p.lr.height == 32);
        CHECK(p.hr.height == 32 * r);
        CHECK(p.hr.width == 32 * r);
      }
    }
  }
}

TEST_CASE("extract_patches never reads outside the windows") {
  // Windows cover rows/cols [0, 128); everything beyond is poisoned.
  ImagePlane p = random_plane(150, 170, 7);
  for (std::size_t y = 0; y < p.height; ++y)
    for (std::size_t x = 0; x < p.width; ++x)
      if (y >= 128 || x >= 128) p.at(y, x) = std::numeric_limits<float>::quiet_NaN();
  // 170 wide admits a third window at x=128 only if 128+64 <= 170, which it does not.
  const auto patches = extract_patches(p, 2);
  CHECK(patches.size() == 20);
  for (const auto& pp : patches) {
    for (float v : pp.hr.pixels) CHECK(std::isfinite(v));
    for (float v : pp.lr.pixels) CHECK(std::isfinite(v));
  }
}

TEST_CASE("augmentations are invertible and distinct") {
  const auto patches = extract_patches(random_plane(64, 64, 8), 2);
  REQUIRE(patches.size() == 5);
  const ImagePlane& base = patches[0].hr;
  std::set<std::vector<float>> distinct;
  for (const auto& p : patches) {
    CHECK(invert_augmentation(p.hr, p.augmentation).pixels == base.pixels);
    distinct.insert(p.hr.pixels);
  }
  CHECK(distinct.size() == 5);
  const auto rect = random_plane(3, 5, 9);
  for (std::size_t a = 0; a < 5; ++a) {
    const auto aug = static_cast<Augmentation>(a);
    CHECK(invert_augmentation(augment(rect, aug), aug).pixels == rect.pixels);
  }
  // Counter-clockwise: the top-right pixel becomes the top-left one.
  CHECK(augment(rect, Augmentation::Rotate90).at(0, 0) == rect.at(0, 4));
}

TEST_CASE("image I/O") {
  const fs::path dir = scratch_dir("io");
  Image8 rgb{4, 5, 3, {}};
  for (std::size_t i = 0; i < 60; ++i) rgb.data.push_back(static_cast<std::uint8_t>(i * 4));
  write_png(dir / "a.png", rgb);
  const auto back = read_image(dir / "a.png");
  CHECK(back.channels == 3);
  CHECK(back.data == rgb.data);

  {
    std::ofstream f(dir / "b.pgm", std::ios::binary);
    f << "P5\n# comment\n3 2\n255\n";
    const unsigned char px[6] = {0, 10, 20, 30, 40, 255};
    f.write(reinterpret_cast<const char*>(px), 6);
  }
  const auto gray = read_image(dir / "b.pgm");
  CHECK(gray.channels == 1);
  CHECK(gray.width == 3);
  CHECK(gray.data == std::vector<std::uint8_t>{0, 10, 20, 30, 40, 255});
  {
    std::ofstream f(dir / "c.ppm");
    f << "P3 1 1 15\n15 0 5\n";
  }
  CHECK(read_image(dir / "c.ppm").data == std::vector<std::uint8_t>{255, 0, 85});

  CHECK(list_images(dir).size() == 3);
  CHECK_THROWS_AS((void)read_image(dir / "missing.png"), IoError);
  {
    std::ofstream f(dir / "bad.png");
    f << "not a png";
  }
  CHECK_THROWS_AS((void)read_image(dir / "bad.png"), IoError);
}

TEST_CASE("fixture dataset and batching") {
  const auto ds = PatchDataset::from_directory(fs::path(SRCN_FIXTURE_DIR) / "train", 2);
  CHECK(ds.size() == 8 * 20);
  const auto o1 = ds.epoch_order(7, 3);
  CHECK(o1 == ds.epoch_order(7, 3));
  CHECK(o1 != ds.epoch_order(7, 4));
  CHECK(std::set<std::size_t>(o1.begin(), o1.end()).size() == ds.size());

  const std::vector<std::size_t> idx{o1[0], o1[1], o1[2]};
  auto [lr, hr] = ds.batch<float>(idx);
  CHECK(lr.shape() == Shape{3, 1, 32, 32});
  CHECK(hr.shape() == Shape{3, 1, 64, 64});
  for (float v : hr.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

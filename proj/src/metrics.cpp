#include "srcondense/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "srcondense/errors.hpp"

namespace srcn {

namespace {

void require_same_size(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

constexpr std::size_t kWindow = 11;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

/// Valid-region separable filtering of a row-major h x w buffer.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& g) {
  const std::size_t oh = h - kWindow + 1;
  const std::size_t ow = w - kWindow + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * src[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

ImagePlane shave_border(const ImagePlane& p, std::size_t px) {
  if (2 * px >= p.height || 2 * px >= p.width) {
    throw ContractError("shave of " + std::to_string(px) + " px leaves nothing of a " + std::to_string(p.height) +
                        "x" + std::to_string(p.width) + " plane");
  }
  return crop(p, px, px, p.height - 2 * px, p.width - 2 * px);
}

double psnr(const ImagePlane& a, const ImagePlane& b, std::size_t shave) {
  require_same_size(a, b, "psnr");
  if (2 * shave >= a.height || 2 * shave >= a.width) {
    throw ContractError("psnr: shave " + std::to_string(shave) + " too large for " + std::to_string(a.height) + "x" +
                        std::to_string(a.width));
  }
  double sq = 0;
  for (std::size_t y = shave; y < a.height - shave; ++y)
    for (std::size_t x = shave; x < a.width - shave; ++x) {
      const double d = static_cast<double>(a.at(y, x)) - static_cast<double>(b.at(y, x));
      sq += d * d;
    }
  const double n = static_cast<double>((a.height - 2 * shave) * (a.width - 2 * shave));
  const double mse = sq / n;
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const ImagePlane& a, const ImagePlane& b) {
  require_same_size(a, b, "ssim");
  if (a.height < kWindow || a.width < kWindow) {
    throw DimensionError("ssim: planes must be at least 11x11, got " + std::to_string(a.height) + "x" +
                         std::to_string(a.width));
  }
  const std::size_t h = a.height;
  const std::size_t w = a.width;
  std::vector<double> x(h * w), y(h * w), xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    x[i] = a.pixels[i];
    y[i] = b.pixels[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window();
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g);
  const auto syy = filter_valid(yy, h, w, g);
  const auto sxy = filter_valid(xy, h, w, g);
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double total = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace srcn

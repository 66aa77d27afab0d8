#include "srcondense/image.hpp"

#include <png.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>

#include "srcondense/errors.hpp"

namespace srcn {
namespace {

Image8 read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image8 out;
  out.height = img.height;
  out.width = img.width;
  out.channels = color ? 3 : 1;
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

/// Next whitespace-delimited token of a PNM header, skipping # comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Image8 read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw IoError("unsupported PNM variant '" + magic + "' in " + path.string());
  }
  Image8 out;
  try {
    out.width = std::stoul(pnm_token(in));
    out.height = std::stoul(pnm_token(in));
    const unsigned long maxval = std::stoul(pnm_token(in));
    if (maxval == 0 || maxval > 255) throw IoError("only 8-bit PNM is supported: " + path.string());
    out.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
    out.data.resize(out.height * out.width * out.channels);
    if (magic == "P5" || magic == "P6") {
      in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(out.data.size()));
      if (static_cast<std::size_t>(in.gcount()) != out.data.size()) throw IoError("truncated PNM " + path.string());
    } else {
      for (auto& v : out.data) v = static_cast<std::uint8_t>(std::stoul(pnm_token(in)));
    }
    if (maxval != 255) {
      for (auto& v : out.data) v = static_cast<std::uint8_t>(std::lround(v * 255.0 / static_cast<double>(maxval)));
    }
  } catch (const std::logic_error&) {
    throw IoError("malformed PNM header in " + path.string());
  }
  return out;
}

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

constexpr double kForward[3][3] = {
    {65.481, 128.553, 24.966},
    {-37.797, -74.203, 112.0},
    {112.0, -93.786, -18.214},
};
constexpr double kOffset[3] = {16.0, 128.0, 128.0};

const Eigen::Matrix3d& inverse_matrix() {
  static const Eigen::Matrix3d inv = [] {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = kForward[i][j] / 255.0;
    return Eigen::Matrix3d(m.inverse());
  }();
  return inv;
}

void require_same_size(const ImagePlane& a, const ImagePlane& b, const ImagePlane& c) {
  if (a.height != b.height || a.height != c.height || a.width != b.width || a.width != c.width) {
    throw std::invalid_argument("colour planes differ in size");
  }
}

/// Taps of one output sample along one axis.
struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

std::vector<Taps> resample_taps(std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / stretch;
  std::vector<Taps> taps(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double centre = (static_cast<double>(o) + 0.5) / scale - 0.5;
    const auto lo = static_cast<long>(std::floor(centre - support)) + 1;
    const auto hi = static_cast<long>(std::floor(centre + support));
    double total = 0.0;
    Taps& t = taps[o];
    for (long i = lo; i <= hi; ++i) {
      const double wgt = stretch * cubic_kernel(stretch * (centre - static_cast<double>(i)));
      if (wgt == 0.0) continue;
      t.index.push_back(static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(in) - 1)));
      t.weight.push_back(wgt);
      total += wgt;
    }
    for (double& wgt : t.weight) wgt /= total;
  }
  return taps;
}

}  // namespace

Image8 read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("no such image: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw IoError("write_png: need 1 or 3 channels");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_extension(entry.path());
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::array<ImagePlane, 3> rgb_to_ycbcr(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b) {
  require_same_size(r, g, b);
  std::array<ImagePlane, 3> out{ImagePlane(r.height, r.width, PlaneRole::Y),
                                ImagePlane(r.height, r.width, PlaneRole::Cb),
                                ImagePlane(r.height, r.width, PlaneRole::Cr)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double rgb[3] = {r.pixels[i], g.pixels[i], b.pixels[i]};
    for (int k = 0; k < 3; ++k) {
      const double v = kOffset[k] + (kForward[k][0] * rgb[0] + kForward[k][1] * rgb[1] + kForward[k][2] * rgb[2]) / 255.0;
      out[static_cast<std::size_t>(k)].pixels[i] = static_cast<float>(v);
    }
  }
  return out;
}

std::array<ImagePlane, 3> ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr) {
  require_same_size(y, cb, cr);
  const Eigen::Matrix3d& inv = inverse_matrix();
  std::array<ImagePlane, 3> out{ImagePlane(y.height, y.width), ImagePlane(y.height, y.width),
                                ImagePlane(y.height, y.width)};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Eigen::Vector3d v(y.pixels[i] - kOffset[0], cb.pixels[i] - kOffset[1], cr.pixels[i] - kOffset[2]);
    const Eigen::Vector3d rgb = inv * v;
    for (int k = 0; k < 3; ++k) out[static_cast<std::size_t>(k)].pixels[i] = static_cast<float>(rgb(k));
  }
  return out;
}

std::array<ImagePlane, 3> split_rgb(const Image8& image) {
  if (image.channels != 3) throw std::invalid_argument("split_rgb: image is not RGB");
  std::array<ImagePlane, 3> out{ImagePlane(image.height, image.width), ImagePlane(image.height, image.width),
                                ImagePlane(image.height, image.width)};
  for (std::size_t i = 0; i < image.height * image.width; ++i)
    for (std::size_t k = 0; k < 3; ++k) out[k].pixels[i] = image.data[i * 3 + k];
  return out;
}

namespace {
std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f))); }
}  // namespace

Image8 merge_rgb(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b) {
  require_same_size(r, g, b);
  Image8 out{r.height, r.width, 3, std::vector<std::uint8_t>(r.size() * 3)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.data[i * 3 + 0] = to_byte(r.pixels[i]);
    out.data[i * 3 + 1] = to_byte(g.pixels[i]);
    out.data[i * 3 + 2] = to_byte(b.pixels[i]);
  }
  return out;
}

Image8 to_gray8(const ImagePlane& plane) {
  Image8 out{plane.height, plane.width, 1, std::vector<std::uint8_t>(plane.size())};
  for (std::size_t i = 0; i < plane.size(); ++i) out.data[i] = to_byte(plane.pixels[i]);
  return out;
}

ImagePlane luma(const Image8& image) {
  if (image.channels == 1) {
    ImagePlane p(image.height, image.width, PlaneRole::Y);
    for (std::size_t i = 0; i < p.size(); ++i) p.pixels[i] = image.data[i];
    return p;
  }
  const auto rgb = split_rgb(image);
  return rgb_to_ycbcr(rgb[0], rgb[1], rgb[2])[0];
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

template <typename T>
void bicubic_resize(std::span<const T> src, std::size_t h, std::size_t w, std::span<T> dst, std::size_t out_h,
                    std::size_t out_w) {
  if (h == 0 || w == 0 || out_h == 0 || out_w == 0) throw std::invalid_argument("bicubic_resize: empty extent");
  if (src.size() != h * w || dst.size() != out_h * out_w) throw std::invalid_argument("bicubic_resize: buffer size");
  const auto cols = resample_taps(w, out_w);
  const auto rows = resample_taps(h, out_h);
  std::vector<double> tmp(h * out_w);
  for (std::size_t y = 0; y < h; ++y) {
    const T* line = src.data() + y * w;
    for (std::size_t x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < cols[x].index.size(); ++k) acc += cols[x].weight[k] * static_cast<double>(line[cols[x].index[k]]);
      tmp[y * out_w + x] = acc;
    }
  }
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rows[y].index.size(); ++k) acc += rows[y].weight[k] * tmp[rows[y].index[k] * out_w + x];
      dst[y * out_w + x] = static_cast<T>(acc);
    }
  }
}

template void bicubic_resize<float>(std::span<const float>, std::size_t, std::size_t, std::span<float>, std::size_t,
                                    std::size_t);
template void bicubic_resize<double>(std::span<const double>, std::size_t, std::size_t, std::span<double>,
                                     std::size_t, std::size_t);

ImagePlane bicubic_resize(const ImagePlane& plane, std::size_t out_h, std::size_t out_w) {
  ImagePlane out(out_h, out_w, plane.role);
  bicubic_resize<float>(plane.pixels, plane.height, plane.width, out.pixels, out_h, out_w);
  return out;
}

ImagePlane crop(const ImagePlane& plane, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  if (top + h > plane.height || left + w > plane.width) throw std::out_of_range("crop outside image");
  ImagePlane out(h, w, plane.role);
  for (std::size_t y = 0; y < h; ++y)
    std::copy_n(plane.pixels.begin() + static_cast<std::ptrdiff_t>((top + y) * plane.width + left), w,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y * w));
  return out;
}

ImagePlane crop_to_multiple(const ImagePlane& plane, std::size_t scale) {
  return crop(plane, 0, 0, plane.height - plane.height % scale, plane.width - plane.width % scale);
}

ImagePlane clamp_pixels(ImagePlane plane) {
  for (float& v : plane.pixels) v = std::clamp(v, 0.0f, 255.0f);
  return plane;
}

}  // namespace srcn

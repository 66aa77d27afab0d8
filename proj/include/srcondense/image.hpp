#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace srcn {

enum class PlaneRole { Gray, Y, Cb, Cr };

/// Single-channel floating point image on the 8-bit scale [0, 255].
struct ImagePlane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
  PlaneRole role = PlaneRole::Gray;

  ImagePlane() = default;
  ImagePlane(std::size_t h, std::size_t w, PlaneRole r = PlaneRole::Gray, float fill = 0.0f)
      : height(h), width(w), pixels(h * w, fill), role(r) {}

  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  [[nodiscard]] float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  [[nodiscard]] std::size_t size() const { return pixels.size(); }
};

/// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct Image8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> data;
};

/// Reads PNG (any bit depth/color type, alpha dropped) or binary/ASCII
/// PGM/PPM. Throws IoError.
[[nodiscard]] Image8 read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// Image files (png, pgm, ppm, pnm) directly inside `dir`, sorted by name.
[[nodiscard]] std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Studio-swing ITU-R BT.601 conversion on the [0, 255] scale; Y spans
/// [16, 235] and chroma [16, 240]. The inverse is the exact matrix inverse.
[[nodiscard]] std::array<ImagePlane, 3> rgb_to_ycbcr(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b);
[[nodiscard]] std::array<ImagePlane, 3> ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr);

[[nodiscard]] std::array<ImagePlane, 3> split_rgb(const Image8& image);
/// Clamps to [0, 255] and rounds.
[[nodiscard]] Image8 merge_rgb(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b);
[[nodiscard]] Image8 to_gray8(const ImagePlane& plane);

/// Luma plane: Y of YCbCr for colour input; grayscale input is used as-is.
[[nodiscard]] ImagePlane luma(const Image8& image);

/// Separable cubic-convolution resampling (a = -0.5) with half-pixel
/// centres and edge replication. When shrinking, the kernel is stretched by
/// the inverse scale so it also acts as the anti-aliasing filter.
[[nodiscard]] ImagePlane bicubic_resize(const ImagePlane& plane, std::size_t out_h, std::size_t out_w);

/// Raw-buffer form of bicubic_resize, shared with the model's residual path.
template <typename T>
void bicubic_resize(std::span<const T> src, std::size_t h, std::size_t w, std::span<T> dst, std::size_t out_h,
                    std::size_t out_w);

/// Catmull-Rom cubic convolution kernel.
[[nodiscard]] double cubic_kernel(double x);

[[nodiscard]] ImagePlane crop(const ImagePlane& plane, std::size_t top, std::size_t left, std::size_t h,
                              std::size_t w);
/// Crops the bottom/right edge so both dimensions are multiples of `scale`.
[[nodiscard]] ImagePlane crop_to_multiple(const ImagePlane& plane, std::size_t scale);
[[nodiscard]] ImagePlane clamp_pixels(ImagePlane plane);

}  // namespace srcn

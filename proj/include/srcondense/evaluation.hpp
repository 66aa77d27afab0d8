#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srcondense/image.hpp"
#include "srcondense/model.hpp"

namespace srcn {

/// One evaluation image as Y planes on [0, 255].
struct EvalSample {
  std::string name;
  ImagePlane lr;
  ImagePlane hr;
};

/// Either a paired layout (`dir/HR` and `dir/LR` with matching file names)
/// or a flat directory of HR images, downscaled on the fly after cropping
/// to a multiple of `scale`.
[[nodiscard]] std::vector<EvalSample> load_eval_set(const std::filesystem::path& dir, std::size_t scale);

/// Bicubic upsample through the same path the model's residual base uses,
/// so a zero network of the same precision reproduces it exactly.
template <typename T = float>
[[nodiscard]] ImagePlane bicubic_upscale(const ImagePlane& lr, std::size_t scale);

/// Model output for one Y plane, clamped to [0, 255].
template <typename T>
[[nodiscard]] ImagePlane super_resolve(const Model<T>& model, const ImagePlane& lr);

struct ImageScore {
  std::string name;
  double psnr = 0, ssim = 0;
  double bicubic_psnr = 0, bicubic_ssim = 0;
};

struct EvalSummary {
  std::vector<ImageScore> images;
  double mean_psnr = 0, mean_ssim = 0;
  double mean_bicubic_psnr = 0, mean_bicubic_ssim = 0;
};

/// PSNR and SSIM of model and bicubic outputs on the region left after
/// shaving `shave` pixels. Images are processed by up to `jobs` threads;
/// results keep the input order.
template <typename T>
[[nodiscard]] EvalSummary evaluate(const Model<T>& model, std::span<const EvalSample> samples, std::size_t shave,
                                   std::size_t jobs = 1);

}  // namespace srcn

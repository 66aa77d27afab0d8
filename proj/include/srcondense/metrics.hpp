#pragma once

#include <cstddef>

#include "srcondense/image.hpp"

namespace srcn {

/// 10*log10(255^2 / MSE) over the region left after removing `shave` pixels
/// from every border. Identical regions give +infinity.
[[nodiscard]] double psnr(const ImagePlane& a, const ImagePlane& b, std::size_t shave = 0);

/// Mean SSIM over all fully contained 11x11 windows, Gaussian weights with
/// sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255. Both planes must be at least
/// 11x11.
[[nodiscard]] double ssim(const ImagePlane& a, const ImagePlane& b);

/// Plane without a `px`-wide border.
[[nodiscard]] ImagePlane shave_border(const ImagePlane& p, std::size_t px);

}  // namespace srcn

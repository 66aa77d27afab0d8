#include "srcondense/patches.hpp"

#include <numeric>
#include <random>

#include "srcondense/errors.hpp"

namespace srcn {

ImagePlane augment(const ImagePlane& p, Augmentation aug) {
  const std::size_t h = p.height;
  const std::size_t w = p.width;
  switch (aug) {
    case Augmentation::Identity:
      return p;
    case Augmentation::FlipHorizontal: {
      ImagePlane out(h, w, p.role);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(y, x) = p.at(y, w - 1 - x);
      return out;
    }
    case Augmentation::Rotate90: {
      ImagePlane out(w, h, p.role);
      for (std::size_t y = 0; y < w; ++y)
        for (std::size_t x = 0; x < h; ++x) out.at(y, x) = p.at(x, w - 1 - y);
      return out;
    }
    case Augmentation::Rotate180: {
      ImagePlane out(h, w, p.role);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(y, x) = p.at(h - 1 - y, w - 1 - x);
      return out;
    }
    case Augmentation::Rotate270: {
      ImagePlane out(w, h, p.role);
      for (std::size_t y = 0; y < w; ++y)
        for (std::size_t x = 0; x < h; ++x) out.at(y, x) = p.at(h - 1 - x, y);
      return out;
    }
  }
  throw std::invalid_argument("augment: unknown augmentation");
}

ImagePlane invert_augmentation(const ImagePlane& plane, Augmentation aug) {
  switch (aug) {
    case Augmentation::Rotate90:
      return augment(plane, Augmentation::Rotate270);
    case Augmentation::Rotate270:
      return augment(plane, Augmentation::Rotate90);
    default:
      return augment(plane, aug);  // self-inverse
  }
}

std::size_t windows_per_axis(std::size_t extent, std::size_t window, std::size_t stride) {
  if (extent < window) return 0;
  return (extent - window) / stride + 1;
}

std::vector<PatchPair> extract_patches(const ImagePlane& hr, std::size_t scale, std::size_t lr_size,
                                       std::size_t stride) {
  if (scale == 0 || lr_size == 0 || stride == 0) throw ConfigError("extract_patches: zero scale, size or stride");
  const std::size_t window = lr_size * scale;
  const std::size_t ny = windows_per_axis(hr.height, window, stride);
  const std::size_t nx = windows_per_axis(hr.width, window, stride);
  std::vector<PatchPair> out;
  out.reserve(ny * nx * kAugmentationCount);
  for (std::size_t wy = 0; wy < ny; ++wy) {
    for (std::size_t wx = 0; wx < nx; ++wx) {
      const ImagePlane base = crop(hr, wy * stride, wx * stride, window, window);
      for (std::size_t a = 0; a < kAugmentationCount; ++a) {
        const auto aug = static_cast<Augmentation>(a);
        PatchPair pair;
        pair.hr = augment(base, aug);
        pair.lr = bicubic_resize(pair.hr, lr_size, lr_size);
        pair.augmentation = aug;
        out.push_back(std::move(pair));
      }
    }
  }
  return out;
}

PatchDataset PatchDataset::from_directory(const std::filesystem::path& dir, std::size_t scale) {
  std::vector<PatchPair> all;
  for (const auto& file : list_images(dir)) {
    auto patches = extract_patches(luma(read_image(file)), scale);
    std::move(patches.begin(), patches.end(), std::back_inserter(all));
  }
  return PatchDataset(std::move(all));
}

std::vector<std::size_t> PatchDataset::epoch_order(std::uint64_t seed, std::size_t epoch) const {
  std::vector<std::size_t> order(patches_.size());
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with explicit modulo so the order does not depend on the
  // standard library's distribution implementation.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

template <typename T>
Tensor<T> plane_to_tensor(const ImagePlane& plane) {
  Tensor<T> t({1, 1, plane.height, plane.width});
  for (std::size_t i = 0; i < plane.size(); ++i) t[i] = static_cast<T>(plane.pixels[i] / 255.0f);
  return t;
}

template <typename T>
ImagePlane tensor_to_plane(const Tensor<T>& t, std::size_t n, PlaneRole role) {
  ImagePlane p(t.shape().h, t.shape().w, role);
  const T* src = t.plane(n, 0);
  for (std::size_t i = 0; i < p.size(); ++i) p.pixels[i] = static_cast<float>(src[i] * T(255));
  return p;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> PatchDataset::batch(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("PatchDataset::batch: empty batch");
  const PatchPair& first = patches_.at(indices[0]);
  Tensor<T> lr({indices.size(), 1, first.lr.height, first.lr.width});
  Tensor<T> hr({indices.size(), 1, first.hr.height, first.hr.width});
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const PatchPair& p = patches_.at(indices[n]);
    if (p.lr.size() != lr.shape().plane() || p.hr.size() != hr.shape().plane()) {
      throw DimensionError("PatchDataset::batch: patches of different sizes in one batch");
    }
    for (std::size_t i = 0; i < p.lr.size(); ++i) lr.plane(n, 0)[i] = static_cast<T>(p.lr.pixels[i] / 255.0f);
    for (std::size_t i = 0; i < p.hr.size(); ++i) hr.plane(n, 0)[i] = static_cast<T>(p.hr.pixels[i] / 255.0f);
  }
  return {std::move(lr), std::move(hr)};
}

template Tensor<float> plane_to_tensor<float>(const ImagePlane&);
template Tensor<double> plane_to_tensor<double>(const ImagePlane&);
template ImagePlane tensor_to_plane<float>(const Tensor<float>&, std::size_t, PlaneRole);
template ImagePlane tensor_to_plane<double>(const Tensor<double>&, std::size_t, PlaneRole);
template std::pair<Tensor<float>, Tensor<float>> PatchDataset::batch<float>(std::span<const std::size_t>) const;
template std::pair<Tensor<double>, Tensor<double>> PatchDataset::batch<double>(std::span<const std::size_t>) const;

}  // namespace srcn

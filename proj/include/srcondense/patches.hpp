#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "srcondense/image.hpp"
#include "srcondense/tensor.hpp"

namespace srcn {

/// The five variants produced per base patch.
enum class Augmentation : std::uint8_t { Identity = 0, FlipHorizontal = 1, Rotate90 = 2, Rotate180 = 3, Rotate270 = 4 };

inline constexpr std::size_t kAugmentationCount = 5;
inline constexpr std::size_t kLrPatchSize = 32;
inline constexpr std::size_t kHrPatchStride = 64;

/// Rotations are counter-clockwise.
[[nodiscard]] ImagePlane augment(const ImagePlane& plane, Augmentation aug);
[[nodiscard]] ImagePlane invert_augmentation(const ImagePlane& plane, Augmentation aug);

struct PatchPair {
  ImagePlane lr;
  ImagePlane hr;
  Augmentation augmentation = Augmentation::Identity;
};

/// HR windows of (lr_size*scale)^2 at `stride` (HR pixels), each expanded to
/// five augmented variants; LR is the bicubic downscale of the augmented HR
/// window. Images smaller than one window yield no patches.
[[nodiscard]] std::vector<PatchPair> extract_patches(const ImagePlane& hr, std::size_t scale,
                                                     std::size_t lr_size = kLrPatchSize,
                                                     std::size_t stride = kHrPatchStride);

[[nodiscard]] std::size_t windows_per_axis(std::size_t extent, std::size_t window, std::size_t stride);

/// In-memory training set of Y-channel patch pairs.
class PatchDataset {
 public:
  PatchDataset() = default;
  explicit PatchDataset(std::vector<PatchPair> patches) : patches_(std::move(patches)) {}

  /// Luma of every image in `dir` (sorted by file name), cut into patches.
  static PatchDataset from_directory(const std::filesystem::path& dir, std::size_t scale);

  [[nodiscard]] std::size_t size() const { return patches_.size(); }
  [[nodiscard]] bool empty() const { return patches_.empty(); }
  [[nodiscard]] const PatchPair& operator[](std::size_t i) const { return patches_[i]; }
  [[nodiscard]] const std::vector<PatchPair>& patches() const { return patches_; }

  /// Deterministic permutation for an epoch; depends only on (seed, epoch).
  [[nodiscard]] std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch) const;

  /// Stacks the selected patches into (N,1,h,w) tensors scaled to [0, 1].
  template <typename T>
  [[nodiscard]] std::pair<Tensor<T>, Tensor<T>> batch(std::span<const std::size_t> indices) const;

 private:
  std::vector<PatchPair> patches_;
};

/// Plane on [0,255] as a (1,1,h,w) tensor on [0,1], and back.
template <typename T>
[[nodiscard]] Tensor<T> plane_to_tensor(const ImagePlane& plane);
template <typename T>
[[nodiscard]] ImagePlane tensor_to_plane(const Tensor<T>& t, std::size_t n = 0, PlaneRole role = PlaneRole::Y);

}  // namespace srcn

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srcondense/lgc.hpp"
#include "srcondense/ops.hpp"

namespace srcn {

/// Kernel/stride/padding of one deconvolution in the upsampling stack.
struct DeconvStage {
  std::size_t kernel;
  std::size_t stride;
  std::size_t padding;
};

/// Architecture hyperparameters. Defaults are the full network: 4 blocks of
/// 7 denselayers with growth 20, G = C = 4, a 128-map bottleneck and
/// 128-map deconvolutions.
struct ModelConfig {
  std::size_t scale = 2;
  std::size_t num_blocks = 4;
  std::size_t layers_per_block = 7;
  std::size_t growth = 20;
  std::size_t groups = 4;
  std::size_t condense_factor = 4;
  std::size_t stem_channels = 16;
  std::size_t bottleneck_channels = 128;
  std::size_t deconv_channels = 128;
  std::size_t lgc_expansion = 4;
  double leaky_slope = 0.1;

  /// Throws ConfigError on an unsupported scale or inconsistent widths.
  void validate() const;

  [[nodiscard]] std::size_t total_layers() const { return num_blocks * layers_per_block; }
  /// Channels entering denselayer `layer` of block `block`.
  [[nodiscard]] std::size_t channels_entering(std::size_t block, std::size_t layer) const {
    return stem_channels + (block * layers_per_block + layer) * growth;
  }
  /// Channels leaving the last block (bottleneck input).
  [[nodiscard]] std::size_t feature_channels() const { return stem_channels + total_layers() * growth; }
  [[nodiscard]] std::size_t lgc_channels() const { return lgc_expansion * growth; }
  [[nodiscard]] std::vector<DeconvStage> deconv_stages() const;

  /// One block of two denselayers with narrow reconstruction widths; used by
  /// the test fixtures and the `--toy` preset.
  static ModelConfig toy();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Plain (possibly grouped or transposed) convolution with its parameters.
template <typename T>
struct ConvLayer {
  Var<T> weight;
  Var<T> bias;
  ConvSpec spec;
  bool transposed = false;

  [[nodiscard]] Var<T> forward(const Var<T>& x) const {
    return transposed ? conv_transpose2d(x, weight, bias, spec) : conv2d(x, weight, bias, spec);
  }
};

/// LGC(1x1) -> LeakyReLU -> grouped 3x3 conv -> LeakyReLU; no normalisation.
template <typename T>
struct DenseLayer {
  CondensingConv<T> lgc;
  std::optional<ConvertedLGC<T>> converted;
  ConvLayer<T> gconv;

  /// The `growth` new channels (before concatenation).
  [[nodiscard]] Var<T> forward(const Var<T>& x, T slope) const;
};

template <typename T>
struct NamedParameter {
  std::string name;
  Var<T> var;
  /// Connection mask of the owning LGC layer (O*I entries, 1x1 kernel), or
  /// nullptr for unmasked parameters.
  const std::vector<std::uint8_t>* mask = nullptr;
};

/// SRCondenseNet: stem 3x3 conv -> dense blocks -> 1x1 bottleneck ->
/// deconvolution stack -> 3x3 reconstruction conv, plus the bicubic
/// upsampled input added to the output.
///
/// Parameters are shared-handle Vars, so a Model is move-only; use clone()
/// for an independent copy.
template <typename T>
class Model {
 public:
  /// Deterministic Kaiming-style init (fan-in, LeakyReLU gain where an
  /// activation follows, linear gain otherwise); zero biases.
  static Model build(const ModelConfig& config, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  [[nodiscard]] Model clone() const;

  /// (N,1,h,w) on [0,1] -> (N,1,r*h,r*w).
  [[nodiscard]] Var<T> forward(const Var<T>& lr) const;
  /// Same, with an explicitly supplied upsampled base instead of the
  /// bicubic one.
  [[nodiscard]] Var<T> forward(const Var<T>& lr, const Tensor<T>& base) const;
  /// Network branch only (no residual).
  [[nodiscard]] Var<T> residual(const Var<T>& lr) const;

  [[nodiscard]] static Tensor<T> bicubic_upsample(const Tensor<T>& lr, std::size_t scale);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] bool frozen() const { return frozen_; }

  [[nodiscard]] std::vector<NamedParameter<T>> named_parameters() const;
  [[nodiscard]] std::vector<CondensingConv<T>*> lgc_layers();
  [[nodiscard]] std::vector<const CondensingConv<T>*> lgc_layers() const;
  [[nodiscard]] const std::vector<std::vector<DenseLayer<T>>>& blocks() const { return blocks_; }
  [[nodiscard]] const ConvLayer<T>& stem() const { return stem_; }
  [[nodiscard]] const ConvLayer<T>& bottleneck() const { return bottleneck_; }
  [[nodiscard]] const std::vector<ConvLayer<T>>& deconvs() const { return deconvs_; }
  [[nodiscard]] const ConvLayer<T>& reconstruction() const { return reconstruct_; }

  void condense_all();
  /// Sum of every LGC layer's group-lasso penalty.
  [[nodiscard]] Var<T> group_lasso() const;
  void zero_parameters();

  /// Stored parameter values.
  [[nodiscard]] std::size_t count_params() const;
  /// Stored values minus masked LGC entries.
  [[nodiscard]] std::size_t count_active_params() const;

  /// Copy whose LGC layers run as index-select + grouped conv. Requires every
  /// LGC layer at its final stage (ContractError otherwise).
  [[nodiscard]] Model freeze_for_inference() const;

 private:
  Model() = default;

  ModelConfig config_;
  ConvLayer<T> stem_;
  std::vector<std::vector<DenseLayer<T>>> blocks_;
  ConvLayer<T> bottleneck_;
  std::vector<ConvLayer<T>> deconvs_;
  ConvLayer<T> reconstruct_;
  bool frozen_ = false;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace srcn

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "srcondense/ops.hpp"

namespace srcn {

template <typename T>
struct ConvertedLGC;

/// Learned group convolution: a 1x1 convolution whose input connections are
/// pruned per filter group over C-1 condensing stages.
///
/// Filter group g owns output channels [g*O/G, (g+1)*O/G). Within a group an
/// input column is either kept for every filter or masked for every filter.
/// Each condense() call drops floor(I/C) of the remaining columns per group,
/// choosing those with the smallest L1 norm over the group's filters (ties
/// drop the lower channel index first). Masked weights are held at exactly
/// zero and receive zero gradient.
template <typename T>
class CondensingConv {
 public:
  CondensingConv(std::size_t in_channels, std::size_t out_channels, std::size_t groups,
                 std::size_t condense_factor, bool with_bias = false);

  [[nodiscard]] Var<T> forward(const Var<T>& input) const;

  /// Runs one condensing stage. Throws ContractError once stage() == C-1.
  void condense();

  /// Sum over groups and unmasked columns of the column's L2 norm within
  /// the group. Differentiable; the gradient of a zero-norm column is 0.
  [[nodiscard]] Var<T> group_lasso_penalty() const;

  /// Index-select + grouped 1x1 convolution equivalent to forward(). Only
  /// valid at the final stage.
  [[nodiscard]] ConvertedLGC<T> convert() const;

  [[nodiscard]] std::size_t in_channels() const { return in_; }
  [[nodiscard]] std::size_t out_channels() const { return out_; }
  [[nodiscard]] std::size_t groups() const { return groups_; }
  [[nodiscard]] std::size_t condense_factor() const { return factor_; }
  [[nodiscard]] std::size_t stage() const { return stage_; }
  [[nodiscard]] std::size_t final_stage() const { return factor_ - 1; }
  [[nodiscard]] std::size_t drop_per_stage() const { return in_ / factor_; }
  [[nodiscard]] std::size_t filters_per_group() const { return out_ / groups_; }

  /// Row-major (O, I) binary mask.
  [[nodiscard]] const std::vector<std::uint8_t>& mask() const { return mask_; }
  [[nodiscard]] std::vector<std::size_t> kept_columns(std::size_t group) const;
  /// Columns each group keeps after `stage` condensing stages.
  [[nodiscard]] std::size_t columns_after(std::size_t stage) const { return in_ - stage * drop_per_stage(); }
  [[nodiscard]] std::size_t active_connections() const;

  Var<T>& weight() { return weight_; }
  [[nodiscard]] const Var<T>& weight() const { return weight_; }
  Var<T>& bias() { return bias_; }
  [[nodiscard]] const Var<T>& bias() const { return bias_; }

  /// Restores mask and stage (checkpoint loading). Validates the mask's
  /// per-group column structure and re-zeroes masked weights.
  void restore(std::vector<std::uint8_t> mask, std::size_t stage);

 private:
  void zero_masked_weights();

  std::size_t in_, out_, groups_, factor_;
  std::size_t stage_ = 0;
  Var<T> weight_;
  Var<T> bias_;
  std::vector<std::uint8_t> mask_;
};

/// Inference form of a fully condensed layer.
template <typename T>
struct ConvertedLGC {
  /// Selected input channels, group by group (may repeat across groups).
  std::vector<std::size_t> index;
  /// (O, kept, 1, 1) weights for a grouped conv with `groups` groups.
  Var<T> weight;
  Var<T> bias;
  std::size_t groups = 1;

  [[nodiscard]] Var<T> forward(const Var<T>& input) const;
};

extern template class CondensingConv<float>;
extern template class CondensingConv<double>;
extern template struct ConvertedLGC<float>;
extern template struct ConvertedLGC<double>;

}  // namespace srcn

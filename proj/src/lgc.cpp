#include "srcondense/lgc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace srcn {

template <typename T>
CondensingConv<T>::CondensingConv(std::size_t in_channels, std::size_t out_channels, std::size_t groups,
                                  std::size_t condense_factor, bool with_bias)
    : in_(in_channels), out_(out_channels), groups_(groups), factor_(condense_factor) {
  if (groups_ == 0 || out_ % groups_ != 0) {
    throw ConfigError("CondensingConv: output channels " + std::to_string(out_) +
                      " not divisible by groups " + std::to_string(groups_));
  }
  if (factor_ == 0) throw ConfigError("CondensingConv: condense factor must be positive");
  weight_ = Var<T>(Tensor<T>({out_, in_, 1, 1}), true);
  if (with_bias) bias_ = Var<T>(Tensor<T>({1, out_, 1, 1}), true);
  mask_.assign(out_ * in_, 1);
}

template <typename T>
Var<T> CondensingConv<T>::forward(const Var<T>& input) const {
  if (input.shape().c != in_) {
    throw DimensionError("CondensingConv: input has " + std::to_string(input.shape().c) +
                         " channels (axis C), expected " + std::to_string(in_));
  }
  return masked_conv2d(input, weight_, mask_, bias_, {});
}

template <typename T>
std::vector<std::size_t> CondensingConv<T>::kept_columns(std::size_t group) const {
  std::vector<std::size_t> cols;
  const std::uint8_t* row = mask_.data() + group * filters_per_group() * in_;
  for (std::size_t i = 0; i < in_; ++i)
    if (row[i] != 0) cols.push_back(i);
  return cols;
}

template <typename T>
std::size_t CondensingConv<T>::active_connections() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

template <typename T>
void CondensingConv<T>::condense() {
  if (stage_ >= final_stage()) {
    throw ContractError("CondensingConv::condense: already at final stage " + std::to_string(stage_) +
                        " (condense factor " + std::to_string(factor_) + ")");
  }
  const std::size_t drop = drop_per_stage();
  const std::size_t fpg = filters_per_group();
  const T* w = weight_.value().raw();
  for (std::size_t g = 0; g < groups_; ++g) {
    std::vector<std::size_t> alive = kept_columns(g);
    std::vector<T> score(in_, T(0));
    for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f)
      for (std::size_t i : alive) score[i] += std::abs(w[f * in_ + i]);
    std::stable_sort(alive.begin(), alive.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    for (std::size_t k = 0; k < drop && k < alive.size(); ++k)
      for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f) mask_[f * in_ + alive[k]] = 0;
  }
  ++stage_;
  zero_masked_weights();
}

template <typename T>
void CondensingConv<T>::zero_masked_weights() {
  T* w = weight_.mutable_value().raw();
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i] == 0) w[i] = T(0);
}

template <typename T>
void CondensingConv<T>::restore(std::vector<std::uint8_t> mask, std::size_t stage) {
  if (mask.size() != out_ * in_) throw DimensionError("CondensingConv::restore: mask size mismatch");
  if (stage > final_stage()) throw ContractError("CondensingConv::restore: stage beyond final stage");
  const std::size_t fpg = filters_per_group();
  for (std::size_t g = 0; g < groups_; ++g) {
    std::size_t kept = 0;
    for (std::size_t i = 0; i < in_; ++i) {
      const std::uint8_t lead = mask[g * fpg * in_ + i];
      if (lead > 1) throw ContractError("CondensingConv::restore: mask is not binary");
      for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f)
        if (mask[f * in_ + i] != lead) throw ContractError("CondensingConv::restore: column not uniform within group");
      kept += lead;
    }
    if (kept != columns_after(stage)) {
      throw ContractError("CondensingConv::restore: group " + std::to_string(g) + " keeps " +
                          std::to_string(kept) + " columns, stage " + std::to_string(stage) + " implies " +
                          std::to_string(columns_after(stage)));
    }
  }
  mask_ = std::move(mask);
  stage_ = stage;
  zero_masked_weights();
}

template <typename T>
Var<T> CondensingConv<T>::group_lasso_penalty() const {
  const std::size_t fpg = filters_per_group();
  const std::size_t in = in_;
  const Tensor<T>& w = weight_.value();
  // norms[g * I + i]; zero for masked columns.
  std::vector<T> norms(groups_ * in_, T(0));
  T total = T(0);
  for (std::size_t g = 0; g < groups_; ++g)
    for (std::size_t i = 0; i < in_; ++i) {
      if (mask_[g * fpg * in_ + i] == 0) continue;
      T sq = T(0);
      for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f) sq += w[f * in_ + i] * w[f * in_ + i];
      norms[g * in_ + i] = std::sqrt(sq);
      total += norms[g * in_ + i];
    }
  return make_result<T>(Tensor<T>({1, 1, 1, 1}, total), {weight_},
                        [norms = std::move(norms), fpg, in](Node<T>& self) {
                          Node<T>* wn = self.parents[0].get();
                          const T gout = self.grad[0];
                          const T* w = wn->value.raw();
                          T* gw = wn->grad_buffer().raw();
                          const std::size_t out = wn->value.shape().n;
                          for (std::size_t f = 0; f < out; ++f) {
                            const std::size_t g = f / fpg;
                            for (std::size_t i = 0; i < in; ++i) {
                              const T nrm = norms[g * in + i];
                              if (nrm > T(0)) gw[f * in + i] += gout * w[f * in + i] / nrm;
                            }
                          }
                        });
}

template <typename T>
ConvertedLGC<T> CondensingConv<T>::convert() const {
  if (stage_ != final_stage()) {
    throw ContractError("CondensingConv::convert: layer at stage " + std::to_string(stage_) +
                        ", conversion requires final stage " + std::to_string(final_stage()));
  }
  const std::size_t fpg = filters_per_group();
  const std::size_t kept = columns_after(stage_);
  ConvertedLGC<T> out;
  out.groups = groups_;
  Tensor<T> w({out_, kept, 1, 1});
  const T* src = weight_.value().raw();
  for (std::size_t g = 0; g < groups_; ++g) {
    const auto cols = kept_columns(g);
    out.index.insert(out.index.end(), cols.begin(), cols.end());
    for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f)
      for (std::size_t j = 0; j < kept; ++j) w.at(f, j, 0, 0) = src[f * in_ + cols[j]];
  }
  out.weight = Var<T>(std::move(w), true);
  if (bias_.defined()) out.bias = Var<T>(bias_.value(), true);
  return out;
}

template <typename T>
Var<T> ConvertedLGC<T>::forward(const Var<T>& input) const {
  return conv2d(index_select_channels(input, index), weight, bias, {1, 0, groups});
}

template class CondensingConv<float>;
template class CondensingConv<double>;
template struct ConvertedLGC<float>;
template struct ConvertedLGC<double>;

}  // namespace srcn

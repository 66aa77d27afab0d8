#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "srcondense/autograd.hpp"

namespace srcn {

/// Stride/padding/grouping shared by conv2d and conv_transpose2d. Padding is
/// zero padding, applied symmetrically on both spatial axes.
struct ConvSpec {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};

[[nodiscard]] std::size_t conv_output_size(std::size_t in, std::size_t kernel, const ConvSpec& spec);
[[nodiscard]] std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel,
                                                     const ConvSpec& spec);

/// Grouped 2-D cross-correlation. `weight` is (O, I/G, kh, kw); `bias` may be
/// an undefined Var or a (1, O, 1, 1) tensor. Output group g reads only
/// input channel group g.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, const ConvSpec& spec);

/// conv2d with `weight` multiplied by a binary connection mask of length
/// O * (I/G), broadcast over the kernel window. Masked entries contribute
/// nothing forward and receive exactly zero gradient. Only unmasked
/// connections are reported to the MAC counter.
template <typename T>
Var<T> masked_conv2d(const Var<T>& input, const Var<T>& weight, std::span<const std::uint8_t> mask,
                     const Var<T>& bias, const ConvSpec& spec);

/// Transposed convolution (the adjoint of conv2d). `weight` is
/// (I, O/G, kh, kw); output spatial size is stride*(in-1) + k - 2*padding.
template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
                        const ConvSpec& spec);

template <typename T>
Var<T> leaky_relu(const Var<T>& input, T slope);

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

/// Output channel j is input channel indices[j]. Duplicates are allowed.
template <typename T>
Var<T> index_select_channels(const Var<T>& input, std::span<const std::size_t> indices);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& a, T factor);

/// Sum of all elements as a (1,1,1,1) tensor.
template <typename T>
Var<T> sum(const Var<T>& a);

/// sum(a * weights) with a constant weight tensor of the same shape.
template <typename T>
Var<T> weighted_sum(const Var<T>& a, const Tensor<T>& weights);

/// Builds a (1,1,1,1) constant.
template <typename T>
Var<T> scalar(T value);

}  // namespace srcn

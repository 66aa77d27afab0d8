#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srcondense/model.hpp"

namespace srcn {

/// One line of a FLOPs report. Elementwise rows are listed for completeness
/// but carry no multiply-adds.
struct FlopsRow {
  std::string name;
  Shape output;
  std::uint64_t macs = 0;
  /// Same layer with every LGC connection present.
  std::uint64_t dense_macs = 0;
  bool elementwise = false;
};

struct FlopsReport {
  std::vector<FlopsRow> rows;
  std::uint64_t total_macs = 0;
  std::uint64_t dense_macs = 0;
  std::size_t input_h = 0, input_w = 0;
  std::string convention = "1 FLOP = 1 multiply-add";

  /// Aligned table, totals and the reference values for context.
  [[nodiscard]] std::string text() const;
  /// One `key=value` per line.
  [[nodiscard]] std::string key_values() const;
};

/// Analytic count for a freshly built model of `config` projected to the
/// final condensing stage (every LGC layer keeps I - (C-1)*floor(I/C)
/// columns per group).
[[nodiscard]] FlopsReport count_flops(const ModelConfig& config, std::size_t h, std::size_t w);

/// Analytic count using the model's current masks (or converted layers).
template <typename T>
[[nodiscard]] FlopsReport count_flops(const Model<T>& model, std::size_t h, std::size_t w);

/// Multiply-adds reported by the convolution ops during one forward pass.
template <typename T>
[[nodiscard]] std::uint64_t instrumented_macs(const Model<T>& model, const Tensor<T>& input);

/// Published x2 FLOPs (units of 1e6) for a 64x64 output; quoted, not
/// recomputed.
struct ReferenceFlops {
  const char* method;
  const char* input;
  double mflops;
};
[[nodiscard]] std::span<const ReferenceFlops> reference_flops();

}  // namespace srcn

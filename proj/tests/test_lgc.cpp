#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "srcondense/lgc.hpp"
#include "srcondense/mac_counter.hpp"
#include "support/oracles.hpp"

using namespace srcn;
using srcn::testing::grad_check;
using srcn::testing::max_abs_diff;
using srcn::testing::random_tensor;

namespace {

template <typename T>
CondensingConv<T> random_layer(std::size_t in, std::size_t out, std::size_t groups, std::size_t factor,
                               std::uint64_t seed, bool bias = false) {
  CondensingConv<T> layer(in, out, groups, factor, bias);
  layer.weight().mutable_value() = random_tensor<T>({out, in, 1, 1}, seed);
  if (bias) layer.bias().mutable_value() = random_tensor<T>({1, out, 1, 1}, seed + 1);
  return layer;
}

/// Brute force: within each group, rank the surviving columns by
/// (L1 norm, index) and drop the first `drop`.
std::vector<std::uint8_t> reference_condense(const std::vector<std::uint8_t>& mask, const Tensor<double>& w,
                                             std::size_t groups, std::size_t drop) {
  const std::size_t out = w.shape().n;
  const std::size_t in = w.shape().c;
  const std::size_t fpg = out / groups;
  std::vector<std::uint8_t> next = mask;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < in; ++i) {
      if (mask[g * fpg * in + i] == 0) continue;
      double s = 0;
      for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f) s += std::abs(w.at(f, i, 0, 0));
      ranked.emplace_back(s, i);
    }
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t k = 0; k < drop; ++k)
      for (std::size_t f = g * fpg; f < (g + 1) * fpg; ++f) next[f * in + ranked[k].second] = 0;
  }
  return next;
}

}  // namespace

TEST_CASE("forward with full mask is a plain 1x1 conv") {
  auto layer = random_layer<float>(12, 8, 4, 4, 1, true);
  Var<float> x(random_tensor<float>({2, 12, 5, 5}, 2));
  Var<float> dense = conv2d(x, Var<float>(layer.weight().value()), Var<float>(layer.bias().value()), {});
  CHECK(layer.forward(x).value() == dense.value());
}

TEST_CASE("forward with an all-zero mask leaves only the bias") {
  const auto w = random_tensor<float>({4, 6, 1, 1}, 3);
  Tensor<float> b({1, 4, 1, 1}, std::vector<float>{1, 2, 3, 4});
  std::vector<std::uint8_t> zero(24, 0);
  Var<float> y = masked_conv2d(Var<float>(random_tensor<float>({1, 6, 3, 3}, 4)), Var<float>(w), zero,
                               Var<float>(b), {});
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 9; ++i) CHECK(y.value().plane(0, c)[i] == b[c]);
  Var<float> y0 = masked_conv2d(Var<float>(random_tensor<float>({1, 6, 3, 3}, 4)), Var<float>(w), zero,
                                Var<float>{}, {});
  for (float v : y0.value().data()) CHECK(v == 0.0f);
}

TEST_CASE("masked forward equals dense conv with zeroed columns") {
  auto layer = random_layer<float>(16, 8, 4, 4, 5);
  layer.condense();
  layer.condense();
  Tensor<float> zeroed = layer.weight().value();
  for (std::size_t i = 0; i < layer.mask().size(); ++i)
    if (layer.mask()[i] == 0) CHECK(zeroed[i] == 0.0f);
  Var<float> x(random_tensor<float>({1, 16, 6, 6}, 6));
  CHECK(layer.forward(x).value() == conv2d(x, Var<float>(zeroed), Var<float>{}, {}).value());
}

TEST_CASE("condense schedule: I=16, G=4, C=4 keeps 12/8/4 columns per group") {
  auto layer = random_layer<float>(16, 8, 4, 4, 7);
  CHECK(layer.drop_per_stage() == 4);
  for (std::size_t g = 0; g < 4; ++g) CHECK(layer.kept_columns(g).size() == 16);
  const std::size_t expected[] = {12, 8, 4};
  for (std::size_t s = 0; s < 3; ++s) {
    layer.condense();
    CHECK(layer.stage() == s + 1);
    for (std::size_t g = 0; g < 4; ++g) CHECK(layer.kept_columns(g).size() == expected[s]);
  }
  CHECK(layer.active_connections() == 8 * 4);
  CHECK_THROWS_AS(layer.condense(), ContractError);
}

TEST_CASE("condense: a zero column is pruned first; ties go to the lower index") {
  auto layer = random_layer<double>(16, 8, 4, 4, 8);
  for (auto& v : layer.weight().mutable_value().data()) v = 1.0 + std::abs(v);
  for (std::size_t f = 0; f < 2; ++f) layer.weight().mutable_value().at(f, 3, 0, 0) = 0.0;
  layer.condense();
  const auto kept = layer.kept_columns(0);
  CHECK(std::find(kept.begin(), kept.end(), 3) == kept.end());
  const auto kept1 = layer.kept_columns(1);
  CHECK(std::find(kept1.begin(), kept1.end(), 3) != kept1.end());

  CondensingConv<double> ties(8, 2, 1, 2);
  ties.weight().mutable_value().fill(1.0);
  ties.condense();
  CHECK(ties.kept_columns(0) == std::vector<std::size_t>{4, 5, 6, 7});
}

TEST_CASE("condense matches the brute-force sort oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t groups = 1 + seed % 4;
    const std::size_t factor = 2 + seed % 3;
    const std::size_t in = 8 + seed % 11;
    const std::size_t out = groups * (1 + seed % 3);
    auto layer = random_layer<double>(in, out, groups, factor, seed);
    std::vector<std::uint8_t> ref(in * out, 1);
    for (std::size_t s = 0; s + 1 < factor; ++s) {
      // Perturb weights between stages as training would.
      auto& w = layer.weight().mutable_value();
      const auto noise = random_tensor<double>(w.shape(), seed * 100 + s);
      for (std::size_t i = 0; i < w.numel(); ++i)
        if (layer.mask()[i]) w[i] += noise[i];
      ref = reference_condense(ref, w, groups, in / factor);
      const auto before = layer.mask();
      layer.condense();
      CHECK(layer.mask() == ref);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(layer.mask()[i] <= before[i]);
    }
    CHECK(layer.active_connections() == out * (in - (factor - 1) * (in / factor)));
  }
}

TEST_CASE("group lasso penalty") {
  CondensingConv<double> zero(6, 4, 2, 2);
  CHECK(zero.group_lasso_penalty().value()[0] == 0.0);

  CondensingConv<double> single(1, 2, 1, 2);
  single.weight().mutable_value() = Tensor<double>({2, 1, 1, 1}, std::vector<double>{3.0, 4.0});
  CHECK(single.group_lasso_penalty().value()[0] == doctest::Approx(5.0).epsilon(1e-15));

  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto layer = random_layer<double>(12, 8, 4, 4, seed);
    layer.condense();
    auto r = grad_check(
        [&](const std::vector<Var<double>>& v) {
          layer.weight() = v[0];
          return layer.group_lasso_penalty();
        },
        {layer.weight().value()});
    worst = std::max(worst, r.max_rel_error);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("convert: contiguous slices produce the identity index list") {
  CondensingConv<float> layer(16, 8, 4, 4);
  std::vector<std::uint8_t> mask(8 * 16, 0);
  for (std::size_t f = 0; f < 8; ++f)
    for (std::size_t i = 0; i < 4; ++i) mask[f * 16 + (f / 2) * 4 + i] = 1;
  layer.restore(mask, 3);
  const auto conv = layer.convert();
  std::vector<std::size_t> expected(16);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(conv.index == expected);
  CHECK(conv.weight.shape() == Shape{8, 4, 1, 1});
}

TEST_CASE("convert: forward equivalence on 100 random inputs") {
  auto layer = random_layer<float>(36, 80, 4, 4, 42, true);
  for (int s = 0; s < 3; ++s) layer.condense();
  const auto conv = layer.convert();
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Var<float> x(random_tensor<float>({1, 36, 4, 4}, seed));
    worst = std::max(worst, max_abs_diff(conv.forward(x).value(), layer.forward(x).value()));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("convert: converted MACs are 1/C of the dense layer") {
  auto layer = random_layer<float>(16, 32, 4, 4, 9);
  MacCounter dense_count;
  {
    MacCountingScope scope(dense_count);
    (void)conv2d(Var<float>(Tensor<float>({1, 16, 32, 32})), layer.weight(), Var<float>{}, {});
  }
  for (int s = 0; s < 3; ++s) layer.condense();
  MacCounter conv_count;
  {
    MacCountingScope scope(conv_count);
    (void)layer.convert().forward(Var<float>(Tensor<float>({1, 16, 32, 32})));
  }
  CHECK(dense_count.total() == 524288);
  CHECK(conv_count.total() == 131072);
  CHECK(conv_count.total() * 4 == dense_count.total());
}

TEST_CASE("convert before the final stage is a contract error") {
  auto layer = random_layer<float>(8, 4, 2, 4, 1);
  CHECK_THROWS_AS((void)layer.convert(), ContractError);
  layer.condense();
  CHECK_THROWS_AS((void)layer.convert(), ContractError);
}

TEST_CASE("non-divisible widths keep the remainder") {
  auto layer = random_layer<float>(18, 4, 2, 4, 3);
  for (int s = 0; s < 3; ++s) layer.condense();
  for (std::size_t g = 0; g < 2; ++g) CHECK(layer.kept_columns(g).size() == 18 - 3 * 4);
}

TEST_CASE("masked weights get zero gradient") {
  auto layer = random_layer<double>(8, 4, 2, 2, 5);
  layer.condense();
  Var<double> x(random_tensor<double>({2, 8, 3, 3}, 6));
  backward(sum(layer.forward(x)));
  const auto& g = layer.weight().grad();
  for (std::size_t i = 0; i < layer.mask().size(); ++i) {
    if (layer.mask()[i] == 0) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("restore validates mask structure") {
  CondensingConv<float> layer(8, 4, 2, 2);
  std::vector<std::uint8_t> mask(32, 1);
  CHECK_THROWS_AS(layer.restore(mask, 1), ContractError);
  mask[0] = 0;
  CHECK_THROWS_AS(layer.restore(mask, 0), ContractError);
  CHECK_THROWS_AS(layer.restore(std::vector<std::uint8_t>(31, 1), 0), DimensionError);
  CHECK_NOTHROW(layer.restore(std::vector<std::uint8_t>(32, 1), 0));
}

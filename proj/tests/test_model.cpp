#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "srcondense/errors.hpp"
#include "srcondense/model.hpp"
#include "support/oracles.hpp"

using namespace srcn;
using srcn::testing::max_abs_diff;
using srcn::testing::random_tensor;

namespace {

ModelConfig tiny() {
  ModelConfig c = ModelConfig::toy();
  c.bottleneck_channels = 8;
  c.deconv_channels = 8;
  return c;
}

Tensor<double> unit_input(Shape s, std::uint64_t seed) { return random_tensor<double>(s, seed, 0.0, 1.0); }

}  // namespace

TEST_CASE("channel bookkeeping of the default network") {
  const ModelConfig c;
  CHECK(c.total_layers() == 28);
  CHECK(c.feature_channels() == 576);
  CHECK(c.channels_entering(0, 0) == 16);
  CHECK(c.channels_entering(3, 6) == 16 + 27 * 20);
  CHECK(c.lgc_channels() == 80);

  const auto m = Model<float>::build(c, 1);
  CHECK(m.bottleneck().weight.shape() == Shape{128, 576, 1, 1});
  CHECK(m.blocks().size() == 4);
  CHECK(m.blocks()[3][6].lgc.in_channels() == 556);
  CHECK(m.deconvs().size() == 1);
  CHECK(m.deconvs()[0].weight.shape() == Shape{128, 128, 4, 4});
}

TEST_CASE("deconvolution geometry per scale") {
  for (std::size_t r : {2u, 3u, 4u}) {
    ModelConfig c = tiny();
    c.scale = r;
    const auto m = Model<double>::build(c, 3);
    const Var<double> y = m.forward(Var<double>(unit_input({2, 1, 7, 9}, r)));
    CHECK(y.shape() == Shape{2, 1, 7 * r, 9 * r});
  }
  ModelConfig bad = tiny();
  for (std::size_t r : {0u, 1u, 5u, 8u}) {
    bad.scale = r;
    CHECK_THROWS_AS((void)Model<float>::build(bad, 0), ConfigError);
  }
  bad = tiny();
  bad.growth = 18;  // not divisible by 4 groups
  CHECK_THROWS_AS((void)Model<float>::build(bad, 0), ConfigError);
}

TEST_CASE("32x32 input gives a 64x64 output at scale 2") {
  const auto m = Model<float>::build(ModelConfig::toy(), 5);
  const auto y = m.forward(Var<float>(random_tensor<float>({1, 1, 32, 32}, 1, 0.0f, 1.0f)));
  CHECK(y.shape() == Shape{1, 1, 64, 64});
  CHECK_THROWS_AS((void)m.forward(Var<float>(Tensor<float>({1, 3, 32, 32}))), DimensionError);
}

TEST_CASE("same seed, same parameters") {
  const auto a = Model<float>::build(ModelConfig::toy(), 42);
  const auto b = Model<float>::build(ModelConfig::toy(), 42);
  const auto c = Model<float>::build(ModelConfig::toy(), 43);
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  const auto pc = c.named_parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].var.value() == pb[i].var.value());
    any_diff = any_diff || !(pa[i].var.value() == pc[i].var.value());
  }
  CHECK(any_diff);
}

TEST_CASE("minimal configuration runs") {
  ModelConfig c;
  c.num_blocks = 1;
  c.layers_per_block = 1;
  c.growth = 4;
  c.groups = 1;
  c.condense_factor = 1;
  c.stem_channels = 1;
  c.bottleneck_channels = 1;
  c.deconv_channels = 1;
  c.lgc_expansion = 1;
  const auto m = Model<double>::build(c, 0);
  CHECK(m.forward(Var<double>(unit_input({1, 1, 1, 1}, 0))).shape() == Shape{1, 1, 2, 2});
}

TEST_CASE("zero network reproduces the bicubic upsample") {
  auto m = Model<float>::build(ModelConfig::toy(), 9);
  m.zero_parameters();
  const Tensor<float> x = random_tensor<float>({2, 1, 16, 12}, 2, 0.0f, 1.0f);
  const auto y = m.forward(Var<float>(x));
  CHECK(y.value() == Model<float>::bicubic_upsample(x, 2));
}

TEST_CASE("residual structure: output = base + network") {
  const auto m = Model<double>::build(tiny(), 11);
  const Tensor<double> x = unit_input({1, 1, 8, 8}, 3);
  const Tensor<double> base = Model<double>::bicubic_upsample(x, 2);
  const auto y = m.forward(Var<double>(x)).value();
  const auto net = m.residual(Var<double>(x)).value();
  double worst = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) worst = std::max(worst, std::abs(y[i] - (base[i] + net[i])));
  CHECK(worst < 1e-12);

  // Shifting the base by delta shifts the output by exactly delta.
  Tensor<double> shifted = base;
  for (double& v : shifted.data()) v += 0.25;
  const auto ys = m.forward(Var<double>(x), shifted).value();
  worst = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) worst = std::max(worst, std::abs(ys[i] - y[i] - 0.25));
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS((void)m.forward(Var<double>(x), Tensor<double>({1, 1, 15, 16})), DimensionError);
}

TEST_CASE("every parameter receives a gradient") {
  const auto m = Model<double>::build(tiny(), 13);
  const auto y = m.forward(Var<double>(unit_input({2, 1, 6, 6}, 4)));
  backward(sum(y));
  for (const auto& p : m.named_parameters()) {
    INFO(p.name);
    REQUIRE(p.var.has_grad());
    double norm = 0;
    for (double g : p.var.grad().data()) norm += g * g;
    CHECK(norm > 0);
  }
}

TEST_CASE("parameter counts match a hand count") {
  const auto m = Model<float>::build(ModelConfig::toy(), 1);
  // stem 9*16+16; layer0 lgc 16*80, gconv 20*20*9+20; layer1 lgc 36*80, gconv again;
  // bottleneck 56*32+32; deconv 32*32*16+32; reconstruct 32*9+1.
  const std::size_t expected = 160 + 1280 + 3620 + 2880 + 3620 + 1824 + 16416 + 289;
  CHECK(m.count_params() == expected);
  CHECK(m.count_active_params() == expected);

  auto c = m.clone();
  for (int s = 0; s < 3; ++s) c.condense_all();
  // Kept columns per group: 16 - 3*4 = 4 and 36 - 3*9 = 9, for all 80 filters.
  const std::size_t active = expected - 1280 - 2880 + 80 * 4 + 80 * 9;
  CHECK(c.count_active_params() == active);
  CHECK(c.count_params() == expected);
  const auto frozen = c.freeze_for_inference();
  CHECK(frozen.frozen());
  CHECK(frozen.count_params() == active);
  CHECK(frozen.count_active_params() == active);
}

TEST_CASE("frozen model matches the masked one") {
  auto m = Model<double>::build(tiny(), 21);
  CHECK_THROWS_AS((void)m.freeze_for_inference(), ContractError);
  for (int s = 0; s < 3; ++s) m.condense_all();
  const auto frozen = m.freeze_for_inference();
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Var<double> x(unit_input({1, 1, 5 + seed % 4, 6}, 100 + seed));
    worst = std::max(worst, max_abs_diff(m.forward(x).value(), frozen.forward(x).value()));
  }
  CHECK(worst < 1e-5);
  CHECK(worst < 1e-10);

  // Float path agrees to single precision.
  auto mf = Model<float>::build(ModelConfig::toy(), 21);
  for (int s = 0; s < 3; ++s) mf.condense_all();
  const auto ff = mf.freeze_for_inference();
  const Var<float> xf(random_tensor<float>({1, 1, 12, 12}, 7, 0.0f, 1.0f));
  CHECK(max_abs_diff(mf.forward(xf).value(), ff.forward(xf).value()) < 1e-5);
  CHECK_THROWS_AS(mf.condense_all(), ContractError);
}

TEST_CASE("clone is independent") {
  const auto m = Model<float>::build(ModelConfig::toy(), 2);
  auto c = m.clone();
  c.zero_parameters();
  CHECK(m.named_parameters()[0].var.value() != c.named_parameters()[0].var.value());
  for (int s = 0; s < 2; ++s) c.condense_all();
  CHECK(m.lgc_layers()[0]->stage() == 0);
  CHECK(c.lgc_layers()[0]->stage() == 2);
  CHECK(c.clone().lgc_layers()[1]->mask() == c.lgc_layers()[1]->mask());
}

TEST_CASE("group lasso sums over layers") {
  const auto m = Model<double>::build(tiny(), 3);
  double expected = 0;
  for (const auto* l : m.lgc_layers()) expected += l->group_lasso_penalty().value()[0];
  CHECK(m.group_lasso().value()[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > 0);
}

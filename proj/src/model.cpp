#include "srcondense/model.hpp"

#include <cmath>
#include <random>

#include "srcondense/image.hpp"

namespace srcn {

void ModelConfig::validate() const {
  if (scale < 2 || scale > 4) throw ConfigError("scale must be 2, 3 or 4 (got " + std::to_string(scale) + ")");
  if (num_blocks == 0 || layers_per_block == 0) throw ConfigError("need at least one block and one layer");
  if (growth == 0 || stem_channels == 0 || bottleneck_channels == 0 || deconv_channels == 0 || lgc_expansion == 0) {
    throw ConfigError("channel widths must be positive");
  }
  if (groups == 0 || growth % groups != 0) {
    throw ConfigError("growth " + std::to_string(growth) + " not divisible by groups " + std::to_string(groups));
  }
  if (lgc_channels() % groups != 0) throw ConfigError("LGC width not divisible by groups");
  if (condense_factor == 0) throw ConfigError("condense factor must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in [0, 1)");
}

std::vector<DeconvStage> ModelConfig::deconv_stages() const {
  switch (scale) {
    case 2:
      return {{4, 2, 1}};
    case 3:
      return {{5, 3, 1}};
    case 4:
      return {{4, 2, 1}, {4, 2, 1}};
    default:
      throw ConfigError("scale must be 2, 3 or 4 (got " + std::to_string(scale) + ")");
  }
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.num_blocks = 1;
  c.layers_per_block = 2;
  c.bottleneck_channels = 32;
  c.deconv_channels = 32;
  return c;
}

template <typename T>
Var<T> DenseLayer<T>::forward(const Var<T>& x, T slope) const {
  Var<T> h = converted ? converted->forward(x) : lgc.forward(x);
  return leaky_relu(gconv.forward(leaky_relu(h, slope)), slope);
}

namespace {

template <typename T>
void kaiming(Tensor<T>& w, double fan_in, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, gain / std::sqrt(fan_in));
  for (T& v : w.data()) v = static_cast<T>(dist(rng));
}

template <typename T>
ConvLayer<T> make_conv(std::size_t in, std::size_t out, std::size_t k, ConvSpec spec, double gain,
                       std::mt19937_64& rng) {
  ConvLayer<T> layer;
  Tensor<T> w({out, in / spec.groups, k, k});
  kaiming(w, static_cast<double>(in / spec.groups * k * k), gain, rng);
  layer.weight = Var<T>(std::move(w), true);
  layer.bias = Var<T>(Tensor<T>({1, out, 1, 1}), true);
  layer.spec = spec;
  return layer;
}

template <typename T>
ConvLayer<T> make_deconv(std::size_t in, std::size_t out, const DeconvStage& st, double gain,
                         std::mt19937_64& rng) {
  ConvLayer<T> layer;
  Tensor<T> w({in, out, st.kernel, st.kernel});
  // Each output pixel receives about in * (k / stride)^2 contributions.
  const double fan_in = static_cast<double>(in * st.kernel * st.kernel) / static_cast<double>(st.stride * st.stride);
  kaiming(w, fan_in, gain, rng);
  layer.weight = Var<T>(std::move(w), true);
  layer.bias = Var<T>(Tensor<T>({1, out, 1, 1}), true);
  layer.spec = {st.stride, st.padding, 1};
  layer.transposed = true;
  return layer;
}

template <typename T>
Var<T> copy_var(const Var<T>& v) {
  return v.defined() ? Var<T>(v.value(), v.requires_grad()) : Var<T>{};
}

template <typename T>
ConvLayer<T> copy_layer(const ConvLayer<T>& c) {
  return {copy_var(c.weight), copy_var(c.bias), c.spec, c.transposed};
}

}  // namespace

template <typename T>
Model<T> Model<T>::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const double leaky_gain = std::sqrt(2.0 / (1.0 + config.leaky_slope * config.leaky_slope));
  const std::size_t G = config.groups;

  Model m;
  m.config_ = config;
  m.stem_ = make_conv<T>(1, config.stem_channels, 3, {1, 1, 1}, 1.0, rng);
  std::size_t channels = config.stem_channels;
  m.blocks_.resize(config.num_blocks);
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    for (std::size_t l = 0; l < config.layers_per_block; ++l) {
      if (channels != config.channels_entering(b, l)) {
        throw ContractError("Model::build: channel bookkeeping mismatch at block " + std::to_string(b));
      }
      DenseLayer<T> layer{CondensingConv<T>(channels, config.lgc_channels(), G, config.condense_factor), std::nullopt,
                          {}};
      kaiming(layer.lgc.weight().mutable_value(), static_cast<double>(channels), leaky_gain, rng);
      layer.gconv = make_conv<T>(config.lgc_channels(), config.growth, 3, {1, 1, G}, leaky_gain, rng);
      m.blocks_[b].push_back(std::move(layer));
      channels += config.growth;
    }
  }
  if (channels != config.feature_channels()) throw ContractError("Model::build: feature width mismatch");
  m.bottleneck_ = make_conv<T>(channels, config.bottleneck_channels, 1, {1, 0, 1}, leaky_gain, rng);
  std::size_t width = config.bottleneck_channels;
  for (const auto& st : config.deconv_stages()) {
    m.deconvs_.push_back(make_deconv<T>(width, config.deconv_channels, st, leaky_gain, rng));
    width = config.deconv_channels;
  }
  m.reconstruct_ = make_conv<T>(width, 1, 3, {1, 1, 1}, 1.0, rng);
  return m;
}

template <typename T>
Model<T> Model<T>::clone() const {
  Model m;
  m.config_ = config_;
  m.frozen_ = frozen_;
  m.stem_ = copy_layer(stem_);
  m.blocks_.resize(blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (const auto& src : blocks_[b]) {
      const auto& lgc = src.lgc;
      DenseLayer<T> layer{CondensingConv<T>(lgc.in_channels(), lgc.out_channels(), lgc.groups(),
                                            lgc.condense_factor(), lgc.bias().defined()),
                          std::nullopt, copy_layer(src.gconv)};
      layer.lgc.weight().mutable_value() = lgc.weight().value();
      if (lgc.bias().defined()) layer.lgc.bias().mutable_value() = lgc.bias().value();
      layer.lgc.restore(lgc.mask(), lgc.stage());
      if (src.converted) {
        ConvertedLGC<T> c = *src.converted;
        c.weight = copy_var(c.weight);
        c.bias = copy_var(c.bias);
        layer.converted = std::move(c);
      }
      m.blocks_[b].push_back(std::move(layer));
    }
  }
  m.bottleneck_ = copy_layer(bottleneck_);
  for (const auto& d : deconvs_) m.deconvs_.push_back(copy_layer(d));
  m.reconstruct_ = copy_layer(reconstruct_);
  return m;
}

template <typename T>
Tensor<T> Model<T>::bicubic_upsample(const Tensor<T>& lr, std::size_t scale) {
  const Shape& s = lr.shape();
  Tensor<T> out({s.n, s.c, s.h * scale, s.w * scale});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      bicubic_resize<T>(std::span<const T>(lr.plane(n, c), s.plane()), s.h, s.w,
                        std::span<T>(out.plane(n, c), out.shape().plane()), s.h * scale, s.w * scale);
    }
  return out;
}

template <typename T>
Var<T> Model<T>::residual(const Var<T>& lr) const {
  if (lr.shape().c != 1) {
    throw DimensionError("Model::forward: expected 1 input channel (axis C), got " + std::to_string(lr.shape().c));
  }
  const T slope = static_cast<T>(config_.leaky_slope);
  Var<T> features = stem_.forward(lr);
  for (const auto& block : blocks_) {
    for (const auto& layer : block) {
      features = concat_channels(features, layer.forward(features, slope));
    }
  }
  if (features.shape().c != config_.feature_channels()) {
    throw ContractError("Model::forward: concatenated width " + std::to_string(features.shape().c) +
                        " differs from " + std::to_string(config_.feature_channels()));
  }
  Var<T> h = leaky_relu(bottleneck_.forward(features), slope);
  for (const auto& d : deconvs_) h = leaky_relu(d.forward(h), slope);
  return reconstruct_.forward(h);
}

template <typename T>
Var<T> Model<T>::forward(const Var<T>& lr) const {
  if (lr.shape().c != 1) {
    throw DimensionError("Model::forward: expected 1 input channel (axis C), got " + std::to_string(lr.shape().c));
  }
  return forward(lr, bicubic_upsample(lr.value(), config_.scale));
}

template <typename T>
Var<T> Model<T>::forward(const Var<T>& lr, const Tensor<T>& base) const {
  Var<T> net = residual(lr);
  if (net.shape() != base.shape()) {
    throw DimensionError("Model::forward: upsampled base " + base.shape().str() + " vs network output " +
                         net.shape().str());
  }
  return add(net, Var<T>(base));
}

template <typename T>
std::vector<NamedParameter<T>> Model<T>::named_parameters() const {
  std::vector<NamedParameter<T>> out;
  auto conv = [&](const std::string& name, const ConvLayer<T>& c) {
    out.push_back({name + ".weight", c.weight, nullptr});
    if (c.bias.defined()) out.push_back({name + ".bias", c.bias, nullptr});
  };
  conv("stem", stem_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (std::size_t l = 0; l < blocks_[b].size(); ++l) {
      const auto& layer = blocks_[b][l];
      const std::string prefix = "blocks." + std::to_string(b) + ".layers." + std::to_string(l);
      if (layer.converted) {
        out.push_back({prefix + ".lgc.weight", layer.converted->weight, nullptr});
        if (layer.converted->bias.defined()) out.push_back({prefix + ".lgc.bias", layer.converted->bias, nullptr});
      } else {
        out.push_back({prefix + ".lgc.weight", layer.lgc.weight(), &layer.lgc.mask()});
        if (layer.lgc.bias().defined()) out.push_back({prefix + ".lgc.bias", layer.lgc.bias(), nullptr});
      }
      conv(prefix + ".gconv", layer.gconv);
    }
  }
  conv("bottleneck", bottleneck_);
  for (std::size_t i = 0; i < deconvs_.size(); ++i) conv("deconv." + std::to_string(i), deconvs_[i]);
  conv("reconstruct", reconstruct_);
  return out;
}

template <typename T>
std::vector<CondensingConv<T>*> Model<T>::lgc_layers() {
  std::vector<CondensingConv<T>*> out;
  for (auto& block : blocks_)
    for (auto& layer : block) out.push_back(&layer.lgc);
  return out;
}

template <typename T>
std::vector<const CondensingConv<T>*> Model<T>::lgc_layers() const {
  std::vector<const CondensingConv<T>*> out;
  for (const auto& block : blocks_)
    for (const auto& layer : block) out.push_back(&layer.lgc);
  return out;
}

template <typename T>
void Model<T>::condense_all() {
  if (frozen_) throw ContractError("Model::condense_all: model is frozen");
  for (auto* lgc : lgc_layers()) lgc->condense();
}

template <typename T>
Var<T> Model<T>::group_lasso() const {
  Var<T> total;
  for (const auto* lgc : lgc_layers()) {
    Var<T> p = lgc->group_lasso_penalty();
    total = total.defined() ? add(total, p) : p;
  }
  return total.defined() ? total : scalar<T>(T(0));
}

template <typename T>
void Model<T>::zero_parameters() {
  for (auto& p : named_parameters()) p.var.mutable_value().fill(T(0));
}

template <typename T>
std::size_t Model<T>::count_params() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.var.value().numel();
  return n;
}

template <typename T>
std::size_t Model<T>::count_active_params() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) {
    if (p.mask) {
      for (auto m : *p.mask) n += m;
    } else {
      n += p.var.value().numel();
    }
  }
  return n;
}

template <typename T>
Model<T> Model<T>::freeze_for_inference() const {
  if (frozen_) return clone();
  for (const auto* lgc : lgc_layers()) {
    if (lgc->stage() != lgc->final_stage()) {
      throw ContractError("freeze_for_inference: LGC layer at stage " + std::to_string(lgc->stage()) +
                          ", final stage is " + std::to_string(lgc->final_stage()));
    }
  }
  Model m = clone();
  for (auto& block : m.blocks_)
    for (auto& layer : block) layer.converted = layer.lgc.convert();
  m.frozen_ = true;
  return m;
}

template struct DenseLayer<float>;
template struct DenseLayer<double>;
template class Model<float>;
template class Model<double>;

}  // namespace srcn

#include "srcondense/flops.hpp"

#include <functional>
#include <iomanip>
#include <sstream>

#include "srcondense/mac_counter.hpp"

namespace srcn {

namespace {

using ActiveFn = std::function<std::uint64_t(std::size_t block, std::size_t layer)>;

FlopsReport build_report(const ModelConfig& c, std::size_t h, std::size_t w, const ActiveFn& active_lgc) {
  FlopsReport r;
  r.input_h = h;
  r.input_w = w;
  const std::uint64_t hw = static_cast<std::uint64_t>(h) * w;
  auto conv = [&](std::string name, Shape out, std::uint64_t macs, std::uint64_t dense) {
    r.rows.push_back({std::move(name), out, macs, dense, false});
    r.total_macs += macs;
    r.dense_macs += dense;
  };
  auto elementwise = [&](std::string name, Shape out) { r.rows.push_back({std::move(name), out, 0, 0, true}); };

  const std::uint64_t stem = hw * 9 * 1 * c.stem_channels;
  conv("stem", {1, c.stem_channels, h, w}, stem, stem);
  const std::size_t lgc_out = c.lgc_channels();
  for (std::size_t b = 0; b < c.num_blocks; ++b) {
    for (std::size_t l = 0; l < c.layers_per_block; ++l) {
      const std::string p = "blocks." + std::to_string(b) + ".layers." + std::to_string(l);
      const std::uint64_t in = c.channels_entering(b, l);
      conv(p + ".lgc", {1, lgc_out, h, w}, hw * active_lgc(b, l), hw * in * lgc_out);
      elementwise(p + ".lgc.leaky_relu", {1, lgc_out, h, w});
      const std::uint64_t g = hw * 9 * (lgc_out / c.groups) * c.growth;
      conv(p + ".gconv", {1, c.growth, h, w}, g, g);
      elementwise(p + ".gconv.leaky_relu", {1, c.growth, h, w});
      elementwise(p + ".concat", {1, in + c.growth, h, w});
    }
  }
  const std::uint64_t bott = hw * c.feature_channels() * c.bottleneck_channels;
  conv("bottleneck", {1, c.bottleneck_channels, h, w}, bott, bott);
  elementwise("bottleneck.leaky_relu", {1, c.bottleneck_channels, h, w});
  std::size_t ch = c.bottleneck_channels, ph = h, pw = w;
  const auto stages = c.deconv_stages();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    const ConvSpec spec{s.stride, s.padding, 1};
    // Each input pixel scatters a k x k stamp into every output channel.
    const std::uint64_t macs = static_cast<std::uint64_t>(ph) * pw * s.kernel * s.kernel * ch * c.deconv_channels;
    ph = conv_transpose_output_size(ph, s.kernel, spec);
    pw = conv_transpose_output_size(pw, s.kernel, spec);
    conv("deconv." + std::to_string(i), {1, c.deconv_channels, ph, pw}, macs, macs);
    elementwise("deconv." + std::to_string(i) + ".leaky_relu", {1, c.deconv_channels, ph, pw});
    ch = c.deconv_channels;
  }
  const std::uint64_t rec = static_cast<std::uint64_t>(ph) * pw * 9 * ch;
  conv("reconstruct", {1, 1, ph, pw}, rec, rec);
  elementwise("bicubic_upsample", {1, 1, ph, pw});
  elementwise("residual_add", {1, 1, ph, pw});
  return r;
}

std::string mflops(std::uint64_t macs) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(macs) / 1e6;
  return os.str();
}

constexpr ReferenceFlops kReference[] = {
    {"SRCNN", "64x64 bicubic", 332.32},   {"VDSR", "64x64 bicubic", 2727.61},
    {"LapSRN", "32x32", 1988.38},         {"DRRN", "64x64 bicubic", 30235.17},
    {"SRCondenseNet", "32x32", 668.88},
};

}  // namespace

std::span<const ReferenceFlops> reference_flops() { return kReference; }

FlopsReport count_flops(const ModelConfig& config, std::size_t h, std::size_t w) {
  config.validate();
  return build_report(config, h, w, [&](std::size_t b, std::size_t l) -> std::uint64_t {
    const std::size_t in = config.channels_entering(b, l);
    const std::size_t kept = in - (config.condense_factor - 1) * (in / config.condense_factor);
    return static_cast<std::uint64_t>(kept) * config.lgc_channels();
  });
}

template <typename T>
FlopsReport count_flops(const Model<T>& model, std::size_t h, std::size_t w) {
  const auto& blocks = model.blocks();
  return build_report(model.config(), h, w, [&](std::size_t b, std::size_t l) -> std::uint64_t {
    const auto& layer = blocks[b][l];
    if (layer.converted) return layer.converted->weight.value().numel();
    return layer.lgc.active_connections();
  });
}

template <typename T>
std::uint64_t instrumented_macs(const Model<T>& model, const Tensor<T>& input) {
  NoGradGuard no_grad;
  MacCounter counter;
  {
    MacCountingScope scope(counter);
    (void)model.forward(Var<T>(input));
  }
  return counter.total();
}

std::string FlopsReport::text() const {
  std::ostringstream os;
  std::size_t width = 5;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  os << "FLOPs for a " << input_h << "x" << input_w << " input (" << convention << ")\n";
  os << std::left << std::setw(static_cast<int>(width)) << "layer" << "  " << std::setw(18) << "output"
     << std::right << std::setw(14) << "MACs" << std::setw(16) << "dense MACs" << "\n";
  for (const auto& row : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << row.name << "  " << std::setw(18) << row.output.str()
       << std::right << std::setw(14) << (row.elementwise ? std::string("-") : std::to_string(row.macs))
       << std::setw(16) << (row.elementwise ? std::string("-") : std::to_string(row.dense_macs)) << "\n";
  }
  os << "\ntotal (post-condensation): " << total_macs << " MACs = " << mflops(total_macs) << "e6 FLOPs ("
     << mflops(2 * total_macs) << "e6 counting mult and add separately)\n";
  os << "total (dense equivalent):  " << dense_macs << " MACs = " << mflops(dense_macs) << "e6 FLOPs\n";
  os << "\nreference x2 FLOPs (1e6), 64x64 output:\n";
  for (const auto& ref : reference_flops()) {
    os << "  " << std::left << std::setw(14) << ref.method << std::setw(16) << ref.input << std::right
       << std::fixed << std::setprecision(2) << ref.mflops << "\n";
  }
  return os.str();
}

std::string FlopsReport::key_values() const {
  std::ostringstream os;
  os << "input=" << input_h << "x" << input_w << "\n";
  os << "convention=" << convention << "\n";
  for (const auto& row : rows) {
    if (row.elementwise) {
      os << "layer." << row.name << ".elementwise=" << row.output.str() << "\n";
    } else {
      os << "layer." << row.name << ".macs=" << row.macs << "\n";
      os << "layer." << row.name << ".dense_macs=" << row.dense_macs << "\n";
    }
  }
  os << "total_macs=" << total_macs << "\n";
  os << "total_flops_2x=" << 2 * total_macs << "\n";
  os << "dense_macs=" << dense_macs << "\n";
  for (const auto& ref : reference_flops()) os << "reference." << ref.method << "=" << std::fixed << std::setprecision(2) << ref.mflops << "e6\n";
  return os.str();
}

template FlopsReport count_flops(const Model<float>&, std::size_t, std::size_t);
template FlopsReport count_flops(const Model<double>&, std::size_t, std::size_t);
template std::uint64_t instrumented_macs(const Model<float>&, const Tensor<float>&);
template std::uint64_t instrumented_macs(const Model<double>&, const Tensor<double>&);

}  // namespace srcn

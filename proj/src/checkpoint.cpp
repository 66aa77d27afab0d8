// Checkpoint byte layout (all integers little-endian u64 unless noted):
//
//   "SRCNCKPT" | u32 version | u32 sizeof(T)
//   ModelConfig: scale blocks layers growth groups factor stem bottleneck
//                deconv expansion | f64 slope
//   TrainSchedule: epochs batch | f64 lr0 eps lambda clip
//   seed | epochs_done | global_step | dataset_size | adam_steps
//   param_count, then per parameter:
//     u32 name_len | name | n c h w | values | adam m | adam v
//     (moments are all-zero when the optimizer has not stepped yet)
//   lgc_count, then per layer: stage | mask_len | mask bytes
#include <bit>
#include <cstring>
#include <fstream>
#include <optional>

#include "srcondense/errors.hpp"
#include "srcondense/training.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace srcn {
namespace {

constexpr char kMagic[8] = {'S', 'R', 'C', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write checkpoint " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  template <typename T>
  void values(const Tensor<T>& t) {
    bytes(t.raw(), t.numel() * sizeof(T));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing checkpoint " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open checkpoint " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated checkpoint " + path_.string());
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  template <typename T>
  Tensor<T> values(const Shape& s) {
    Tensor<T> t(s);
    bytes(t.raw(), t.numel() * sizeof(T));
    return t;
  }
  /// Guards allocations driven by counts read from the file.
  std::uint64_t bounded(std::uint64_t limit, const char* what) {
    const std::uint64_t v = u64();
    if (v > limit) throw IoError(std::string("corrupt checkpoint: implausible ") + what);
    return v;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

void write_config(Writer& w, const ModelConfig& c) {
  for (std::size_t v : {c.scale, c.num_blocks, c.layers_per_block, c.growth, c.groups, c.condense_factor,
                        c.stem_channels, c.bottleneck_channels, c.deconv_channels, c.lgc_expansion})
    w.u64(v);
  w.f64(c.leaky_slope);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  for (std::size_t* v : {&c.scale, &c.num_blocks, &c.layers_per_block, &c.growth, &c.groups, &c.condense_factor,
                         &c.stem_channels, &c.bottleneck_channels, &c.deconv_channels, &c.lgc_expansion})
    *v = r.bounded(1u << 16, "model width");
  c.leaky_slope = r.f64();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint holds an invalid model config: ") + e.what());
  }
  return c;
}

struct Contents {
  ModelConfig config;
  TrainSchedule schedule;
  std::uint64_t seed, epochs_done, step, dataset_size, adam_steps;
};

template <typename T>
struct Loaded {
  Contents head;
  std::optional<Model<T>> model;
  std::vector<Tensor<T>> m, v;
};

template <typename T>
Loaded<T> read_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw IoError(path.string() + " is not a checkpoint");
  if (const auto v = r.u32(); v != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(v));
  if (const auto size = r.u32(); size != sizeof(T)) {
    throw IoError("checkpoint stores " + std::to_string(size * 8) + "-bit values, expected " +
                  std::to_string(sizeof(T) * 8));
  }
  Loaded<T> out;
  Contents& h = out.head;
  h.config = read_config(r);
  h.schedule.total_epochs = r.u64();
  h.schedule.batch_size = r.u64();
  h.schedule.lr0 = r.f64();
  h.schedule.charbonnier_eps = r.f64();
  h.schedule.lasso_lambda = r.f64();
  h.schedule.clip_norm = r.f64();
  h.seed = r.u64();
  h.epochs_done = r.u64();
  h.step = r.u64();
  h.dataset_size = r.u64();
  h.adam_steps = r.u64();

  Model<T> model = Model<T>::build(h.config, 0);
  const auto params = model.named_parameters();
  if (r.u64() != params.size()) throw IoError("checkpoint parameter count does not match its config");
  for (const auto& p : params) {
    const std::uint32_t len = r.u32();
    if (len > 4096) throw IoError("corrupt checkpoint: parameter name too long");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    if (name != p.name) throw IoError("checkpoint parameter " + name + " where " + p.name + " was expected");
    Shape s{r.u64(), r.u64(), r.u64(), r.u64()};
    if (s != p.var.shape()) throw IoError("checkpoint shape " + s.str() + " for " + name);
    p.var.node()->value = r.values<T>(s);
    out.m.push_back(r.values<T>(s));
    out.v.push_back(r.values<T>(s));
  }
  auto layers = model.lgc_layers();
  if (r.u64() != layers.size()) throw IoError("checkpoint LGC layer count does not match its config");
  for (auto* l : layers) {
    const std::uint64_t stage = r.u64();
    const std::uint64_t len = r.bounded(l->mask().size(), "mask length");
    std::vector<std::uint8_t> mask(len);
    r.bytes(mask.data(), len);
    try {
      l->restore(std::move(mask), stage);
    } catch (const std::exception& e) {
      throw IoError(std::string("checkpoint mask rejected: ") + e.what());
    }
  }
  r.expect_end();
  out.model.emplace(std::move(model));
  return out;
}

}  // namespace

template <typename T>
void Trainer<T>::save(const std::filesystem::path& path) const {
  Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  w.u32(sizeof(T));
  write_config(w, model_.config());
  w.u64(schedule_.total_epochs);
  w.u64(schedule_.batch_size);
  w.f64(schedule_.lr0);
  w.f64(schedule_.charbonnier_eps);
  w.f64(schedule_.lasso_lambda);
  w.f64(schedule_.clip_norm);
  w.u64(seed_);
  w.u64(epochs_done_);
  w.u64(step_);
  w.u64(dataset_size_);
  w.u64(adam_.steps());

  const auto params = model_.named_parameters();
  const auto& m = adam_.first_moments();
  const auto& v = adam_.second_moments();
  w.u64(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    const Shape& s = p.var.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) w.u64(d);
    w.values(p.var.value());
    if (m.empty()) {
      const Tensor<T> zero(s);
      w.values(zero);
      w.values(zero);
    } else {
      w.values(m[k]);
      w.values(v[k]);
    }
  }
  const auto layers = model_.lgc_layers();
  w.u64(layers.size());
  for (const auto* l : layers) {
    w.u64(l->stage());
    w.u64(l->mask().size());
    w.bytes(l->mask().data(), l->mask().size());
  }
  w.finish();
}

template <typename T>
Trainer<T> Trainer<T>::load(const std::filesystem::path& path) {
  Loaded<T> data = read_checkpoint<T>(path);
  const Contents& h = data.head;
  Trainer t(std::move(*data.model), h.schedule, h.seed);
  t.epochs_done_ = h.epochs_done;
  t.step_ = h.step;
  t.dataset_size_ = h.dataset_size;
  if (h.adam_steps > 0) t.adam_.restore(h.adam_steps, std::move(data.m), std::move(data.v));
  return t;
}

template <typename T>
Model<T> load_model(const std::filesystem::path& path) {
  return std::move(*read_checkpoint<T>(path).model);
}

template void Trainer<float>::save(const std::filesystem::path&) const;
template void Trainer<double>::save(const std::filesystem::path&) const;
template Trainer<float> Trainer<float>::load(const std::filesystem::path&);
template Trainer<double> Trainer<double>::load(const std::filesystem::path&);
template Model<float> load_model(const std::filesystem::path&);
template Model<double> load_model(const std::filesystem::path&);

}  // namespace srcn

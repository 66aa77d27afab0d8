#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "srcondense/errors.hpp"
#include "srcondense/evaluation.hpp"
#include "srcondense/flops.hpp"
#include "srcondense/training.hpp"

namespace srcn::cli {

namespace fs = std::filesystem;

namespace {

#ifdef SRCN_FIXTURE_DIR
const fs::path kFixtures = SRCN_FIXTURE_DIR;
#else
const fs::path kFixtures = "tests/data/fixtures";
#endif

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string dashed(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

/// Options shared by the commands that build or describe a model.
struct ModelFlags {
  ModelConfig config;
  void add(CLI::App& app) {
    app.add_option("--scale", config.scale, "Upscaling factor (2, 3 or 4)");
    app.add_option("--blocks", config.num_blocks, "Dense blocks");
    app.add_option("--layers", config.layers_per_block, "Denselayers per block");
    app.add_option("--growth", config.growth, "Growth rate");
    app.add_option("--groups", config.groups, "LGC and grouped-conv groups");
    app.add_option("--condense-factor", config.condense_factor, "Condensing factor C");
    app.add_option("--stem", config.stem_channels, "Stem convolution width");
    app.add_option("--bottleneck", config.bottleneck_channels, "Bottleneck width");
    app.add_option("--deconv", config.deconv_channels, "Deconvolution width");
    app.add_option("--expansion", config.lgc_expansion, "LGC width as a multiple of growth");
    app.add_option("--slope", config.leaky_slope, "LeakyReLU negative slope");
  }
};

struct TrainFlags {
  bool toy = false;
  fs::path train_dir, val_dir, out = "srcn_run", resume;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  TrainSchedule schedule;
};

/// Toy preset: the bundled fixtures and a one-block model, short enough for
/// CI. Explicit flags and config keys still win.
void apply_toy(ModelConfig& model, TrainFlags& t, const CLI::App& app) {
  const ModelConfig toy = ModelConfig::toy();
  auto unset = [&](const char* name) { return app.get_option(name)->count() == 0; };
  if (unset("--blocks")) model.num_blocks = toy.num_blocks;
  if (unset("--layers")) model.layers_per_block = toy.layers_per_block;
  if (unset("--bottleneck")) model.bottleneck_channels = toy.bottleneck_channels;
  if (unset("--deconv")) model.deconv_channels = toy.deconv_channels;
  const TrainSchedule toy_schedule = TrainSchedule::toy();
  if (unset("--epochs")) t.schedule.total_epochs = toy_schedule.total_epochs;
  if (unset("--lr")) t.schedule.lr0 = toy_schedule.lr0;
  if (unset("--batch-size")) t.schedule.batch_size = toy_schedule.batch_size;
  if (unset("--train-dir")) t.train_dir = kFixtures / "train";
  if (unset("--val-dir")) t.val_dir = kFixtures / "val";
}

std::string fmt(double v, int precision = 17) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string summary_lines(const EvalSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "images=" << s.images.size() << "\n";
  os << "psnr=" << s.mean_psnr << "\n";
  os << "ssim=" << s.mean_ssim << "\n";
  os << "bicubic_psnr=" << s.mean_bicubic_psnr << "\n";
  os << "bicubic_ssim=" << s.mean_bicubic_ssim << "\n";
  os << "psnr_gain=" << s.mean_psnr - s.mean_bicubic_psnr << "\n";
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

void require_dir(const fs::path& dir, const char* what) {
  if (dir.empty()) throw IoError(std::string(what) + " directory not given");
  if (!fs::is_directory(dir)) throw IoError(std::string(what) + " directory not found: " + dir.string());
}

void require_file(const fs::path& file, const char* what) {
  if (file.empty()) throw IoError(std::string(what) + " not given");
  if (!fs::is_regular_file(file)) throw IoError(std::string(what) + " not found: " + file.string());
}

/// Inference copy: converted LGC layers once condensing has finished.
Model<float> inference_model(const Model<float>& m) {
  for (const auto* l : m.lgc_layers())
    if (l->stage() != l->final_stage()) return m.clone();
  return m.freeze_for_inference();
}

int cmd_train(const ModelConfig& model_config, const TrainFlags& f, std::ostream& out) {
  f.schedule.validate();
  model_config.validate();
  require_dir(f.train_dir, "training");
  if (!f.val_dir.empty()) require_dir(f.val_dir, "validation");
  if (!f.resume.empty()) require_file(f.resume, "resume checkpoint");

  std::optional<Trainer<float>> trainer;
  if (!f.resume.empty()) {
    trainer.emplace(Trainer<float>::load(f.resume));
  } else {
    trainer.emplace(Model<float>::build(model_config, f.seed), f.schedule, f.seed);
  }
  const std::size_t scale = trainer->model().config().scale;
  const PatchDataset data = PatchDataset::from_directory(f.train_dir, scale);
  if (data.empty()) throw IoError("no training patches in " + f.train_dir.string());
  std::vector<EvalSample> val;
  if (!f.val_dir.empty()) val = load_eval_set(f.val_dir, scale);

  fs::create_directories(f.out / "checkpoints");
  std::ofstream log(f.out / "metrics.csv");
  log << "epoch,loss,charbonnier,lr,retained_fraction,condensed\n";
  out << "training on " << data.size() << " patches, " << trainer->schedule().total_epochs << " epochs, condense at";
  for (std::size_t e : trainer->schedule().condense_epochs(trainer->model().config().condense_factor)) out << " " << e;
  out << "\n";

  trainer->run(data, [&](const EpochStats& e, const Trainer<float>& t) {
    log << e.epoch << "," << fmt(e.mean_loss) << "," << fmt(e.mean_charbonnier) << "," << fmt(e.lr) << ","
        << fmt(e.retained_fraction) << "," << (e.condensed ? 1 : 0) << "\n";
    log.flush();
    std::ostringstream name;
    name << "epoch_" << std::setw(3) << std::setfill('0') << e.epoch << ".ckpt";
    t.save(f.out / "checkpoints" / name.str());
    out << "epoch " << e.epoch << " loss " << fmt(e.mean_loss, 6) << " lr " << fmt(e.lr, 4) << " retained "
        << fmt(e.retained_fraction, 4) << (e.condensed ? " (condensed)" : "") << "\n";
  });
  trainer->save(f.out / "model.ckpt");

  if (!val.empty()) {
    const auto summary = evaluate(inference_model(trainer->model()), val, scale, f.jobs);
    const std::string text = summary_lines(summary);
    write_text(f.out / "val_summary.txt", text);
    out << text;
  }
  return kExitOk;
}

struct EvalFlags {
  fs::path checkpoint, data, out = "srcn_eval";
  std::optional<std::size_t> shave;
  std::size_t jobs = 1;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  require_file(f.checkpoint, "checkpoint");
  require_dir(f.data, "dataset");
  const Model<float> model = inference_model(load_model<float>(f.checkpoint));
  const std::size_t scale = model.config().scale;
  const auto samples = load_eval_set(f.data, scale);
  const auto summary = evaluate(model, samples, f.shave.value_or(scale), f.jobs);

  fs::create_directories(f.out);
  std::ostringstream csv;
  csv << std::fixed << std::setprecision(6) << "image,psnr,ssim,bicubic_psnr,bicubic_ssim\n";
  for (const auto& r : summary.images) {
    csv << r.name << "," << r.psnr << "," << r.ssim << "," << r.bicubic_psnr << "," << r.bicubic_ssim << "\n";
  }
  write_text(f.out / "eval.csv", csv.str());
  const std::string text = summary_lines(summary);
  write_text(f.out / "summary.txt", text);
  out << text;
  return kExitOk;
}

struct SrFlags {
  fs::path checkpoint, input, out = "srcn_sr";
};

int cmd_sr(const SrFlags& f, std::ostream& out) {
  require_file(f.checkpoint, "checkpoint");
  require_file(f.input, "input image");
  const Image8 image = read_image(f.input);
  const Model<float> model = inference_model(load_model<float>(f.checkpoint));
  const std::size_t r = model.config().scale;

  Image8 result;
  if (image.channels == 1) {
    result = to_gray8(super_resolve(model, luma(image)));
  } else {
    const auto rgb = split_rgb(image);
    const auto ycc = rgb_to_ycbcr(rgb[0], rgb[1], rgb[2]);
    const ImagePlane y = super_resolve(model, ycc[0]);
    ImagePlane cb = bicubic_resize(ycc[1], y.height, y.width);
    ImagePlane cr = bicubic_resize(ycc[2], y.height, y.width);
    const auto back = ycbcr_to_rgb(y, cb, cr);
    result = merge_rgb(back[0], back[1], back[2]);
  }
  fs::create_directories(f.out);
  const fs::path target = f.out / (f.input.stem().string() + "_x" + std::to_string(r) + ".png");
  write_png(target, result);
  out << "wrote " << target.string() << " (" << result.width << "x" << result.height << ")\n";
  return kExitOk;
}

struct DescribeFlags {
  fs::path checkpoint;
  std::size_t height = 32, width = 32;
};

int cmd_flops(const ModelConfig& config, const DescribeFlags& f, std::ostream& out) {
  FlopsReport report;
  if (!f.checkpoint.empty()) {
    require_file(f.checkpoint, "checkpoint");
    report = count_flops(load_model<float>(f.checkpoint), f.height, f.width);
  } else {
    report = count_flops(config, f.height, f.width);
  }
  out << report.text() << "\n" << report.key_values();
  return kExitOk;
}

int cmd_inspect(const ModelConfig& config, const DescribeFlags& f, std::ostream& out) {
  std::optional<Model<float>> model;
  if (!f.checkpoint.empty()) {
    require_file(f.checkpoint, "checkpoint");
    model.emplace(load_model<float>(f.checkpoint));
  } else {
    model.emplace(Model<float>::build(config, 0));
  }
  const auto& blocks = model->blocks();
  out << std::fixed << std::setprecision(1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t l = 0; l < blocks[b].size(); ++l) {
      const auto& lgc = blocks[b][l].lgc;
      const double retained = 100.0 * static_cast<double>(lgc.active_connections()) /
                              static_cast<double>(lgc.in_channels() * lgc.out_channels());
      out << "blocks." << b << ".layers." << l << ".lgc stage=" << lgc.stage() << "/" << lgc.final_stage()
          << " kept_per_group=" << lgc.kept_columns(0).size() << "/" << lgc.in_channels()
          << " retained=" << retained << "%\n";
    }
  }
  out << "retained_fraction=" << std::setprecision(4) << retained_fraction(*model) << "\n";
  out << "parameters=" << model->count_params() << " active_parameters=" << model->count_active_params() << "\n";
  return kExitOk;
}

/// Config-file keys become `--key=value` tokens placed ahead of the real
/// flags; with take-last semantics the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::optional<fs::path> file;
  std::string command;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (command.empty() && !args[i].empty() && args[i][0] != '-') command = args[i];
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (!file || command.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(command);
  if (sub == nullptr) return args;
  if (!fs::is_regular_file(*file)) throw IoError("config file not found: " + file->string());

  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(*file)) {
    const std::string flag = "--" + dashed(key);
    if (flag == "--config" || sub->get_option_no_throw(flag) == nullptr) {
      throw ConfigError("unknown key '" + key + "' in " + file->string() + " for command " + command);
    }
    injected.push_back(flag + "=" + value);
  }
  std::vector<std::string> out;
  bool placed = false;
  for (const auto& a : args) {
    out.push_back(a);
    if (!placed && a == command) {
      out.insert(out.end(), injected.begin(), injected.end());
      placed = true;
    }
  }
  return out;
}

constexpr const char* kConfigHelp =
    "Config file: one `key = value` per line, '#' comments. Keys are the long flag names of the\n"
    "command (dashes or underscores), e.g. scale, blocks, layers, growth, groups, condense_factor,\n"
    "stem, bottleneck, deconv, expansion, slope, epochs, lr, batch_size, lambda, charbonnier_eps,\n"
    "clip, seed, train_dir, val_dir, out, jobs, toy. Flags override file values; unknown keys are\n"
    "rejected.";

}  // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": key '" + key + "' repeated");
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SRCondenseNet: super-resolution with learned group convolutions"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ModelFlags model_flags;
  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoints and metrics.csv under --out");
  train_cmd->add_option("--config", "Flat key = value config file");
  model_flags.add(*train_cmd);
  train_cmd->add_flag("--toy", train.toy, "Bundled fixtures, 1 block x 2 layers, 30 epochs of batch 4 at lr 3e-3");
  train_cmd->add_option("--train-dir", train.train_dir, "Directory of training images");
  train_cmd->add_option("--val-dir", train.val_dir, "Directory of held-out images (optional)");
  train_cmd->add_option("--out", train.out, "Output directory")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--epochs", train.schedule.total_epochs, "Total epochs")->capture_default_str();
  train_cmd->add_option("--lr", train.schedule.lr0, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", train.schedule.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--lambda", train.schedule.lasso_lambda, "Group-lasso weight")->capture_default_str();
  train_cmd->add_option("--charbonnier-eps", train.schedule.charbonnier_eps, "Charbonnier epsilon")
      ->capture_default_str();
  train_cmd->add_option("--clip", train.schedule.clip_norm, "Gradient-norm clip (0 = off)")->capture_default_str();
  train_cmd->add_option("--resume", train.resume, "Continue from a checkpoint");
  train_cmd->add_option("--jobs", train.jobs, "Threads for the validation pass")->capture_default_str();

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint against bicubic on a dataset");
  eval_cmd->add_option("--config", "Flat key = value config file");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--data", eval.data, "HR images, or HR/ and LR/ subdirectories");
  eval_cmd->add_option("--out", eval.out, "Output directory")->capture_default_str();
  eval_cmd->add_option("--shave", eval.shave, "Border pixels excluded from metrics (default: scale)");
  eval_cmd->add_option("--jobs", eval.jobs, "Images evaluated in parallel")->capture_default_str();

  SrFlags sr;
  auto* sr_cmd = app.add_subcommand("sr", "Super-resolve one image to <out>/<stem>_x<r>.png");
  sr_cmd->add_option("--config", "Flat key = value config file");
  sr_cmd->add_option("--checkpoint", sr.checkpoint, "Model checkpoint");
  sr_cmd->add_option("--input", sr.input, "Input image (PNG/PGM/PPM)");
  sr_cmd->add_option("--out", sr.out, "Output directory")->capture_default_str();

  DescribeFlags describe;
  ModelFlags describe_model;
  auto* flops_cmd = app.add_subcommand("flops", "Multiply-add report for a config or checkpoint");
  auto* inspect_cmd = app.add_subcommand("inspect", "Per-layer LGC retention of a config or checkpoint");
  for (auto* cmd : {flops_cmd, inspect_cmd}) {
    cmd->add_option("--config", "Flat key = value config file");
    describe_model.add(*cmd);
    cmd->add_option("--checkpoint", describe.checkpoint, "Model checkpoint (overrides model flags)");
  }
  flops_cmd->add_option("--height", describe.height, "Input height")->capture_default_str();
  flops_cmd->add_option("--width", describe.width, "Input width")->capture_default_str();

  try {
    std::vector<std::string> argv = expand_config(args, app);
    std::reverse(argv.begin(), argv.end());  // CLI11 consumes from the back
    try {
      app.parse(argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (*train_cmd) {
      if (train.toy) apply_toy(model_flags.config, train, *train_cmd);
      return cmd_train(model_flags.config, train, out);
    }
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*sr_cmd) return cmd_sr(sr, out);
    if (*flops_cmd) return cmd_flops(describe_model.config, describe, out);
    if (*inspect_cmd) return cmd_inspect(describe_model.config, describe, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace srcn::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "srcondense/model.hpp"
#include "srcondense/patches.hpp"

namespace srcn {

/// mean(sqrt((pred - target)^2 + eps^2)). Gradients flow into both sides.
template <typename T>
[[nodiscard]] Var<T> charbonnier_loss(const Var<T>& pred, const Var<T>& target, T eps);

/// 0.5 * lr0 * (1 + cos(pi * step / total_steps)).
[[nodiscard]] double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0);

struct TrainSchedule {
  std::size_t total_epochs = 180;
  double lr0 = 1e-4;
  std::size_t batch_size = 16;
  double charbonnier_eps = 1e-3;
  double lasso_lambda = 1e-5;
  /// Global L2 gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;

  void validate() const;

  /// 30 epochs with small batches and a higher rate, sized for the bundled
  /// fixtures (about 1200 optimizer steps).
  static TrainSchedule toy() {
    TrainSchedule s;
    s.total_epochs = 30;
    s.lr0 = 3e-3;
    s.batch_size = 4;
    return s;
  }

  /// Epoch length of one condensing stage: the first half of the run split
  /// into C-1 stages (at least one epoch each).
  [[nodiscard]] std::size_t stage_length(std::size_t condense_factor) const;
  /// 1-indexed epochs at whose end every LGC layer condenses once.
  [[nodiscard]] std::vector<std::size_t> condense_epochs(std::size_t condense_factor) const;
  /// Group lasso applies while condensing stages last.
  [[nodiscard]] bool lasso_active(std::size_t epoch, std::size_t condense_factor) const;
  [[nodiscard]] std::size_t steps_per_epoch(std::size_t dataset_size) const {
    return (dataset_size + batch_size - 1) / batch_size;
  }

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

/// Bias-corrected Adam over a model's named parameters. Masked LGC entries
/// are never updated and their moments stay at zero.
template <typename T>
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update with the gradients currently held by `params`. A parameter
  /// without a gradient is treated as having a zero gradient.
  void step(std::span<const NamedParameter<T>> params, double lr);
  /// Clears the moments of entries masked in `params` (after condensing).
  void zero_masked(std::span<const NamedParameter<T>> params);

  [[nodiscard]] std::uint64_t steps() const { return t_; }
  [[nodiscard]] const std::vector<Tensor<T>>& first_moments() const { return m_; }
  [[nodiscard]] const std::vector<Tensor<T>>& second_moments() const { return v_; }
  /// Replaces the state wholesale (checkpoint loading).
  void restore(std::uint64_t steps, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v);

 private:
  void ensure(std::span<const NamedParameter<T>> params);

  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-indexed
  double mean_loss = 0;   // full objective
  double mean_charbonnier = 0;
  double lr = 0;  // rate used by the epoch's last step
  /// Mean over LGC layers of kept connections / all connections, after any
  /// condensing at the end of this epoch.
  double retained_fraction = 1;
  bool condensed = false;
};

/// Owns a model and its optimizer state; advances one epoch at a time so
/// callers can checkpoint between epochs.
template <typename T>
class Trainer {
 public:
  Trainer(Model<T> model, TrainSchedule schedule, std::uint64_t seed);

  [[nodiscard]] bool finished() const { return epochs_done_ >= schedule_.total_epochs; }
  /// Runs the next epoch. Throws NumericError naming epoch and batch on a
  /// non-finite loss.
  EpochStats run_epoch(const PatchDataset& data);
  /// Runs the remaining epochs, invoking `on_epoch` after each one.
  std::vector<EpochStats> run(const PatchDataset& data,
                              const std::function<void(const EpochStats&, const Trainer&)>& on_epoch = {});

  [[nodiscard]] const Model<T>& model() const { return model_; }
  [[nodiscard]] Model<T>& model() { return model_; }
  [[nodiscard]] const TrainSchedule& schedule() const { return schedule_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::size_t epochs_done() const { return epochs_done_; }
  [[nodiscard]] std::uint64_t global_step() const { return step_; }
  [[nodiscard]] const Adam<T>& optimizer() const { return adam_; }

  /// Little-endian binary checkpoint of everything needed to resume.
  void save(const std::filesystem::path& path) const;
  static Trainer load(const std::filesystem::path& path);

 private:
  Model<T> model_;
  TrainSchedule schedule_;
  std::uint64_t seed_;
  Adam<T> adam_;
  std::size_t epochs_done_ = 0;
  std::uint64_t step_ = 0;
  std::size_t dataset_size_ = 0;  // fixed by the first epoch
};

/// Mean retained connection fraction over a model's LGC layers.
template <typename T>
[[nodiscard]] double retained_fraction(const Model<T>& model);

/// Model weights from a checkpoint written by Trainer::save.
template <typename T>
[[nodiscard]] Model<T> load_model(const std::filesystem::path& path);

extern template class Adam<float>;
extern template class Adam<double>;
extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace srcn

#include "srcondense/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "srcondense/errors.hpp"

namespace srcn {

template <typename T>
Var<T> charbonnier_loss(const Var<T>& pred, const Var<T>& target, T eps) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("charbonnier_loss: shape mismatch " + pred.shape().str() + " vs " + target.shape().str());
  }
  const std::size_t n = pred.value().numel();
  if (n == 0) throw DimensionError("charbonnier_loss: empty input");
  const T* p = pred.value().raw();
  const T* q = target.value().raw();
  std::vector<T> root(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = p[i] - q[i];
    root[i] = std::sqrt(d * d + eps * eps);
    acc += root[i];
  }
  const T mean = static_cast<T>(acc / static_cast<double>(n));
  return make_result<T>(Tensor<T>({1, 1, 1, 1}, mean), {pred, target},
                        [root = std::move(root), n](Node<T>& self) {
                          const T g = self.grad[0] / static_cast<T>(n);
                          const T* pv = self.parents[0]->value.raw();
                          const T* tv = self.parents[1]->value.raw();
                          for (int side = 0; side < 2; ++side) {
                            auto& parent = self.parents[side];
                            if (!parent->requires_grad) continue;
                            const T sign = side == 0 ? T(1) : T(-1);
                            T* d = parent->grad_buffer().raw();
                            for (std::size_t i = 0; i < n; ++i) d[i] += sign * g * (pv[i] - tv[i]) / root[i];
                          }
                        });
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0) {
  if (total_steps == 0) throw ContractError("cosine_lr: zero total steps");
  if (step > total_steps) throw ContractError("cosine_lr: step beyond total");
  if (step == total_steps) return 0.0;  // cos(pi) rounds to -1 + tiny
  if (2 * step == total_steps) return 0.5 * lr0;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * frac));
}

void TrainSchedule::validate() const {
  if (total_epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(lr0 > 0) || !std::isfinite(lr0)) throw ConfigError("learning rate must be positive");
  if (!(charbonnier_eps > 0)) throw ConfigError("Charbonnier eps must be positive");
  if (!(lasso_lambda >= 0)) throw ConfigError("group-lasso lambda must be non-negative");
  if (!(clip_norm >= 0)) throw ConfigError("clip norm must be non-negative");
}

std::size_t TrainSchedule::stage_length(std::size_t condense_factor) const {
  if (condense_factor <= 1) return 0;
  return std::max<std::size_t>(1, total_epochs / (2 * (condense_factor - 1)));
}

std::vector<std::size_t> TrainSchedule::condense_epochs(std::size_t condense_factor) const {
  std::vector<std::size_t> out;
  const std::size_t len = stage_length(condense_factor);
  for (std::size_t k = 1; k < condense_factor; ++k) out.push_back(k * len);
  if (!out.empty() && out.back() > total_epochs) {
    throw ConfigError(std::to_string(total_epochs) + " epochs cannot hold " + std::to_string(condense_factor - 1) +
                      " condensing stages");
  }
  return out;
}

bool TrainSchedule::lasso_active(std::size_t epoch, std::size_t condense_factor) const {
  return condense_factor > 1 && epoch <= (condense_factor - 1) * stage_length(condense_factor);
}

template <typename T>
void Adam<T>::ensure(std::span<const NamedParameter<T>> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.var.shape());
      v_.emplace_back(p.var.shape());
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].shape() != params[i].var.shape()) throw ContractError("Adam: shape changed for " + params[i].name);
  }
}

template <typename T>
void Adam<T>::step(std::span<const NamedParameter<T>> params, double lr) {
  ensure(params);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    const bool has = p.var.has_grad();
    const T* g = has ? p.var.grad().raw() : nullptr;
    T* w = p.var.node()->value.raw();
    T* m = m_[k].raw();
    T* v = v_[k].raw();
    const std::vector<std::uint8_t>* mask = p.mask;
    for (std::size_t i = 0; i < m_[k].numel(); ++i) {
      if (mask && (*mask)[i] == 0) continue;
      const double gi = has ? static_cast<double>(g[i]) : 0.0;
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      w[i] = static_cast<T>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
    }
  }
}

template <typename T>
void Adam<T>::zero_masked(std::span<const NamedParameter<T>> params) {
  if (m_.empty()) return;
  ensure(params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].mask) continue;
    const auto& mask = *params[k].mask;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] == 0) {
        m_[k][i] = T(0);
        v_[k][i] = T(0);
      }
    }
  }
}

template <typename T>
void Adam<T>::restore(std::uint64_t steps, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
  if (m.size() != v.size()) throw ContractError("Adam::restore: moment lists differ in length");
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

template <typename T>
double retained_fraction(const Model<T>& model) {
  const auto layers = model.lgc_layers();
  if (layers.empty()) return 1.0;
  double acc = 0;
  for (const auto* l : layers) {
    acc += static_cast<double>(l->active_connections()) / static_cast<double>(l->in_channels() * l->out_channels());
  }
  return acc / static_cast<double>(layers.size());
}

template <typename T>
Trainer<T>::Trainer(Model<T> model, TrainSchedule schedule, std::uint64_t seed)
    : model_(std::move(model)), schedule_(schedule), seed_(seed) {
  schedule_.validate();
  if (model_.frozen()) throw ContractError("Trainer: cannot train a frozen model");
  (void)schedule_.condense_epochs(model_.config().condense_factor);
}

template <typename T>
EpochStats Trainer<T>::run_epoch(const PatchDataset& data) {
  if (data.empty()) throw ContractError("Trainer: empty dataset");
  if (finished()) throw ContractError("Trainer: all epochs already run");
  if (dataset_size_ == 0) dataset_size_ = data.size();
  if (dataset_size_ != data.size()) {
    throw ContractError("Trainer: dataset size changed from " + std::to_string(dataset_size_) + " to " +
                        std::to_string(data.size()));
  }
  const std::size_t epoch = epochs_done_ + 1;
  const std::size_t factor = model_.config().condense_factor;
  const std::size_t steps = schedule_.steps_per_epoch(data.size());
  const std::uint64_t total_steps = static_cast<std::uint64_t>(steps) * schedule_.total_epochs;
  const bool lasso = schedule_.lasso_active(epoch, factor) && schedule_.lasso_lambda > 0;
  const T eps = static_cast<T>(schedule_.charbonnier_eps);

  const auto order = data.epoch_order(seed_, epoch);
  const auto params = model_.named_parameters();
  EpochStats stats;
  stats.epoch = epoch;
  double loss_acc = 0;
  double charb_acc = 0;
  for (std::size_t b = 0; b < steps; ++b) {
    const std::size_t begin = b * schedule_.batch_size;
    const std::size_t end = std::min(order.size(), begin + schedule_.batch_size);
    auto [lr_t, hr_t] = data.batch<T>(std::span<const std::size_t>(order).subspan(begin, end - begin));
    for (const auto& p : params) p.var.zero_grad();

    const Var<T> pred = model_.forward(Var<T>(std::move(lr_t)));
    const Var<T> charb = charbonnier_loss(pred, Var<T>(std::move(hr_t)), eps);
    Var<T> loss = charb;
    if (lasso) loss = add(loss, scale(model_.group_lasso(), static_cast<T>(schedule_.lasso_lambda)));
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                         " of " + std::to_string(steps));
    }
    backward(loss);

    if (schedule_.clip_norm > 0) {
      double sq = 0;
      for (const auto& p : params)
        if (p.var.has_grad())
          for (T g : p.var.grad().data()) sq += static_cast<double>(g) * g;
      const double norm = std::sqrt(sq);
      if (norm > schedule_.clip_norm) {
        const T f = static_cast<T>(schedule_.clip_norm / norm);
        for (const auto& p : params)
          if (p.var.has_grad())
            for (T& g : p.var.node()->grad.data()) g *= f;
      }
    }

    stats.lr = cosine_lr(step_, total_steps, schedule_.lr0);
    adam_.step(params, stats.lr);
    ++step_;
    loss_acc += value;
    charb_acc += charb.value()[0];
  }
  for (const auto& p : params) p.var.zero_grad();

  const auto events = schedule_.condense_epochs(factor);
  if (std::find(events.begin(), events.end(), epoch) != events.end()) {
    model_.condense_all();
    adam_.zero_masked(params);
    stats.condensed = true;
  }
  stats.mean_loss = loss_acc / static_cast<double>(steps);
  stats.mean_charbonnier = charb_acc / static_cast<double>(steps);
  stats.retained_fraction = retained_fraction(model_);
  epochs_done_ = epoch;
  return stats;
}

template <typename T>
std::vector<EpochStats> Trainer<T>::run(const PatchDataset& data,
                                        const std::function<void(const EpochStats&, const Trainer&)>& on_epoch) {
  std::vector<EpochStats> out;
  while (!finished()) {
    out.push_back(run_epoch(data));
    if (on_epoch) on_epoch(out.back(), *this);
  }
  return out;
}

template Var<float> charbonnier_loss(const Var<float>&, const Var<float>&, float);
template Var<double> charbonnier_loss(const Var<double>&, const Var<double>&, double);
template double retained_fraction(const Model<float>&);
template double retained_fraction(const Model<double>&);
template class Adam<float>;
template class Adam<double>;
template class Trainer<float>;
template class Trainer<double>;

}  // namespace srcn

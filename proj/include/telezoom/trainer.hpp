#pragma once

#include <functional>
#include <span>
#include <vector>

#include "telezoom/kernels.hpp"
#include "telezoom/model.hpp"

namespace telezoom {

struct TrainConfig {
  int max_epochs = 40;  // per training phase
  int patience = 5;     // early stopping on the validation objective
  int batch_size = 32;
  double lr = 1e-3;
  double grad_clip = 1.0;  // global gradient norm; <= 0 disables
  double emd_weight = 1.0;
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;
};

/// A window prepared for the network: normalized tokens and one or more
/// normalized targets (several when the window belongs to a collision class).
struct Sample {
  std::int64_t id = 0;
  std::vector<double> tokens;
  std::vector<std::vector<double>> targets;
  const WindowExample* window = nullptr;
};

std::vector<Sample> make_samples(const ImputationModel& model, const std::vector<WindowExample>& windows);

/// l_combine against the single target, or the minimum over a class of
/// targets with the gradient taken through the first minimizer.
double base_loss(const Sample& s, std::span<const double> z, double emd_weight, std::span<double> dz);

/// Extra per-example objective (the augmented-Lagrangian terms). Writes its
/// gradient with respect to the normalized output into dz (pre-zeroed).
using Penalty = std::function<double(const Sample& s, std::size_t index, std::span<const double> z, std::span<double> dz)>;

class Trainer {
 public:
  Trainer(ImputationModel& model, TrainConfig cfg);

  /// One shuffled pass. Batch objective: mean base loss + (N / B) * sum of
  /// penalties, so the expected batch gradient matches the full-sum gradient.
  double run_epoch(const std::vector<Sample>& train, const Penalty* penalty);

  /// Mean over samples of base loss + penalty_weight * penalty, eval mode.
  double evaluate(const std::vector<Sample>& samples, const Penalty* penalty, double penalty_weight) const;

  int epochs_done() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }
  ImputationModel& model() { return model_; }

 private:
  ImputationModel& model_;
  TrainConfig cfg_;
  Adam adam_;
  int epoch_ = 0;
};

struct PhaseLog {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;  // index into the curves
  double best_val = 0;
};

/// Trains until the validation objective stops improving for `patience`
/// epochs (or max_epochs), then restores the best parameters.
PhaseLog train_phase(Trainer& trainer, const std::vector<Sample>& train, const std::vector<Sample>& val,
                     const Penalty* penalty, const Penalty* val_penalty, double val_penalty_weight);

/// Plain training on l_combine (emd_weight = 0 gives the MSE-only baseline).
PhaseLog fit_plain(ImputationModel& model, const std::vector<WindowExample>& train,
                   const std::vector<WindowExample>& val, const TrainConfig& cfg);

/// Eval-mode normalized outputs for every sample.
std::vector<std::vector<double>> predict_all(const ImputationModel& model, const std::vector<Sample>& samples,
                                             Exec exec);

/// Eval-mode physical imputations (clamped at zero) for every window.
std::vector<FineSeries> impute_all(const ImputationModel& model, const std::vector<WindowExample>& windows, Exec exec);

}  // namespace telezoom

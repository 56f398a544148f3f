#include "telezoom/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "telezoom/losses.hpp"
#include "telezoom/refinement.hpp"

namespace telezoom {

std::vector<Sample> make_samples(const ImputationModel& model, const std::vector<WindowExample>& windows) {
  std::vector<Sample> out;
  out.reserve(windows.size());
  const double ts = model.normalizer().target_scale;
  for (const auto& w : windows) {
    Sample s;
    s.id = w.id;
    s.tokens = model.encode(w.input);
    if (w.target.values.size() != model.output_len()) {
      throw ShapeError("window " + std::to_string(w.id) + " target length does not match the model");
    }
    std::vector<double> t(w.target.values.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = w.target.values[i] / ts;
    s.targets.push_back(std::move(t));
    s.window = &w;
    out.push_back(std::move(s));
  }
  return out;
}

double base_loss(const Sample& s, std::span<const double> z, double emd_weight, std::span<double> dz) {
  if (s.targets.size() == 1) {
    auto r = l_combine_grad(z, s.targets[0], emd_weight);
    if (!dz.empty()) std::copy(r.grad.begin(), r.grad.end(), dz.begin());
    return r.value;
  }
  return l_class(z, s.targets, emd_weight, dz);
}

Trainer::Trainer(ImputationModel& model, TrainConfig cfg)
    : model_(model), cfg_(cfg), adam_(model.param_count(), cfg.lr) {
  if (cfg_.batch_size < 1) throw ConfigError("batch size must be positive");
  if (cfg_.max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (cfg_.emd_weight < 0) throw ConfigError("emd_weight must be non-negative");
}

double Trainer::run_epoch(const std::vector<Sample>& train, const Penalty* penalty) {
  if (train.empty()) throw DataError("empty training split");
  const std::size_t n = train.size();
  const std::size_t np = model_.param_count();
  const std::size_t out_len = model_.output_len();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(cfg_.seed, 0xe90c0000ull + static_cast<std::uint64_t>(epoch_)));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), n);
  const std::size_t chunk = std::min<std::size_t>(bs, static_cast<std::size_t>(std::max(1, omp_get_max_threads())));
  Matrix grads(chunk, np);
  std::vector<double> chunk_loss(chunk);
  std::vector<double> g(np);
  const double pen_scale = static_cast<double>(n);
  double epoch_loss = 0;
  const std::uint64_t epoch_seed = derive_seed(cfg_.seed, 0xd7000000ull + static_cast<std::uint64_t>(epoch_));

  for (std::size_t b0 = 0; b0 < n; b0 += bs) {
    const std::size_t b1 = std::min(n, b0 + bs);
    const double inv_b = 1.0 / static_cast<double>(b1 - b0);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t c0 = b0; c0 < b1; c0 += chunk) {
      const std::size_t c1 = std::min(b1, c0 + chunk);
      for_each_index(c1 - c0, cfg_.exec, [&](std::size_t r) {
        const std::size_t idx = order[c0 + r];
        const Sample& s = train[idx];
        ImputationModel::Cache cache;
        std::vector<double> z(out_len), dz(out_len, 0.0);
        Rng drop(derive_seed(epoch_seed, static_cast<std::uint64_t>(s.id)));
        model_.forward(s.tokens, z, &cache, &drop);
        double loss = base_loss(s, z, cfg_.emd_weight, dz);
        for (auto& v : dz) v *= inv_b;
        if (penalty != nullptr) {
          std::vector<double> dp(out_len, 0.0);
          const double p = (*penalty)(s, idx, z, dp);
          loss += pen_scale * p;
          for (std::size_t i = 0; i < out_len; ++i) dz[i] += pen_scale * inv_b * dp[i];
        }
        auto row = grads.row(r);
        std::fill(row.begin(), row.end(), 0.0);
        model_.backward(cache, dz, row);
        chunk_loss[r] = loss;
      });
      accumulate_rows(grads, c1 - c0, g, cfg_.exec);
      for (std::size_t r = 0; r < c1 - c0; ++r) epoch_loss += chunk_loss[r];
    }
    double norm2 = 0;
    for (double v : g) norm2 += v * v;
    if (!std::isfinite(norm2)) throw TrainingError("non-finite gradient in epoch " + std::to_string(epoch_));
    if (cfg_.grad_clip > 0) {
      const double norm = std::sqrt(norm2);
      if (norm > cfg_.grad_clip) {
        const double k = cfg_.grad_clip / norm;
        for (auto& v : g) v *= k;
      }
    }
    adam_.step(model_.params(), g);
  }
  ++epoch_;
  const double mean = epoch_loss / static_cast<double>(n);
  if (!std::isfinite(mean)) throw TrainingError("training loss became non-finite");
  return mean;
}

double Trainer::evaluate(const std::vector<Sample>& samples, const Penalty* penalty, double penalty_weight) const {
  if (samples.empty()) return 0;
  const std::size_t out_len = model_.output_len();
  std::vector<double> losses(samples.size());
  for_each_index(samples.size(), cfg_.exec, [&](std::size_t i) {
    std::vector<double> z(out_len);
    model_.forward(samples[i].tokens, z, nullptr, nullptr);
    double l = base_loss(samples[i], z, cfg_.emd_weight, {});
    if (penalty != nullptr) {
      std::vector<double> dp(out_len, 0.0);
      l += penalty_weight * (*penalty)(samples[i], i, z, dp);
    }
    losses[i] = l;
  });
  double s = 0;
  for (double v : losses) s += v;  // fixed order
  return s / static_cast<double>(samples.size());
}

PhaseLog train_phase(Trainer& trainer, const std::vector<Sample>& train, const std::vector<Sample>& val,
                     const Penalty* penalty, const Penalty* val_penalty, double val_penalty_weight) {
  PhaseLog log;
  const auto& cfg = trainer.config();
  const auto& eval_set = val.empty() ? train : val;
  std::vector<double> best_params = trainer.model().params();
  int since_best = 0;
  for (int e = 0; e < cfg.max_epochs; ++e) {
    log.train_loss.push_back(trainer.run_epoch(train, penalty));
    const double v = trainer.evaluate(eval_set, val_penalty, val_penalty_weight);
    if (!std::isfinite(v)) throw TrainingError("validation objective became non-finite");
    log.val_loss.push_back(v);
    if (log.best_epoch < 0 || v < log.best_val) {
      log.best_val = v;
      log.best_epoch = e;
      best_params = trainer.model().params();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  trainer.model().params() = std::move(best_params);
  return log;
}

PhaseLog fit_plain(ImputationModel& model, const std::vector<WindowExample>& train,
                   const std::vector<WindowExample>& val, const TrainConfig& cfg) {
  const auto ts = make_samples(model, train);
  const auto vs = make_samples(model, val);
  Trainer trainer(model, cfg);
  auto log = train_phase(trainer, ts, vs, nullptr, nullptr, 0.0);
  model.info["mode"] = cfg.emd_weight == 0 ? "plain_mse" : "plain";
  model.info["epochs"] = std::to_string(trainer.epochs_done());
  return log;
}

std::vector<std::vector<double>> predict_all(const ImputationModel& model, const std::vector<Sample>& samples,
                                             Exec exec) {
  std::vector<std::vector<double>> out(samples.size());
  for_each_index(samples.size(), exec, [&](std::size_t i) {
    out[i].resize(model.output_len());
    model.forward(samples[i].tokens, out[i], nullptr, nullptr);
  });
  return out;
}

std::vector<FineSeries> impute_all(const ImputationModel& model, const std::vector<WindowExample>& windows,
                                   Exec exec) {
  std::vector<FineSeries> out(windows.size());
  for_each_index(windows.size(), exec, [&](std::size_t i) { out[i] = model.impute(windows[i].input); });
  return out;
}

}  // namespace telezoom

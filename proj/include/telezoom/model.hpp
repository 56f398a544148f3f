#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telezoom/series_io.hpp"

namespace telezoom {

struct ModelConfig {
  int layers = 3;
  int width = 128;
  int heads = 4;
  int ff_width = 256;
  double dropout = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Per-entry affine normalization of the coarse inputs and a scale for the
/// target channel, all fit on the training split.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;
  double target_scale = 1.0;

  static Normalizer fit(const std::vector<WindowExample>& train, const std::vector<EntrySpec>& layout);
};

/// Encoder-only transformer: one token per coarse step, Z outputs per token.
/// The network works on normalized values; impute() returns physical units.
class ImputationModel {
 public:
  struct Cache;

  ImputationModel() = default;
  ImputationModel(ModelConfig cfg, std::vector<EntrySpec> layout, int context_len, int zoom, std::string target,
                  ValueDomain domain);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<EntrySpec>& layout() const { return layout_; }
  int context_len() const { return context_len_; }
  int zoom() const { return zoom_; }
  std::size_t output_len() const { return static_cast<std::size_t>(context_len_) * static_cast<std::size_t>(zoom_); }
  std::size_t token_len() const { return static_cast<std::size_t>(context_len_) * layout_.size(); }
  const std::string& target() const { return target_; }
  ValueDomain domain() const { return domain_; }

  Normalizer& normalizer() { return norm_; }
  const Normalizer& normalizer() const { return norm_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Fresh weights from config().seed.
  void init_params();

  /// Normalized input tokens for a bundle; throws ShapeError naming a missing entry.
  std::vector<double> encode(const CoarseBundle& bundle) const;

  /// Raw normalized output z (physical = z * target_scale). Pass a cache to
  /// allow backward(); pass a dropout rng to train, nullptr for eval mode.
  void forward(std::span<const double> tokens, std::span<double> z, Cache* cache, Rng* dropout) const;

  /// Accumulates dLoss/dparams into grad given dLoss/dz.
  void backward(const Cache& cache, std::span<const double> dz, std::span<double> grad) const;

  /// Eval-mode imputation in physical units, clamped at zero.
  FineSeries impute(const CoarseBundle& bundle) const;

  void save(const std::string& path) const;
  static ImputationModel load(const std::string& path);

  /// Free-form training facts persisted with the checkpoint (mode, epochs, ...).
  std::map<std::string, std::string> info;
  /// Serialized multiplier state when trained with the augmented loss.
  std::string kal_state_json;
  std::optional<double> target_bound;

 private:
  void build_offsets();

  ModelConfig cfg_;
  std::vector<EntrySpec> layout_;
  int context_len_ = 0;
  int zoom_ = 0;
  std::string target_;
  ValueDomain domain_ = ValueDomain::nonneg_real;
  Normalizer norm_;
  std::vector<double> params_;

  struct LayerOff {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  std::size_t w_in_ = 0, b_in_ = 0, pos_ = 0, lnf_g_ = 0, lnf_b_ = 0, w_out_ = 0, b_out_ = 0;
  std::vector<LayerOff> layer_off_;
};

struct ImputationModel::Cache {
  struct Layer {
    std::vector<double> h_in, xhat1, rstd1, a, q, k, v, p, ctx, mask1, h_mid, xhat2, rstd2, b, f1, g, mask2;
  };
  std::vector<double> tokens;
  std::vector<Layer> layers;
  std::vector<double> h_last, xhatf, rstdf, hf;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  double lr = 1e-3;

 private:
  double b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace telezoom

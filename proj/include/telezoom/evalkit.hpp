#pragma once

#include <string>
#include <vector>

#include "telezoom/trainer.hpp"

namespace telezoom {

struct BurstRecord {
  std::size_t start = 0;
  std::size_t duration = 0;
  double height = 0;  // peak
  double volume = 0;  // sum over the run
};

/// Maximal runs with value >= threshold_frac * max(values). All-zero input
/// gives no bursts.
std::vector<BurstRecord> detect_bursts(std::span<const double> values, double threshold_frac = 0.5);

/// Per-window burst summary: counts and means over the detected bursts.
struct BurstProperties {
  double frequency = 0;
  double position = 0;  // mean start index
  double height = 0;
  double duration = 0;
  double volume = 0;
  double interarrival = 0;  // mean gap between consecutive starts (0 with < 2 bursts)
};

BurstProperties burst_properties(std::span<const double> values, double threshold_frac = 0.5);

/// |t - t_real| / t_real, or the absolute error (flagged) when t_real = 0.
struct RelError {
  double value = 0;
  bool absolute = false;
};
RelError relative_error(double t, double t_real);

double lag1_autocorr(std::span<const double> values);
/// Linear-interpolated percentile, q in [0, 1].
double percentile(std::span<const double> values, double q);

struct ImputationMetrics {
  double mse = 0;
  double emd = 0;
  RelError autocorr;
  RelError p99;
};

ImputationMetrics imputation_metrics(std::span<const double> imputed, std::span<const double> truth);

/// Per metric (column), min-max onto [0.1, 0.9]; a column of equal values maps to 0.5.
/// table[method][metric].
std::vector<std::vector<double>> normalize_errors(const std::vector<std::vector<double>>& table);

/// Nearest neighbours in standardized, flattened coarse-input space.
class KnnImputer {
 public:
  KnnImputer(const std::vector<WindowExample>& train, Exec exec = Exec::parallel);

  FineSeries impute(const CoarseBundle& query, int k) const;
  std::vector<FineSeries> impute_all(const std::vector<WindowExample>& queries, int k) const;
  /// K from the candidates with the lowest mean MSE on `val` (first on ties).
  int select_k(const std::vector<WindowExample>& val, const std::vector<int>& candidates = {1, 3, 5, 10}) const;
  std::size_t size() const { return targets_.size(); }

 private:
  std::vector<double> features(const CoarseBundle& b) const;

  std::vector<EntrySpec> layout_;
  std::vector<double> mean_, std_;
  Matrix train_features_;
  std::vector<FineSeries> targets_;
  Exec exec_;
};

/// One-shot form of KnnImputer.
FineSeries knn_baseline(const std::vector<WindowExample>& train, const CoarseBundle& query, int k);

/// Keeps the periodic samples of `channel`, puts each interval's max (when
/// the bundle has one) at the interval midpoint, and interpolates linearly
/// between these anchors. Rejects bundles without a periodic entry.
FineSeries linear_baseline(const CoarseBundle& bundle, const std::string& channel,
                           ValueDomain domain = ValueDomain::nonneg_real);

/// The MSE-trained transformer: same model and budget, emd_weight forced to 0.
PhaseLog plain_baseline(ImputationModel& model, const std::vector<WindowExample>& train,
                        const std::vector<WindowExample>& val, TrainConfig cfg);

/// Mean errors of one method over a set of windows.
struct MethodScores {
  std::string method;
  double mse = 0;
  double emd = 0;
  double autocorr = 0;
  double p99 = 0;
  double burst_position = 0;
  double burst_height = 0;
  double burst_frequency = 0;
  double burst_duration = 0;
  double burst_volume = 0;
  double burst_interarrival = 0;
  std::size_t windows = 0;
  std::size_t absolute_fallbacks = 0;  // relative errors reported as absolute (t_real = 0)

  static const std::vector<std::string>& columns();
  std::vector<double> values() const;
};

MethodScores score_method(const std::string& method, const std::vector<FineSeries>& imputed,
                          const std::vector<WindowExample>& truth, double threshold_frac = 0.5,
                          Exec exec = Exec::parallel);

struct EvalReport {
  std::vector<MethodScores> methods;
  std::vector<std::vector<double>> normalized;  // empty with fewer than two methods
  std::string note;

  std::string raw_csv() const;
  std::string normalized_csv() const;
  std::string to_json() const;
};

EvalReport make_report(std::vector<MethodScores> methods);

}  // namespace telezoom

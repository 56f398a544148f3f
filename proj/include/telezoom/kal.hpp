#pragma once

#include <string>
#include <vector>

#include "telezoom/constraints.hpp"
#include "telezoom/trainer.hpp"

namespace telezoom {

/// Multipliers per (constraint, training example, scoped instance) and the
/// shared penalty coefficient.
struct KalState {
  double mu = 1e-3;
  double mu_mult = 1.5;
  int outer_iter = 0;
  std::vector<std::string> names;
  std::vector<ConstraintForm> forms;
  std::vector<int> instances;             // per constraint
  std::vector<std::int64_t> example_ids;  // row order of every lambda array
  std::vector<std::vector<double>> lambda;  // [constraint][example * instances + instance]
  std::vector<double> violation_history;

  static KalState init(const ConstraintSet& set, const std::vector<std::int64_t>& example_ids, int context_len,
                       double mu0 = 1e-3, double mu_mult = 1.5);

  double& at(std::size_t c, std::size_t example, int instance) {
    return lambda[c][example * static_cast<std::size_t>(instances[c]) + static_cast<std::size_t>(instance)];
  }
  double at(std::size_t c, std::size_t example, int instance) const {
    return lambda[c][example * static_cast<std::size_t>(instances[c]) + static_cast<std::size_t>(instance)];
  }

  std::string to_json() const;
  static KalState from_json(const std::string& text);
};

/// Residuals in the same layout as KalState::lambda.
using ResidualTable = std::vector<std::vector<double>>;

/// mu <- mu * mu_mult; lambda_eq += 2 mu_old phi; lambda_ineq = max(0, lambda_ineq + 2 mu_old psi).
void update_multipliers(KalState& kal, const ResidualTable& residuals);

/// Residual normalizer for one constraint: its explicit scale, else the
/// magnitude of what its expression aggregates (Z or window length for
/// counts, span * target scale for sums, target scale otherwise).
double residual_scale(const Constraint& c, int zoom, int context_len, double target_scale);

/// Smoothed, normalized residuals of every constraint on one window.
struct KalContext {
  const ConstraintSet* set = nullptr;
  std::vector<double> scales;  // per constraint
  double target_scale = 1.0;
  ValueDomain domain = ValueDomain::nonneg_real;
  double smooth_k = 50.0;
};

KalContext make_kal_context(const ConstraintSet& set, const ImputationModel& model, double smooth_k = 50.0);

/// Augmented-Lagrangian penalty of one example (without L_combine). With a
/// null `kal_row` the multipliers are taken as zero. `mu` is the current
/// coefficient. Adds the gradient with respect to the normalized output z.
double kal_penalty(const KalContext& ctx, const WindowExample& w, std::span<const double> z, double mu,
                   const KalState* kal, std::size_t kal_row, std::span<double> dz);

/// l_combine + penalty: the full per-example augmented loss.
double l_aug(const KalContext& ctx, const Sample& s, std::span<const double> z, double emd_weight, double mu,
             const KalState* kal, std::size_t kal_row, std::span<double> dz);

/// Normalized smoothed residuals, laid out like KalState::lambda.
ResidualTable smooth_residuals(const KalContext& ctx, const std::vector<Sample>& samples,
                               const std::vector<std::vector<double>>& z);

/// Mean exact violation per constraint over windows and scoped instances
/// (inactive instances count as satisfied), in physical units.
std::vector<double> mean_violations(const ConstraintSet& set, const std::vector<WindowExample>& windows,
                                    const std::vector<FineSeries>& imputed);

struct KalConfig {
  double mu0 = 1e-3;
  double mu_mult = 1.5;
  double saturation_tol = 0.01;  // relative improvement below which outer iterations stop
  int max_outer = 10;
  double smooth_k = 50.0;
};

struct OuterRecord {
  int outer = 0;
  double mu = 0;                   // coefficient used during this round
  int epochs = 0;
  double train_loss = 0;
  double val_objective = 0;
  double mean_violation = 0;       // validation, exact, normalized by constraint scale
  std::vector<double> violations;  // validation, exact, per constraint, physical units
};

struct KalLog {
  std::vector<OuterRecord> rounds;
  int best_round = -1;
  KalState state;

  std::string violations_csv(const ConstraintSet& set) const;
};

/// Alternates inner training on the augmented loss with multiplier updates
/// and returns the parameters of the round with the lowest validation violation.
KalLog fit_kal(ImputationModel& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
               const std::vector<WindowExample>& val_windows, const ConstraintSet& set, const TrainConfig& tcfg,
               const KalConfig& kcfg);

}  // namespace telezoom

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telezoom/constraints.hpp"
#include "telezoom/kernels.hpp"

namespace telezoom {

// Canonical rows the compiler reduces every active constraint instance to.
// Ranges are half-open [lo, hi) over the window.

/// Some x_t in range reaches v: x_t >= v (at_least) or x_t <= v (at_most).
struct AttainRow {
  std::size_t lo = 0, hi = 0;
  bool at_least = true;
  double value = 0;
  std::size_t origin = 0;  // constraint index
};

struct SumRow {
  std::size_t lo = 0, hi = 0;
  double min = 0, max = 0;
  std::size_t origin = 0;
};

/// At most `limit` non-zero values in range (x_t <= M * b_t, sum b_t <= limit).
struct CountRow {
  std::size_t lo = 0, hi = 0;
  double limit = 0;
  std::size_t origin = 0;
};

struct RepairProblem {
  std::size_t n = 0;
  ValueDomain domain = ValueDomain::nonneg_real;
  std::vector<double> model_out;
  std::vector<double> lower, upper;
  std::vector<char> sampled;  // T_samples: pinned by a measurement and left out of the objective
  std::vector<AttainRow> attains;
  std::vector<SumRow> sums;
  std::vector<CountRow> counts;
  std::optional<double> big_m;
  bool trivially_infeasible = false;  // a bound or constant row contradicts itself
  std::string infeasible_reason;

  // The source the rows were compiled from (used by the oracle and reports).
  const ConstraintSet* set = nullptr;
  const CoarseBundle* bundle = nullptr;
  const Scalars* scalars = nullptr;
  std::vector<char> active;  // per constraint: included in this compilation

  double objective(std::span<const double> x) const;
};

struct CompileOptions {
  std::optional<double> channel_bound;  // capacity of the target channel, feeds big-M
  std::string target_channel;           // used to find coarse max entries for big-M
};

/// Reduces the active constraint instances to canonical rows. `active`
/// selects constraints (empty = all). Throws SolverError for forms outside
/// the supported fragment and for count rows without a derivable big-M.
RepairProblem compile(const ConstraintSet& set, const CoarseBundle& bundle, const Scalars& scalars,
                      std::span<const double> model_out, ValueDomain domain, const CompileOptions& opt = {},
                      const std::vector<char>& active = {});

struct SolveResult {
  bool feasible = false;
  bool budget_exceeded = false;
  std::vector<double> x;
  double objective = 0;
};

/// Exact minimizer of the L1 correction over the compiled rows.
SolveResult solve(const RepairProblem& p, double budget_seconds = 10.0);

struct RepairReport {
  std::int64_t window_id = 0;
  std::vector<double> pre_violations;  // per constraint, summed over instances
  std::vector<double> post_violations;
  double objective = 0;
  std::vector<std::string> relaxed;  // operational constraints dropped, in drop order
  bool infeasible = false;
  double solve_ms = 0;
};

struct EnforceOptions {
  double budget_seconds = 10.0;
  bool fallback = true;  // drop operational constraints when infeasible
  CompileOptions compile;
};

struct EnforceResult {
  FineSeries series;
  RepairReport report;
};

/// Compiles, solves, and falls back (operational constraints dropped in
/// reverse declaration order) when the full set cannot be satisfied.
EnforceResult enforce(const ConstraintSet& set, const WindowExample& window, const FineSeries& model_out,
                      const EnforceOptions& opt = {});

/// Repairs many windows independently; reports come back in input order.
std::vector<EnforceResult> enforce_all(const ConstraintSet& set, const std::vector<WindowExample>& windows,
                                       const std::vector<FineSeries>& model_out, const EnforceOptions& opt,
                                       Exec exec);

struct OracleResult {
  bool feasible = false;
  double objective = 0;
  std::vector<double> x;
};

/// Exhaustive search over value_grid^n checking the original constraints
/// with the exact evaluator. Limited to n <= 8 and |grid| <= 8.
OracleResult brute_force_oracle(const RepairProblem& p, const std::vector<double>& value_grid);

std::string reports_csv(const ConstraintSet& set, const std::vector<RepairReport>& reports);

}  // namespace telezoom

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telezoom/series.hpp"

namespace telezoom {

// Aggregates over the imputed series `x`, restricted to one scope
// (a coarse interval or the whole window).
enum class AggKind { sum, max, min, mean, count_pos, at };

enum class ExprOp { number, measurement, scalar, aggregate, neg, add, sub, mul, div };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprOp op = ExprOp::number;
  double number = 0;
  std::string name;  // measurement entry or scalar name
  AggKind agg = AggKind::sum;
  int index = 0;  // at(x, index)
  std::vector<ExprPtr> args;

  bool uses_series() const;
};

enum class CmpOp { lt, le, gt, ge, eq, ne };

struct Comparison {
  ExprPtr lhs;
  CmpOp op = CmpOp::le;
  ExprPtr rhs;
};

/// Conjunction of comparisons over measurements and scalars.
struct Predicate {
  std::vector<Comparison> terms;
};

ExprPtr parse_expr(std::string_view text);
Predicate parse_predicate(std::string_view text);
std::string to_string(const Expr& e);
std::string to_string(const Predicate& p);

void collect_refs(const Expr& e, std::vector<std::string>& measurements, std::vector<std::string>& scalars);
void collect_refs(const Predicate& p, std::vector<std::string>& measurements, std::vector<std::string>& scalars);

/// Everything an expression may look at while being evaluated on one scope.
struct EvalContext {
  std::span<const double> x;          // imputed values inside the scope
  const CoarseBundle* bundle = nullptr;
  int interval = -1;                  // -1: window scope
  const Scalars* scalars = nullptr;
  double positive_eps = 1e-6;         // count_pos threshold: x >= eps counts
  double smooth_k = 50.0;
  double smooth_unit = 1.0;           // count_pos smoothing acts on x / unit
};

double eval_exact(const Expr& e, const EvalContext& ctx);
bool eval_predicate(const Predicate& p, const EvalContext& ctx);

/// Value with a dense gradient over ctx.x; an empty gradient means constant.
struct Dual {
  double value = 0;
  std::vector<double> grad;
};

Dual eval_smooth(const Expr& e, const EvalContext& ctx);

/// ½(1 + tanh(k·x)).
double step_k(double x, double k);

/// `expr == Σ coef_i·agg_i(x) + constant` after folding measurements/scalars.
struct LinearTerm {
  AggKind agg = AggKind::sum;
  int index = 0;
  double coef = 0;
};

struct LinearForm {
  std::vector<LinearTerm> terms;
  double constant = 0;
};

/// Throws SolverError when the expression is not linear in aggregates of x.
LinearForm linearize(const Expr& e, const EvalContext& ctx);

}  // namespace telezoom

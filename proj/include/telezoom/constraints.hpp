#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telezoom/expr.hpp"

namespace telezoom {

enum class ConstraintForm { eq, le };          // Φ = 0, or Ψ <= 0
enum class ConstraintKind { measurement, operational };
enum class ConstraintScope { interval, window };

struct Constraint {
  std::string name;
  ConstraintForm form = ConstraintForm::eq;
  ConstraintKind kind = ConstraintKind::measurement;
  ConstraintScope scope = ConstraintScope::interval;
  ExprPtr expr;
  std::optional<Predicate> guard;  // implication antecedent; measurements and scalars only
  std::optional<double> scale;     // residual normalizer for the loss; derived when absent

  /// Number of scoped instances inside a window of `context_len` intervals.
  int instances(int context_len) const { return scope == ConstraintScope::interval ? context_len : 1; }
};

/// Builds a constraint from expression strings, rejecting guards that touch x.
Constraint make_constraint(std::string name, ConstraintForm form, ConstraintKind kind, std::string_view expr,
                           std::string_view guard = {}, ConstraintScope scope = ConstraintScope::interval);

class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<Constraint> cs);

  void add(Constraint c);  // throws ConfigError on a duplicate name

  const std::vector<Constraint>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Constraint& operator[](std::size_t i) const { return items_[i]; }
  const Constraint* find(std::string_view name) const;

  std::size_t equality_count() const;    // K
  std::size_t inequality_count() const;  // H

  std::vector<std::string> measurement_refs() const;
  std::vector<std::string> scalar_refs() const;

  /// Every m.NAME must name an entry of the layout.
  void check_layout(const std::vector<EntrySpec>& layout) const;

 private:
  std::vector<Constraint> items_;
};

/// Threshold at which a value counts as positive: 1 for integers, 1e-6 for reals.
double positive_eps(ValueDomain d);

/// x restricted to one scoped instance.
std::span<const double> scope_slice(const Constraint& c, std::span<const double> x, int zoom, int instance);

bool guard_holds(const Constraint& c, const CoarseBundle& bundle, const Scalars& scalars, int instance);

/// Residual per scoped instance (measurement minus S(x) for equalities, Ψ for
/// inequalities); inactive guards yield 0.
std::vector<double> eval_exact(const Constraint& c, std::span<const double> x, const CoarseBundle& bundle,
                               const Scalars& scalars, double eps);

struct SmoothOptions {
  double eps = 1e-6;
  double k = 50.0;
  double unit = 1.0;
};

/// One smoothed residual; grad covers x[offset, offset + grad.size()).
struct ScopedResidual {
  double value = 0;
  bool active = true;
  std::size_t offset = 0;
  std::vector<double> grad;
};

std::vector<ScopedResidual> eval_smooth(const Constraint& c, std::span<const double> x, const CoarseBundle& bundle,
                                        const Scalars& scalars, const SmoothOptions& opt);

/// |r| for equalities, max(0, r) for inequalities.
double violation(const Constraint& c, double residual);

/// Text format: one [name] section per constraint with key = value lines.
ConstraintSet parse_constraints(std::string_view text, const std::string& origin = "<memory>");
std::string format_constraints(const ConstraintSet& set);
ConstraintSet load_constraints(const std::string& path);

/// Names the library constraints are written against.
struct Bindings {
  std::map<std::string, std::string> roles;  // role -> entry or scalar name
  int periodic_offset = 0;
  double burst_factor = 0.5;                 // C7 threshold as a fraction of bandwidth

  const std::string& require(const std::string& role, const std::string& constraint) const;
};

/// Instantiates library constraints C1..C9 by id.
ConstraintSet builtin_library(const std::vector<std::string>& ids, const Bindings& b);

}  // namespace telezoom

#include "telezoom/cem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "telezoom/series_io.hpp"

namespace telezoom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-9;

double floor_dom(double v, ValueDomain d) { return d == ValueDomain::nonneg_int ? std::floor(v + kTol) : v; }
double ceil_dom(double v, ValueDomain d) { return d == ValueDomain::nonneg_int ? std::ceil(v - kTol) : v; }
double round_dom(double v, ValueDomain d) { return d == ValueDomain::nonneg_int ? std::floor(v + 0.5) : v; }

double sum_tol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

struct BudgetExceeded {};

class Deadline {
 public:
  explicit Deadline(double seconds)
      : end_(std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                    std::chrono::duration<double>(seconds))) {}
  void check() {
    if (++ticks_ % 64 == 0 && std::chrono::steady_clock::now() > end_) throw BudgetExceeded{};
  }

 private:
  std::chrono::steady_clock::time_point end_;
  std::size_t ticks_ = 0;
};

}  // namespace

double RepairProblem::objective(std::span<const double> x) const {
  double s = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!sampled[t]) s += std::abs(x[t] - model_out[t]);
  }
  return s;
}

// ------------------------------------------------------------------ compile

RepairProblem compile(const ConstraintSet& set, const CoarseBundle& bundle, const Scalars& scalars,
                      std::span<const double> model_out, ValueDomain domain, const CompileOptions& opt,
                      const std::vector<char>& active) {
  RepairProblem p;
  p.n = static_cast<std::size_t>(bundle.context_len) * static_cast<std::size_t>(bundle.zoom);
  if (model_out.size() != p.n) {
    throw ShapeError("model output has " + std::to_string(model_out.size()) + " steps, expected " +
                     std::to_string(p.n));
  }
  p.domain = domain;
  p.model_out.assign(model_out.begin(), model_out.end());
  p.lower.assign(p.n, 0.0);
  p.upper.assign(p.n, kInf);
  p.sampled.assign(p.n, 0);
  p.set = &set;
  p.bundle = &bundle;
  p.scalars = &scalars;
  p.active = active.empty() ? std::vector<char>(set.size(), 1) : active;
  if (p.active.size() != set.size()) throw ConfigError("activity mask does not match the constraint set");

  auto infeasible = [&](const std::string& why) {
    if (!p.trivially_infeasible) p.infeasible_reason = why;
    p.trivially_infeasible = true;
  };
  const std::size_t zoom = static_cast<std::size_t>(bundle.zoom);
  std::vector<std::string> counting;

  for (std::size_t ci = 0; ci < set.size(); ++ci) {
    if (!p.active[ci]) continue;
    const auto& c = set[ci];
    for (int inst = 0; inst < c.instances(bundle.context_len); ++inst) {
      if (!guard_holds(c, bundle, scalars, inst)) continue;
      const std::size_t lo = c.scope == ConstraintScope::interval ? static_cast<std::size_t>(inst) * zoom : 0;
      const std::size_t hi = c.scope == ConstraintScope::interval ? lo + zoom : p.n;
      EvalContext ctx;
      ctx.x = std::span<const double>(p.model_out).subspan(lo, hi - lo);
      ctx.bundle = &bundle;
      ctx.interval = c.scope == ConstraintScope::interval ? inst : -1;
      ctx.scalars = &scalars;
      LinearForm lf;
      try {
        lf = linearize(*c.expr, ctx);
      } catch (const SolverError& e) {
        throw SolverError("constraint '" + c.name + "': " + e.what());
      }
      const std::string where = c.name + " (instance " + std::to_string(inst) + ")";
      if (lf.terms.empty()) {
        const bool ok = c.form == ConstraintForm::eq ? std::abs(lf.constant) <= kTol : lf.constant <= kTol;
        if (!ok) infeasible(where + " does not hold and does not depend on x");
        continue;
      }
      if (lf.terms.size() > 1) {
        throw SolverError("constraint '" + c.name +
                          "' combines several aggregates of x; the repair solver handles one per constraint");
      }
      const auto& term = lf.terms.front();
      // coef * agg + constant (= or <=) 0  ->  agg rel v
      const double v = -lf.constant / term.coef;
      enum class Rel { eq, le, ge } rel = Rel::eq;
      if (c.form == ConstraintForm::le) rel = term.coef > 0 ? Rel::le : Rel::ge;

      switch (term.agg) {
        case AggKind::at: {
          if (static_cast<std::size_t>(term.index) >= hi - lo) {
            throw SolverError("constraint '" + c.name + "': at(x, " + std::to_string(term.index) + ") outside its scope");
          }
          const std::size_t t = lo + static_cast<std::size_t>(term.index);
          if (rel != Rel::ge) p.upper[t] = std::min(p.upper[t], floor_dom(v, domain));
          if (rel != Rel::le) p.lower[t] = std::max(p.lower[t], ceil_dom(v, domain));
          if (rel == Rel::eq && c.kind == ConstraintKind::measurement) p.sampled[t] = 1;
          break;
        }
        case AggKind::sum:
        case AggKind::mean: {
          const double total = term.agg == AggKind::mean ? v * static_cast<double>(hi - lo) : v;
          SumRow r{lo, hi, -kInf, kInf, ci};
          if (rel != Rel::ge) r.max = floor_dom(total, domain);
          if (rel != Rel::le) r.min = ceil_dom(total, domain);
          p.sums.push_back(r);
          break;
        }
        case AggKind::max:
          if (rel != Rel::ge) {
            for (std::size_t t = lo; t < hi; ++t) p.upper[t] = std::min(p.upper[t], floor_dom(v, domain));
          }
          if (rel != Rel::le) p.attains.push_back(AttainRow{lo, hi, true, ceil_dom(v, domain), ci});
          break;
        case AggKind::min:
          if (rel != Rel::le) {
            for (std::size_t t = lo; t < hi; ++t) p.lower[t] = std::max(p.lower[t], ceil_dom(v, domain));
          }
          if (rel != Rel::ge) p.attains.push_back(AttainRow{lo, hi, false, floor_dom(v, domain), ci});
          break;
        case AggKind::count_pos:
          if (rel != Rel::le) {
            throw SolverError("constraint '" + c.name +
                              "': lower bounds on count_pos(x) are outside the repair solver's fragment");
          }
          p.counts.push_back(CountRow{lo, hi, std::floor(v + kTol), ci});
          counting.push_back(c.name);
          break;
      }
    }
  }

  if (!p.counts.empty()) {
    std::optional<double> m = opt.channel_bound;
    for (const auto& e : bundle.entries) {
      if (e.entry.spec.kind != CoarsenKind::max || e.entry.channel != opt.target_channel) continue;
      for (double v : e.values) m = std::max(m.value_or(v), v);
    }
    if (!m) {
      throw SolverError("constraint '" + counting.front() +
                        "' counts positive values, which needs a channel bound (big-M) for the target channel");
    }
    p.big_m = *m;
    for (const auto& r : p.counts) {
      for (std::size_t t = r.lo; t < r.hi; ++t) p.upper[t] = std::min(p.upper[t], *m);
    }
  }
  for (std::size_t t = 0; t < p.n; ++t) {
    if (p.lower[t] > p.upper[t] + kTol) {
      infeasible("empty range for x[" + std::to_string(t) + "]");
      break;
    }
  }
  return p;
}

// ------------------------------------------------------------------ solve

namespace {

struct Inner {
  bool feasible = false;
  double cost = 0;
  std::vector<double> x;
};

// Minimizes sum |x - y| over l <= x <= u with optional sum range and count limit.
class BlockSolver {
 public:
  BlockSolver(std::span<const double> y, ValueDomain d, Deadline& deadline) : y_(y), d_(d), deadline_(deadline) {}

  double smin = -kInf, smax = kInf;
  std::optional<double> count_limit;

  Inner solve(const std::vector<double>& l, const std::vector<double>& u) {
    if (!count_limit) return no_count(l, u);
    return with_count(l, u);
  }

 private:
  double proj(std::size_t t, const std::vector<double>& l, const std::vector<double>& u) const {
    return std::clamp(round_dom(y_[t], d_), l[t], u[t]);
  }

  double cost_of(const std::vector<double>& x) const {
    double c = 0;
    for (std::size_t t = 0; t < x.size(); ++t) c += std::abs(x[t] - y_[t]);
    return c;
  }

  Inner no_count(const std::vector<double>& l, const std::vector<double>& u) {
    deadline_.check();
    const std::size_t n = l.size();
    Inner r;
    r.x.resize(n);
    double s = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (l[t] > u[t] + kTol) return r;
      r.x[t] = proj(t, l, u);
      s += r.x[t];
    }
    if (s < smin - sum_tol(smin)) {
      if (!shift(r.x, l, u, smin - s, true)) return r;
    } else if (s > smax + sum_tol(smax)) {
      if (!shift(r.x, l, u, s - smax, false)) return r;
    }
    r.feasible = true;
    r.cost = cost_of(r.x);
    return r;
  }

  // Moves the sum by `amount` (up or down) at minimal cost.
  bool shift(std::vector<double>& x, const std::vector<double>& l, const std::vector<double>& u, double amount,
             bool up) {
    const std::size_t n = x.size();
    double room = 0;
    for (std::size_t t = 0; t < n; ++t) room += up ? u[t] - x[t] : x[t] - l[t];
    if (room < amount - sum_tol(amount)) return false;
    if (d_ == ValueDomain::nonneg_int) return shift_int(x, l, u, static_cast<long long>(std::llround(amount)), up);
    // Real domain: every moved unit costs 1, so any split is optimal; level
    // the values (raise the lowest / lower the highest) for a smooth result.
    // Raising towards u is lowering -x towards -u, so one routine serves both.
    std::vector<double> top(n), floor_(n);
    for (std::size_t t = 0; t < n; ++t) {
      top[t] = up ? -x[t] : x[t];
      floor_[t] = up ? -u[t] : l[t];
    }
    const double lowered = level_down(top, floor_, amount);
    const double level = up ? -lowered : lowered;
    double total = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double nx = up ? std::max(x[t], std::min(u[t], level)) : std::min(x[t], std::max(l[t], level));
      total += std::abs(nx - x[t]);
      x[t] = nx;
    }
    // Absorb the bisection remainder in the variable with the most room.
    double rem = amount - total;
    std::size_t best = 0;
    double best_room = -1;
    for (std::size_t t = 0; t < n; ++t) {
      const double r = rem > 0 ? (up ? u[t] - x[t] : x[t] - l[t]) : (up ? x[t] - l[t] : u[t] - x[t]);
      if (r > best_room) {
        best_room = r;
        best = t;
      }
    }
    x[best] += up ? rem : -rem;
    x[best] = std::clamp(x[best], l[best], u[best]);
    return true;
  }

  // Level L with sum_t max(0, top_t - max(floor_t, L)) == amount, found
  // exactly from the breakpoints of this piecewise-linear function.
  static double level_down(const std::vector<double>& top, const std::vector<double>& floor_, double amount) {
    const std::size_t n = top.size();
    const auto moved = [&](double level) {
      double m = 0;
      for (std::size_t t = 0; t < n; ++t) m += std::max(0.0, top[t] - std::max(floor_[t], level));
      return m;
    };
    std::vector<double> bp;
    for (std::size_t t = 0; t < n; ++t) {
      bp.push_back(top[t]);
      if (std::isfinite(floor_[t]) && floor_[t] < top[t]) bp.push_back(floor_[t]);
    }
    std::sort(bp.begin(), bp.end(), std::greater<>());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    // Walk down until moving to the next breakpoint would move enough.
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
      const double m_next = moved(bp[i + 1]);
      if (m_next < amount) continue;
      if (m_next == amount) return bp[i + 1];
      double k = 0;  // values that follow the level on (bp[i+1], bp[i]]
      for (std::size_t t = 0; t < n; ++t) {
        if (top[t] >= bp[i] && floor_[t] <= bp[i + 1]) k += 1;
      }
      const double m_here = moved(bp[i]);
      return k > 0 ? bp[i] - (amount - m_here) / k : bp[i + 1];
    }
    return bp.empty() ? 0.0 : bp.back();
  }

  bool shift_int(std::vector<double>& x, const std::vector<double>& l, const std::vector<double>& u, long long steps,
                 bool up) {
    // Separable convex costs: repeatedly take the cheapest unit step.
    using Item = std::tuple<double, double, std::size_t>;  // marginal cost, level key, index
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    auto push = [&](std::size_t t) {
      const double nx = up ? x[t] + 1 : x[t] - 1;
      if (up ? nx > u[t] + kTol : nx < l[t] - kTol) return;
      const double mc = std::abs(nx - y_[t]) - std::abs(x[t] - y_[t]);
      pq.emplace(mc, up ? x[t] : -x[t], t);
    };
    for (std::size_t t = 0; t < x.size(); ++t) push(t);
    for (long long k = 0; k < steps; ++k) {
      if (pq.empty()) return false;
      const auto [mc, key, t] = pq.top();
      pq.pop();
      x[t] += up ? 1 : -1;
      push(t);
    }
    return true;
  }

  static bool nonzero(double v) { return v > 0; }

  Inner with_count(const std::vector<double>& l, const std::vector<double>& u) {
    const std::size_t n = l.size();
    const double limit = *count_limit;
    std::size_t mandatory = 0;
    for (std::size_t t = 0; t < n; ++t) mandatory += l[t] > 0 ? 1 : 0;
    if (static_cast<double>(mandatory) > limit) return {};

    if (!std::isfinite(smin) && !std::isfinite(smax)) {
      // Without a sum row the only question is which values to zero.
      Inner r = no_count(l, u);
      if (!r.feasible) return r;
      std::vector<std::size_t> optional;
      std::size_t nz = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (!nonzero(r.x[t])) continue;
        ++nz;
        if (l[t] <= 0) optional.push_back(t);
      }
      if (static_cast<double>(nz) <= limit) return r;
      const auto excess = static_cast<std::size_t>(static_cast<double>(nz) - limit);
      std::stable_sort(optional.begin(), optional.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(y_[a]) - std::abs(r.x[a] - y_[a]) < std::abs(y_[b]) - std::abs(r.x[b] - y_[b]);
      });
      for (std::size_t k = 0; k < excess; ++k) r.x[optional[k]] = 0;
      r.cost = cost_of(r.x);
      return r;
    }

    // Sum and count together: branch on which optional values are forced to zero,
    // bounding with the count-free relaxation.
    best_ = Inner{};
    std::vector<double> uu = u;
    std::vector<char> decided(n, 0);
    branch(l, uu, decided, mandatory, limit);
    return best_;
  }

  void branch(const std::vector<double>& l, std::vector<double>& u, std::vector<char>& decided, std::size_t in_count,
              double limit) {
    deadline_.check();
    Inner relax = no_count(l, u);
    if (!relax.feasible) return;
    if (best_.feasible && relax.cost >= best_.cost - 1e-12) return;
    std::size_t nz = 0;
    for (double v : relax.x) nz += nonzero(v) ? 1 : 0;
    if (static_cast<double>(nz) <= limit) {
      best_ = std::move(relax);
      return;
    }
    // Branch on the undecided non-zero optional value that is cheapest to drop.
    std::size_t pick = l.size();
    double pick_cost = kInf;
    for (std::size_t t = 0; t < l.size(); ++t) {
      if (decided[t] || l[t] > 0 || !nonzero(relax.x[t])) continue;
      const double c = std::abs(y_[t]) - std::abs(relax.x[t] - y_[t]);
      if (c < pick_cost) {
        pick_cost = c;
        pick = t;
      }
    }
    if (pick == l.size()) return;
    decided[pick] = 1;
    const double saved = u[pick];
    u[pick] = 0;  // excluded from the support
    branch(l, u, decided, in_count, limit);
    u[pick] = saved;
    if (static_cast<double>(in_count + 1) <= limit) branch(l, u, decided, in_count + 1, limit);
    decided[pick] = 0;
  }

  std::span<const double> y_;
  ValueDomain d_;
  Deadline& deadline_;
  Inner best_;
};

struct Block {
  std::size_t lo = 0, hi = 0;
  std::vector<const AttainRow*> attains;
  std::vector<const SumRow*> sums;
  std::vector<const CountRow*> counts;
};

std::vector<Block> make_blocks(const RepairProblem& p) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& r : p.attains) ranges.emplace_back(r.lo, r.hi);
  for (const auto& r : p.sums) ranges.emplace_back(r.lo, r.hi);
  for (const auto& r : p.counts) ranges.emplace_back(r.lo, r.hi);
  std::sort(ranges.begin(), ranges.end());
  std::vector<Block> blocks;
  for (const auto& [lo, hi] : ranges) {
    if (!blocks.empty() && lo < blocks.back().hi) {
      blocks.back().hi = std::max(blocks.back().hi, hi);
    } else {
      blocks.push_back(Block{lo, hi, {}, {}, {}});
    }
  }
  auto owner = [&](std::size_t lo) -> Block& {
    for (auto& b : blocks) {
      if (lo >= b.lo && lo < b.hi) return b;
    }
    throw SolverError("internal: row outside every block");
  };
  for (const auto& r : p.attains) owner(r.lo).attains.push_back(&r);
  for (const auto& r : p.sums) owner(r.lo).sums.push_back(&r);
  for (const auto& r : p.counts) owner(r.lo).counts.push_back(&r);
  for (const auto& b : blocks) {
    for (const auto* r : b.sums) {
      if (r->lo != b.lo || r->hi != b.hi) {
        throw SolverError("constraint '" + (*p.set)[r->origin].name +
                          "' sums over a range that only partly overlaps other rows; mixed-scope sums are unsupported");
      }
    }
    for (const auto* r : b.counts) {
      if (r->lo != b.lo || r->hi != b.hi) {
        throw SolverError("constraint '" + (*p.set)[r->origin].name +
                          "' counts over a range that only partly overlaps other rows; mixed-scope counts are unsupported");
      }
    }
  }
  return blocks;
}

class WitnessSearch {
 public:
  WitnessSearch(const RepairProblem& p, const Block& b, Deadline& deadline)
      : p_(p), b_(b), y_(std::span<const double>(p.model_out).subspan(b.lo, b.hi - b.lo)),
        inner_(y_, p.domain, deadline) {
    for (const auto* s : b.sums) {
      inner_.smin = std::max(inner_.smin, s->min);
      inner_.smax = std::min(inner_.smax, s->max);
    }
    for (const auto* c : b.counts) {
      inner_.count_limit = std::min(inner_.count_limit.value_or(kInf), c->limit);
    }
    l_.assign(p.lower.begin() + static_cast<std::ptrdiff_t>(b.lo), p.lower.begin() + static_cast<std::ptrdiff_t>(b.hi));
    u_.assign(p.upper.begin() + static_cast<std::ptrdiff_t>(b.lo), p.upper.begin() + static_cast<std::ptrdiff_t>(b.hi));
  }

  Inner run() {
    if (inner_.smin > inner_.smax + kTol) return {};
    dfs(0);
    return best_;
  }

 private:
  bool satisfied(const AttainRow& r) const {
    for (std::size_t t = r.lo; t < r.hi; ++t) {
      const std::size_t k = t - b_.lo;
      if (r.at_least ? l_[k] >= r.value - kTol : u_[k] <= r.value + kTol) return true;
    }
    return false;
  }

  // Preferred witness first (earliest extreme of the model output), then index order.
  std::vector<std::size_t> candidates(const AttainRow& r) const {
    std::size_t pref = r.lo;
    for (std::size_t t = r.lo; t < r.hi; ++t) {
      const double v = p_.model_out[t], w = p_.model_out[pref];
      if (r.at_least ? v > w : v < w) pref = t;
    }
    std::vector<std::size_t> out{pref};
    for (std::size_t t = r.lo; t < r.hi; ++t) {
      if (t != pref) out.push_back(t);
    }
    return out;
  }

  void dfs(std::size_t depth) {
    if (depth == b_.attains.size()) {
      Inner r = inner_.solve(l_, u_);
      if (r.feasible && (!best_.feasible || r.cost < best_.cost - 1e-9)) best_ = std::move(r);
      return;
    }
    const auto& row = *b_.attains[depth];
    if (satisfied(row)) {
      dfs(depth + 1);
      return;
    }
    for (std::size_t t : candidates(row)) {
      const std::size_t k = t - b_.lo;
      if (row.at_least ? u_[k] < row.value - kTol : l_[k] > row.value + kTol) continue;
      const double saved_l = l_[k], saved_u = u_[k];
      if (row.at_least) l_[k] = std::max(l_[k], row.value);
      else u_[k] = std::min(u_[k], row.value);
      dfs(depth + 1);
      l_[k] = saved_l;
      u_[k] = saved_u;
    }
  }

  const RepairProblem& p_;
  const Block& b_;
  std::span<const double> y_;
  BlockSolver inner_;
  std::vector<double> l_, u_;
  Inner best_;
};

}  // namespace

SolveResult solve(const RepairProblem& p, double budget_seconds) {
  SolveResult res;
  if (p.trivially_infeasible) return res;
  Deadline deadline(budget_seconds);
  res.x.resize(p.n);
  for (std::size_t t = 0; t < p.n; ++t) res.x[t] = std::clamp(round_dom(p.model_out[t], p.domain), p.lower[t], p.upper[t]);
  try {
    for (const auto& b : make_blocks(p)) {
      WitnessSearch search(p, b, deadline);
      Inner r = search.run();
      if (!r.feasible) return res;
      std::copy(r.x.begin(), r.x.end(), res.x.begin() + static_cast<std::ptrdiff_t>(b.lo));
    }
  } catch (const BudgetExceeded&) {
    res.budget_exceeded = true;
    return res;
  }
  res.feasible = true;
  res.objective = p.objective(res.x);
  return res;
}

// ------------------------------------------------------------------ enforce

namespace {

std::vector<double> violations_by_constraint(const ConstraintSet& set, std::span<const double> x,
                                             const WindowExample& w, ValueDomain d) {
  std::vector<double> out(set.size(), 0.0);
  for (std::size_t c = 0; c < set.size(); ++c) {
    for (double r : eval_exact(set[c], x, w.input, w.scalars, positive_eps(d))) out[c] += violation(set[c], r);
  }
  return out;
}

}  // namespace

EnforceResult enforce(const ConstraintSet& set, const WindowExample& window, const FineSeries& model_out,
                      const EnforceOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  EnforceResult out;
  out.report.window_id = window.id;
  out.report.pre_violations = violations_by_constraint(set, model_out.values, window, model_out.domain);
  out.series = model_out;

  std::vector<char> active(set.size(), 1);
  std::vector<std::size_t> droppable;
  for (std::size_t c = set.size(); c-- > 0;) {
    if (set[c].kind == ConstraintKind::operational) droppable.push_back(c);
  }
  std::size_t next_drop = 0;
  CompileOptions copt = opt.compile;
  if (copt.target_channel.empty()) copt.target_channel = window.target.channel;
  for (;;) {
    const auto problem = compile(set, window.input, window.scalars, model_out.values, model_out.domain, copt, active);
    const auto sol = solve(problem, opt.budget_seconds);
    if (sol.feasible) {
      out.series.values = sol.x;
      out.report.objective = sol.objective;
      break;
    }
    const std::string why = sol.budget_exceeded ? "solve budget exceeded" : "infeasible";
    if (!opt.fallback || next_drop >= droppable.size()) {
      out.report.infeasible = true;
      out.series.values = model_out.values;
      out.report.objective = 0;
      log_warn("window " + std::to_string(window.id) + ": " + why +
               (opt.fallback ? " even with measurement constraints only" : "") +
               "; returning the model output unchanged");
      break;
    }
    const std::size_t c = droppable[next_drop++];
    active[c] = 0;
    out.report.relaxed.push_back(set[c].name);
    log_warn("window " + std::to_string(window.id) + ": " + why + "; dropping operational constraint '" +
             set[c].name + "'");
  }
  out.report.post_violations = violations_by_constraint(set, out.series.values, window, out.series.domain);
  out.report.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<EnforceResult> enforce_all(const ConstraintSet& set, const std::vector<WindowExample>& windows,
                                       const std::vector<FineSeries>& model_out, const EnforceOptions& opt,
                                       Exec exec) {
  if (windows.size() != model_out.size()) throw ShapeError("model outputs do not match the windows");
  std::vector<EnforceResult> out(windows.size());
  for_each_index(windows.size(), exec, [&](std::size_t i) { out[i] = enforce(set, windows[i], model_out[i], opt); });
  return out;
}

// ------------------------------------------------------------------ oracle

OracleResult brute_force_oracle(const RepairProblem& p, const std::vector<double>& value_grid) {
  if (p.n > 8) throw SolverError("brute-force oracle limited to windows of at most 8 steps");
  if (value_grid.empty() || value_grid.size() > 8) throw SolverError("brute-force oracle needs 1..8 grid values");
  if (p.set == nullptr || p.bundle == nullptr || p.scalars == nullptr) throw SolverError("problem has no source");
  const auto& set = *p.set;
  const double eps = positive_eps(p.domain);
  OracleResult best;
  std::vector<std::size_t> digit(p.n, 0);
  std::vector<double> x(p.n);
  for (;;) {
    for (std::size_t t = 0; t < p.n; ++t) x[t] = value_grid[digit[t]];
    bool ok = true;
    for (std::size_t c = 0; c < set.size() && ok; ++c) {
      if (!p.active[c]) continue;
      for (double r : eval_exact(set[c], x, *p.bundle, *p.scalars, eps)) {
        if (violation(set[c], r) > 1e-9) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      const double obj = p.objective(x);
      if (!best.feasible || obj < best.objective - 1e-12) {
        best.feasible = true;
        best.objective = obj;
        best.x = x;
      }
    }
    std::size_t k = 0;
    while (k < p.n && ++digit[k] == value_grid.size()) digit[k++] = 0;
    if (k == p.n) break;
  }
  return best;
}

std::string reports_csv(const ConstraintSet& set, const std::vector<RepairReport>& reports) {
  std::string out = "window_id,objective,solve_ms,infeasible,relaxed";
  for (const auto& c : set.items()) out += ",pre_" + c.name;
  for (const auto& c : set.items()) out += ",post_" + c.name;
  out += "\n";
  for (const auto& r : reports) {
    std::string relaxed;
    for (const auto& n : r.relaxed) relaxed += (relaxed.empty() ? "" : ";") + n;
    out += std::to_string(r.window_id) + "," + format_double(r.objective) + "," + format_double(r.solve_ms) + "," +
           (r.infeasible ? "1" : "0") + "," + relaxed;
    for (double v : r.pre_violations) out += "," + format_double(v);
    for (double v : r.post_violations) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace telezoom

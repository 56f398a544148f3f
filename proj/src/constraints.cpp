#include "telezoom/constraints.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "telezoom/series_io.hpp"

namespace telezoom {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool guard_uses_series(const Predicate& p) {
  return std::any_of(p.terms.begin(), p.terms.end(),
                     [](const Comparison& c) { return c.lhs->uses_series() || c.rhs->uses_series(); });
}

EvalContext context_for(const Constraint& c, std::span<const double> x, const CoarseBundle& bundle,
                        const Scalars& scalars, int instance) {
  EvalContext ctx;
  ctx.x = scope_slice(c, x, bundle.zoom, instance);
  ctx.bundle = &bundle;
  ctx.interval = c.scope == ConstraintScope::interval ? instance : -1;
  ctx.scalars = &scalars;
  return ctx;
}

void check_length(std::span<const double> x, const CoarseBundle& bundle) {
  const auto expected = static_cast<std::size_t>(bundle.context_len) * static_cast<std::size_t>(bundle.zoom);
  if (x.size() != expected) {
    throw ShapeError("imputed window has " + std::to_string(x.size()) + " steps, expected " +
                     std::to_string(expected));
  }
}

}  // namespace

Constraint make_constraint(std::string name, ConstraintForm form, ConstraintKind kind, std::string_view expr,
                           std::string_view guard, ConstraintScope scope) {
  Constraint c;
  c.name = std::move(name);
  c.form = form;
  c.kind = kind;
  c.scope = scope;
  c.expr = parse_expr(expr);
  if (!trim(guard).empty()) {
    c.guard = parse_predicate(guard);
    if (guard_uses_series(*c.guard)) {
      throw ConfigError("constraint '" + c.name + "': guard may only reference measurements and scalars");
    }
  }
  return c;
}

ConstraintSet::ConstraintSet(std::vector<Constraint> cs) {
  for (auto& c : cs) add(std::move(c));
}

void ConstraintSet::add(Constraint c) {
  if (c.name.empty()) throw ConfigError("constraint without a name");
  if (find(c.name) != nullptr) throw ConfigError("duplicate constraint name '" + c.name + "'");
  if (!c.expr) throw ConfigError("constraint '" + c.name + "' has no expression");
  items_.push_back(std::move(c));
}

const Constraint* ConstraintSet::find(std::string_view name) const {
  for (const auto& c : items_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::size_t ConstraintSet::equality_count() const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [](const Constraint& c) { return c.form == ConstraintForm::eq; }));
}

std::size_t ConstraintSet::inequality_count() const { return items_.size() - equality_count(); }

std::vector<std::string> ConstraintSet::measurement_refs() const {
  std::vector<std::string> m, s;
  for (const auto& c : items_) {
    collect_refs(*c.expr, m, s);
    if (c.guard) collect_refs(*c.guard, m, s);
  }
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  return m;
}

std::vector<std::string> ConstraintSet::scalar_refs() const {
  std::vector<std::string> m, s;
  for (const auto& c : items_) {
    collect_refs(*c.expr, m, s);
    if (c.guard) collect_refs(*c.guard, m, s);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

void ConstraintSet::check_layout(const std::vector<EntrySpec>& layout) const {
  for (const auto& c : items_) {
    std::vector<std::string> m, s;
    collect_refs(*c.expr, m, s);
    if (c.guard) collect_refs(*c.guard, m, s);
    for (const auto& name : m) {
      const auto it = std::find_if(layout.begin(), layout.end(), [&](const EntrySpec& e) { return e.name == name; });
      if (it == layout.end()) {
        throw ConfigError("constraint '" + c.name + "' references unknown measurement '" + name + "'");
      }
      if (c.scope == ConstraintScope::window && it->spec.kind == CoarsenKind::periodic) {
        throw ConfigError("constraint '" + c.name + "' uses periodic entry '" + name + "' at window scope");
      }
    }
  }
}

double positive_eps(ValueDomain d) { return d == ValueDomain::nonneg_int ? 1.0 : 1e-6; }

std::span<const double> scope_slice(const Constraint& c, std::span<const double> x, int zoom, int instance) {
  if (c.scope == ConstraintScope::window) return x;
  return x.subspan(static_cast<std::size_t>(instance) * static_cast<std::size_t>(zoom),
                   static_cast<std::size_t>(zoom));
}

bool guard_holds(const Constraint& c, const CoarseBundle& bundle, const Scalars& scalars, int instance) {
  if (!c.guard) return true;
  EvalContext ctx;
  ctx.bundle = &bundle;
  ctx.interval = c.scope == ConstraintScope::interval ? instance : -1;
  ctx.scalars = &scalars;
  return eval_predicate(*c.guard, ctx);
}

std::vector<double> eval_exact(const Constraint& c, std::span<const double> x, const CoarseBundle& bundle,
                               const Scalars& scalars, double eps) {
  check_length(x, bundle);
  const int n = c.instances(bundle.context_len);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (!guard_holds(c, bundle, scalars, i)) continue;
    auto ctx = context_for(c, x, bundle, scalars, i);
    ctx.positive_eps = eps;
    out[static_cast<std::size_t>(i)] = eval_exact(*c.expr, ctx);
  }
  return out;
}

std::vector<ScopedResidual> eval_smooth(const Constraint& c, std::span<const double> x, const CoarseBundle& bundle,
                                        const Scalars& scalars, const SmoothOptions& opt) {
  if (!(opt.k > 0)) throw ConfigError("smoothing sharpness must be positive");
  check_length(x, bundle);
  const int n = c.instances(bundle.context_len);
  std::vector<ScopedResidual> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& r = out[static_cast<std::size_t>(i)];
    r.offset = c.scope == ConstraintScope::interval ? static_cast<std::size_t>(i) * static_cast<std::size_t>(bundle.zoom) : 0;
    if (!guard_holds(c, bundle, scalars, i)) {
      r.active = false;
      continue;
    }
    auto ctx = context_for(c, x, bundle, scalars, i);
    ctx.positive_eps = opt.eps;
    ctx.smooth_k = opt.k;
    ctx.smooth_unit = opt.unit;
    auto d = eval_smooth(*c.expr, ctx);
    r.value = d.value;
    r.grad = std::move(d.grad);
  }
  return out;
}

double violation(const Constraint& c, double residual) {
  return c.form == ConstraintForm::eq ? std::abs(residual) : std::max(0.0, residual);
}

// ------------------------------------------------------------ text format

ConstraintSet parse_constraints(std::string_view text, const std::string& origin) {
  struct Pending {
    std::string name;
    int line = 0;
    std::map<std::string, std::string> keys;
    std::map<std::string, int> lines;
  };
  std::vector<Pending> sections;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw ConfigError(origin + " line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail("empty constraint name");
      sections.push_back(Pending{std::string(name), lineno, {}, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    if (sections.empty()) fail("key outside of a [constraint] section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    static const std::set<std::string> known = {"kind", "form", "expr", "guard", "scope", "scale"};
    if (!known.contains(key)) fail("unknown key '" + key + "'");
    if (sections.back().keys.contains(key)) fail("duplicate key '" + key + "'");
    sections.back().keys[key] = value;
    sections.back().lines[key] = lineno;
  }

  ConstraintSet set;
  for (const auto& s : sections) {
    lineno = s.line;
    auto get = [&](const std::string& k, const std::string& fallback) {
      const auto it = s.keys.find(k);
      if (it == s.keys.end()) return fallback;
      lineno = s.lines.at(k);
      return it->second;
    };
    ConstraintForm form;
    const auto form_s = get("form", "eq");
    if (form_s == "eq") form = ConstraintForm::eq;
    else if (form_s == "le") form = ConstraintForm::le;
    else fail("form must be 'eq' or 'le', got '" + form_s + "'");
    ConstraintKind kind;
    const auto kind_s = get("kind", "measurement");
    if (kind_s == "measurement") kind = ConstraintKind::measurement;
    else if (kind_s == "operational") kind = ConstraintKind::operational;
    else fail("kind must be 'measurement' or 'operational', got '" + kind_s + "'");
    ConstraintScope scope;
    const auto scope_s = get("scope", "interval");
    if (scope_s == "interval") scope = ConstraintScope::interval;
    else if (scope_s == "window") scope = ConstraintScope::window;
    else fail("scope must be 'interval' or 'window', got '" + scope_s + "'");
    if (!s.keys.contains("expr")) {
      lineno = s.line;
      fail("constraint '" + s.name + "' has no expr");
    }
    Constraint c;
    const auto guard = get("guard", "");
    lineno = s.lines.at("expr");
    try {
      c = make_constraint(s.name, form, kind, s.keys.at("expr"), guard, scope);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    if (s.keys.contains("scale")) {
      const auto v = get("scale", "");
      double d = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !(d > 0)) fail("scale must be a positive number");
      c.scale = d;
    }
    lineno = s.line;
    try {
      set.add(std::move(c));
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  return set;
}

std::string format_constraints(const ConstraintSet& set) {
  std::string out;
  for (const auto& c : set.items()) {
    if (!out.empty()) out += '\n';
    out += "[" + c.name + "]\n";
    out += std::string("kind = ") + (c.kind == ConstraintKind::measurement ? "measurement" : "operational") + "\n";
    out += std::string("form = ") + (c.form == ConstraintForm::eq ? "eq" : "le") + "\n";
    out += "expr = " + to_string(*c.expr) + "\n";
    if (c.guard) out += "guard = " + to_string(*c.guard) + "\n";
    if (c.scope == ConstraintScope::window) out += "scope = window\n";
    if (c.scale) out += "scale = " + format_double(*c.scale) + "\n";
  }
  return out;
}

ConstraintSet load_constraints(const std::string& path) { return parse_constraints(read_file(path), path); }

// ------------------------------------------------------------ library

const std::string& Bindings::require(const std::string& role, const std::string& constraint) const {
  const auto it = roles.find(role);
  if (it == roles.end() || it->second.empty()) {
    throw ConfigError("constraint " + constraint + " needs a binding for '" + role + "'");
  }
  return it->second;
}

ConstraintSet builtin_library(const std::vector<std::string>& ids, const Bindings& b) {
  using F = ConstraintForm;
  using K = ConstraintKind;
  ConstraintSet set;
  for (const auto& id : ids) {
    auto m = [&](const std::string& role) { return "m." + b.require(role, id); };
    auto s = [&](const std::string& role) { return "s." + b.require(role, id); };
    if (id == "C1") {
      set.add(make_constraint(id, F::eq, K::measurement, m("max") + " - max(x)"));
    } else if (id == "C2") {
      set.add(make_constraint(id, F::eq, K::measurement,
                              m("periodic") + " - at(x, " + std::to_string(b.periodic_offset) + ")"));
    } else if (id == "C3") {
      set.add(make_constraint(id, F::le, K::operational, "count_pos(x) - " + m("sent")));
    } else if (id == "C4") {
      set.add(make_constraint(id, F::eq, K::measurement, m("sum") + " - sum(x)"));
    } else if (id == "C5") {
      set.add(make_constraint(id, F::le, K::operational, m("retransmit") + " - sum(x)"));
    } else if (id == "C6") {
      set.add(make_constraint(id, F::le, K::operational, m("congestion") + " - sum(x)"));
    } else if (id == "C7") {
      set.add(make_constraint(id, F::le, K::operational,
                              format_double(b.burst_factor) + " * " + s("bandwidth") + " - max(x)",
                              m("congestion") + " > 0"));
    } else if (id == "C8") {
      set.add(make_constraint(id, F::le, K::operational, "sum(x) - " + s("mss") + " * " + s("snd_cwnd"),
                              s("elapsed_time") + " <= " + s("rtt")));
    } else if (id == "C9") {
      set.add(make_constraint(id, F::eq, K::operational, "sum(x)", s("elapsed_time") + " <= " + s("rwnd_limited")));
    } else {
      throw ConfigError("unknown library constraint '" + id + "' (expected C1..C9)");
    }
  }
  return set;
}

}  // namespace telezoom

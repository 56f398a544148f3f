#include "telezoom/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

namespace telezoom {

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok { num, ident, dot, lparen, rparen, comma, plus, minus, star, slash, cmp, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' || s[j] == 'e' || s[j] == 'E' ||
                              ((s[j] == '-' || s[j] == '+') && j > i && (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
        ++j;
      }
      t.kind = Tok::num;
      t.text = std::string(s.substr(i, j - i));
      const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size()) {
        throw ConfigError("bad number '" + t.text + "' in expression");
      }
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else {
      switch (c) {
        case '.': t.kind = Tok::dot; break;
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case ',': t.kind = Tok::comma; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        case '/': t.kind = Tok::slash; break;
        case '<':
        case '>':
        case '=':
        case '!': {
          t.kind = Tok::cmp;
          if (i + 1 < s.size() && s[i + 1] == '=') {
            t.text = std::string(s.substr(i, 2));
            ++i;
          } else {
            t.text = std::string(1, c);
            if (c == '=' || c == '!') throw ConfigError("unexpected '" + t.text + "' in expression");
          }
          break;
        }
        default: throw ConfigError(std::string("unexpected character '") + c + "' in expression");
      }
      t.text = t.text.empty() ? std::string(1, c) : t.text;
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------- parser

ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::number;
  e->number = v;
  return e;
}

ExprPtr make_binary(ExprOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(a), std::move(b)};
  return e;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), toks_(lex(text)) {}

  ExprPtr parse_full_expr() {
    auto e = expr();
    expect(Tok::end, "end of expression");
    return e;
  }

  Predicate parse_full_predicate() {
    Predicate p;
    p.terms.push_back(comparison());
    while (peek().kind == Tok::ident && peek().text == "and") {
      ++pos_;
      p.terms.push_back(comparison());
    }
    expect(Tok::end, "end of guard");
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(text_) + "': expected " + what + " at column " +
                      std::to_string(peek().pos + 1));
  }

  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(what);
    return toks_[pos_++];
  }

  Comparison comparison() {
    Comparison c;
    c.lhs = expr();
    const auto& t = expect(Tok::cmp, "comparison operator");
    if (t.text == "<") c.op = CmpOp::lt;
    else if (t.text == "<=") c.op = CmpOp::le;
    else if (t.text == ">") c.op = CmpOp::gt;
    else if (t.text == ">=") c.op = CmpOp::ge;
    else if (t.text == "==") c.op = CmpOp::eq;
    else c.op = CmpOp::ne;
    c.rhs = expr();
    return c;
  }

  ExprPtr expr() {
    auto lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const auto op = peek().kind == Tok::plus ? ExprOp::add : ExprOp::sub;
      ++pos_;
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const auto op = peek().kind == Tok::star ? ExprOp::mul : ExprOp::div;
      ++pos_;
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    if (peek().kind == Tok::minus) {
      ++pos_;
      auto e = std::make_shared<Expr>();
      e->op = ExprOp::neg;
      e->args = {unary()};
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Tok::num) {
      ++pos_;
      return make_number(t.number);
    }
    if (t.kind == Tok::lparen) {
      ++pos_;
      auto e = expr();
      expect(Tok::rparen, "')'");
      return e;
    }
    if (t.kind != Tok::ident) fail("a number, reference or aggregate");
    const std::string id = t.text;
    ++pos_;
    if ((id == "m" || id == "s") && peek().kind == Tok::dot) {
      ++pos_;
      const auto& name = expect(Tok::ident, "a name after '" + id + ".'");
      auto e = std::make_shared<Expr>();
      e->op = id == "m" ? ExprOp::measurement : ExprOp::scalar;
      e->name = name.text;
      return e;
    }
    static const std::pair<const char*, AggKind> kAggs[] = {{"sum", AggKind::sum},   {"max", AggKind::max},
                                                            {"min", AggKind::min},   {"mean", AggKind::mean},
                                                            {"count_pos", AggKind::count_pos}, {"at", AggKind::at}};
    for (const auto& [word, kind] : kAggs) {
      if (id != word) continue;
      expect(Tok::lparen, "'(' after " + id);
      const auto& arg = expect(Tok::ident, "'x'");
      if (arg.text != "x") fail("'x' (the imputed series)");
      auto e = std::make_shared<Expr>();
      e->op = ExprOp::aggregate;
      e->agg = kind;
      if (kind == AggKind::at) {
        expect(Tok::comma, "',' and an index");
        const auto& idx = expect(Tok::num, "an index");
        if (idx.number < 0 || idx.number != std::floor(idx.number)) fail("a non-negative integer index");
        e->index = static_cast<int>(idx.number);
      }
      expect(Tok::rparen, "')'");
      return e;
    }
    fail("a known aggregate (sum, max, min, mean, count_pos, at) or m./s. reference, got '" + id + "'");
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ------------------------------------------------------------ evaluation

double measurement_value(const std::string& name, const EvalContext& ctx) {
  if (ctx.bundle == nullptr) throw DataError("measurement '" + name + "' referenced without a coarse bundle");
  const auto* entry = ctx.bundle->find(name);
  if (entry == nullptr) throw DataError("unresolved measurement 'm." + name + "'");
  const auto& v = entry->values;
  if (ctx.interval >= 0) {
    if (static_cast<std::size_t>(ctx.interval) >= v.size()) {
      throw ShapeError("measurement 'm." + name + "' has no interval " + std::to_string(ctx.interval));
    }
    return v[static_cast<std::size_t>(ctx.interval)];
  }
  // Window scope: fold the per-interval values with the entry's own operator.
  switch (entry->entry.spec.kind) {
    case CoarsenKind::max: return *std::max_element(v.begin(), v.end());
    case CoarsenKind::min: return *std::min_element(v.begin(), v.end());
    case CoarsenKind::mean: return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    case CoarsenKind::sum:
    case CoarsenKind::count_positive: return std::accumulate(v.begin(), v.end(), 0.0);
    case CoarsenKind::periodic: break;
  }
  throw ConfigError("periodic measurement 'm." + name + "' has no window-scope value");
}

double scalar_value(const std::string& name, const EvalContext& ctx) {
  if (ctx.scalars != nullptr) {
    if (const auto it = ctx.scalars->find(name); it != ctx.scalars->end()) return it->second;
  }
  throw DataError("unresolved scalar 's." + name + "'");
}

void check_index(int index, const EvalContext& ctx) {
  if (index < 0 || static_cast<std::size_t>(index) >= ctx.x.size()) {
    throw ShapeError("at(x, " + std::to_string(index) + ") outside a scope of " + std::to_string(ctx.x.size()) +
                     " steps");
  }
}

double aggregate_exact(const Expr& e, const EvalContext& ctx) {
  const auto x = ctx.x;
  if (x.empty()) throw ShapeError("aggregate over an empty scope");
  switch (e.agg) {
    case AggKind::sum: return std::accumulate(x.begin(), x.end(), 0.0);
    case AggKind::mean: return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    case AggKind::max: return *std::max_element(x.begin(), x.end());
    case AggKind::min: return *std::min_element(x.begin(), x.end());
    case AggKind::count_pos:
      return static_cast<double>(std::count_if(x.begin(), x.end(), [&](double v) { return v >= ctx.positive_eps; }));
    case AggKind::at: check_index(e.index, ctx); return x[static_cast<std::size_t>(e.index)];
  }
  return 0;
}

void add_scaled(std::vector<double>& into, const std::vector<double>& g, double scale) {
  if (g.empty()) return;
  if (into.empty()) into.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) into[i] += scale * g[i];
}

Dual aggregate_smooth(const Expr& e, const EvalContext& ctx) {
  const auto x = ctx.x;
  const std::size_t n = x.size();
  if (n == 0) throw ShapeError("aggregate over an empty scope");
  Dual d;
  d.grad.assign(n, 0.0);
  switch (e.agg) {
    case AggKind::sum:
      d.value = std::accumulate(x.begin(), x.end(), 0.0);
      std::fill(d.grad.begin(), d.grad.end(), 1.0);
      break;
    case AggKind::mean:
      d.value = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
      std::fill(d.grad.begin(), d.grad.end(), 1.0 / static_cast<double>(n));
      break;
    case AggKind::max: {
      const auto it = std::max_element(x.begin(), x.end());
      d.value = *it;
      d.grad[static_cast<std::size_t>(it - x.begin())] = 1.0;
      break;
    }
    case AggKind::min: {
      const auto it = std::min_element(x.begin(), x.end());
      d.value = *it;
      d.grad[static_cast<std::size_t>(it - x.begin())] = 1.0;
      break;
    }
    case AggKind::count_pos: {
      // Indicator x >= eps smoothed around eps/2, on the unit scale.
      const double shift = 0.5 * ctx.positive_eps;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (x[i] - shift) / ctx.smooth_unit;
        const double th = std::tanh(ctx.smooth_k * u);
        d.value += 0.5 * (1.0 + th);
        d.grad[i] = 0.5 * ctx.smooth_k * (1.0 - th * th) / ctx.smooth_unit;
      }
      break;
    }
    case AggKind::at:
      check_index(e.index, ctx);
      d.value = x[static_cast<std::size_t>(e.index)];
      d.grad[static_cast<std::size_t>(e.index)] = 1.0;
      break;
  }
  return d;
}

bool compare(double a, CmpOp op, double b) {
  switch (op) {
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
  }
  return false;
}

const char* cmp_text(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
  }
  return "?";
}

const char* agg_text(AggKind k) {
  switch (k) {
    case AggKind::sum: return "sum";
    case AggKind::max: return "max";
    case AggKind::min: return "min";
    case AggKind::mean: return "mean";
    case AggKind::count_pos: return "count_pos";
    case AggKind::at: return "at";
  }
  return "?";
}

int precedence(const Expr& e) {
  switch (e.op) {
    case ExprOp::add:
    case ExprOp::sub: return 1;
    case ExprOp::mul:
    case ExprOp::div: return 2;
    case ExprOp::neg: return 3;
    default: return 4;
  }
}

std::string wrap(const Expr& child, int parent_prec, bool right_assoc_sensitive) {
  const int p = precedence(child);
  std::string s = to_string(child);
  if (p < parent_prec || (right_assoc_sensitive && p == parent_prec)) return "(" + s + ")";
  return s;
}

LinearForm linear_rec(const Expr& e, const EvalContext& ctx) {
  LinearForm f;
  switch (e.op) {
    case ExprOp::number:
    case ExprOp::measurement:
    case ExprOp::scalar: f.constant = eval_exact(e, ctx); return f;
    case ExprOp::aggregate: f.terms.push_back(LinearTerm{e.agg, e.index, 1.0}); return f;
    case ExprOp::neg: {
      f = linear_rec(*e.args[0], ctx);
      f.constant = -f.constant;
      for (auto& t : f.terms) t.coef = -t.coef;
      return f;
    }
    case ExprOp::add:
    case ExprOp::sub: {
      f = linear_rec(*e.args[0], ctx);
      auto g = linear_rec(*e.args[1], ctx);
      const double sign = e.op == ExprOp::add ? 1.0 : -1.0;
      f.constant += sign * g.constant;
      for (auto t : g.terms) {
        t.coef *= sign;
        f.terms.push_back(t);
      }
      return f;
    }
    case ExprOp::mul: {
      auto a = linear_rec(*e.args[0], ctx);
      auto b = linear_rec(*e.args[1], ctx);
      if (!a.terms.empty() && !b.terms.empty()) {
        throw SolverError("expression '" + to_string(e) + "' multiplies two series aggregates");
      }
      if (!a.terms.empty()) std::swap(a, b);
      // a is constant now
      f.constant = a.constant * b.constant;
      for (auto t : b.terms) {
        t.coef *= a.constant;
        f.terms.push_back(t);
      }
      return f;
    }
    case ExprOp::div: {
      auto a = linear_rec(*e.args[0], ctx);
      auto b = linear_rec(*e.args[1], ctx);
      if (!b.terms.empty()) throw SolverError("expression '" + to_string(e) + "' divides by a series aggregate");
      if (b.constant == 0) throw SolverError("expression '" + to_string(e) + "' divides by zero");
      f.constant = a.constant / b.constant;
      for (auto t : a.terms) {
        t.coef /= b.constant;
        f.terms.push_back(t);
      }
      return f;
    }
  }
  return f;
}

}  // namespace

bool Expr::uses_series() const {
  if (op == ExprOp::aggregate) return true;
  return std::any_of(args.begin(), args.end(), [](const ExprPtr& a) { return a->uses_series(); });
}

ExprPtr parse_expr(std::string_view text) { return Parser(text).parse_full_expr(); }

Predicate parse_predicate(std::string_view text) { return Parser(text).parse_full_predicate(); }

std::string to_string(const Expr& e) {
  switch (e.op) {
    case ExprOp::number: {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof(buf), e.number);
      return std::string(buf, res.ptr);
    }
    case ExprOp::measurement: return "m." + e.name;
    case ExprOp::scalar: return "s." + e.name;
    case ExprOp::aggregate:
      if (e.agg == AggKind::at) return "at(x, " + std::to_string(e.index) + ")";
      return std::string(agg_text(e.agg)) + "(x)";
    case ExprOp::neg: return "-" + wrap(*e.args[0], 3, false);
    case ExprOp::add: return wrap(*e.args[0], 1, false) + " + " + wrap(*e.args[1], 1, false);
    case ExprOp::sub: return wrap(*e.args[0], 1, false) + " - " + wrap(*e.args[1], 1, true);
    case ExprOp::mul: return wrap(*e.args[0], 2, false) + " * " + wrap(*e.args[1], 2, false);
    case ExprOp::div: return wrap(*e.args[0], 2, false) + " / " + wrap(*e.args[1], 2, true);
  }
  return "?";
}

std::string to_string(const Predicate& p) {
  std::string out;
  for (std::size_t i = 0; i < p.terms.size(); ++i) {
    if (i) out += " and ";
    out += to_string(*p.terms[i].lhs) + " " + cmp_text(p.terms[i].op) + " " + to_string(*p.terms[i].rhs);
  }
  return out;
}

void collect_refs(const Expr& e, std::vector<std::string>& measurements, std::vector<std::string>& scalars) {
  if (e.op == ExprOp::measurement) measurements.push_back(e.name);
  if (e.op == ExprOp::scalar) scalars.push_back(e.name);
  for (const auto& a : e.args) collect_refs(*a, measurements, scalars);
}

void collect_refs(const Predicate& p, std::vector<std::string>& measurements, std::vector<std::string>& scalars) {
  for (const auto& c : p.terms) {
    collect_refs(*c.lhs, measurements, scalars);
    collect_refs(*c.rhs, measurements, scalars);
  }
}

double eval_exact(const Expr& e, const EvalContext& ctx) {
  switch (e.op) {
    case ExprOp::number: return e.number;
    case ExprOp::measurement: return measurement_value(e.name, ctx);
    case ExprOp::scalar: return scalar_value(e.name, ctx);
    case ExprOp::aggregate: return aggregate_exact(e, ctx);
    case ExprOp::neg: return -eval_exact(*e.args[0], ctx);
    case ExprOp::add: return eval_exact(*e.args[0], ctx) + eval_exact(*e.args[1], ctx);
    case ExprOp::sub: return eval_exact(*e.args[0], ctx) - eval_exact(*e.args[1], ctx);
    case ExprOp::mul: return eval_exact(*e.args[0], ctx) * eval_exact(*e.args[1], ctx);
    case ExprOp::div: return eval_exact(*e.args[0], ctx) / eval_exact(*e.args[1], ctx);
  }
  return 0;
}

bool eval_predicate(const Predicate& p, const EvalContext& ctx) {
  return std::all_of(p.terms.begin(), p.terms.end(), [&](const Comparison& c) {
    return compare(eval_exact(*c.lhs, ctx), c.op, eval_exact(*c.rhs, ctx));
  });
}

double step_k(double x, double k) { return 0.5 * (1.0 + std::tanh(k * x)); }

Dual eval_smooth(const Expr& e, const EvalContext& ctx) {
  Dual d;
  switch (e.op) {
    case ExprOp::number:
    case ExprOp::measurement:
    case ExprOp::scalar: d.value = eval_exact(e, ctx); return d;
    case ExprOp::aggregate: return aggregate_smooth(e, ctx);
    case ExprOp::neg: {
      d = eval_smooth(*e.args[0], ctx);
      d.value = -d.value;
      for (auto& g : d.grad) g = -g;
      return d;
    }
    case ExprOp::add:
    case ExprOp::sub: {
      d = eval_smooth(*e.args[0], ctx);
      const auto b = eval_smooth(*e.args[1], ctx);
      const double sign = e.op == ExprOp::add ? 1.0 : -1.0;
      d.value += sign * b.value;
      add_scaled(d.grad, b.grad, sign);
      return d;
    }
    case ExprOp::mul: {
      const auto a = eval_smooth(*e.args[0], ctx);
      const auto b = eval_smooth(*e.args[1], ctx);
      d.value = a.value * b.value;
      add_scaled(d.grad, a.grad, b.value);
      add_scaled(d.grad, b.grad, a.value);
      return d;
    }
    case ExprOp::div: {
      const auto a = eval_smooth(*e.args[0], ctx);
      const auto b = eval_smooth(*e.args[1], ctx);
      d.value = a.value / b.value;
      add_scaled(d.grad, a.grad, 1.0 / b.value);
      add_scaled(d.grad, b.grad, -a.value / (b.value * b.value));
      return d;
    }
  }
  return d;
}

LinearForm linearize(const Expr& e, const EvalContext& ctx) {
  auto raw = linear_rec(e, ctx);
  LinearForm out;
  out.constant = raw.constant;
  for (const auto& t : raw.terms) {
    auto it = std::find_if(out.terms.begin(), out.terms.end(), [&](const LinearTerm& u) {
      return u.agg == t.agg && (t.agg != AggKind::at || u.index == t.index);
    });
    if (it == out.terms.end()) out.terms.push_back(t);
    else it->coef += t.coef;
  }
  std::erase_if(out.terms, [](const LinearTerm& t) { return t.coef == 0.0; });
  return out;
}

}  // namespace telezoom

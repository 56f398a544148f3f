#include <doctest.h>

#include "fixtures.hpp"
#include "telezoom/expr.hpp"

using namespace telezoom;

namespace {

struct Ctx {
  WindowExample w;
  Scalars s{{"rtt", 20}, {"mss", 1.5}};
  EvalContext at(std::span<const double> x, int interval) {
    EvalContext c;
    c.x = x;
    c.bundle = &w.input;
    c.interval = interval;
    c.scalars = &s;
    c.positive_eps = 1;
    return c;
  }
};

}  // namespace

TEST_CASE("expressions print back to an equivalent form") {
  for (const char* src : {"m.q_max - max(x)", "2 * s.mss * (sum(x) - 3)", "-(at(x, 2) + 1) / 4",
                          "count_pos(x) - m.q_sum", "mean(x) - min(x)"}) {
    const auto e = parse_expr(src);
    const auto again = parse_expr(to_string(*e));
    CHECK(to_string(*again) == to_string(*e));
  }
  CHECK_THROWS_AS(parse_expr("max(x"), ConfigError);
  CHECK_THROWS_AS(parse_expr("m."), ConfigError);
  CHECK_THROWS_AS(parse_expr("foo(x)"), ConfigError);
}

TEST_CASE("exact evaluation on an interval") {
  Ctx c;
  c.w = fixtures::window_from({0, 4, 2, 1, 1, 0}, 3);
  const std::vector<double> x{0, 4, 2};
  const auto ctx = c.at(x, 0);
  CHECK(eval_exact(*parse_expr("m.q_max - max(x)"), ctx) == 0);
  CHECK(eval_exact(*parse_expr("sum(x) + min(x) + mean(x)"), ctx) == 8);
  CHECK(eval_exact(*parse_expr("count_pos(x)"), ctx) == 2);
  CHECK(eval_exact(*parse_expr("at(x, 1) * s.mss"), ctx) == 6);
  CHECK_THROWS(eval_exact(*parse_expr("at(x, 3)"), ctx));
  CHECK(eval_predicate(parse_predicate("s.rtt >= 20 and m.q_sum == 6"), ctx));
  CHECK_FALSE(eval_predicate(parse_predicate("s.rtt < 20"), ctx));
}

TEST_CASE("window scope folds each measurement with its own kind") {
  Ctx c;
  c.w = fixtures::window_from({0, 4, 2, 1, 5, 0}, 3);
  const std::vector<double> x{0, 4, 2, 1, 5, 0};
  const auto ctx = c.at(x, -1);
  CHECK(eval_exact(*parse_expr("m.q_max"), ctx) == 5);
  CHECK(eval_exact(*parse_expr("m.q_sum"), ctx) == 12);
  CHECK_THROWS_AS(eval_exact(*parse_expr("m.q_periodic"), ctx), ConfigError);
}

TEST_CASE("smoothed count approaches the exact count as k grows") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(10);
    for (auto& v : x) v = rng.below(3) == 0 ? 0.0 : static_cast<double>(rng.below(5));
    Ctx c;
    c.w = fixtures::window_from(x, 10);
    auto ctx = c.at(x, 0);
    const double exact = eval_exact(*parse_expr("count_pos(x)"), ctx);
    double prev = 1e300;
    for (double k : {1.0, 10.0, 100.0}) {
      ctx.smooth_k = k;
      const double gap = std::abs(eval_smooth(*parse_expr("count_pos(x)"), ctx).value - exact);
      CHECK(gap < prev);
      prev = gap;
    }
  }
}

TEST_CASE("smooth gradients agree with finite differences") {
  Ctx c;
  const std::vector<double> base{0.3, 2.0, 0.7, 1.1};
  c.w = fixtures::window_from({0, 2, 1, 1}, 4);
  const auto e = parse_expr("3 * count_pos(x) - sum(x) * 0.5 + mean(x) - at(x, 2)");
  auto f = [&](const std::vector<double>& x) {
    auto ctx = c.at(x, 0);
    ctx.smooth_k = 2;
    return eval_smooth(*e, ctx).value;
  };
  auto ctx = c.at(base, 0);
  ctx.smooth_k = 2;
  const auto d = eval_smooth(*e, ctx);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(fixtures::rel_diff(d.grad[i], fixtures::fd(f, base, i)) < 1e-6);
  }
}

TEST_CASE("smooth max has a one-hot gradient at the first maximum") {
  Ctx c;
  const std::vector<double> x{1, 3, 3, 2};
  c.w = fixtures::window_from({1, 3, 3, 2}, 4);
  const auto d = eval_smooth(*parse_expr("m.q_max - max(x)"), c.at(x, 0));
  CHECK(d.value == 0);
  CHECK(d.grad == std::vector<double>{0, -1, 0, 0});
}

TEST_CASE("linearize folds constants and merges terms") {
  Ctx c;
  c.w = fixtures::window_from({0, 4, 2}, 3);
  const std::vector<double> x{0, 0, 0};
  const auto lf = linearize(*parse_expr("2 * (m.q_max - max(x)) + max(x) - s.rtt"), c.at(x, 0));
  REQUIRE(lf.terms.size() == 1);
  CHECK(lf.terms[0].agg == AggKind::max);
  CHECK(lf.terms[0].coef == -1);
  CHECK(lf.constant == 8 - 20);
  CHECK(linearize(*parse_expr("max(x) - max(x) + 1"), c.at(x, 0)).terms.empty());
  CHECK_THROWS_AS(linearize(*parse_expr("sum(x) / max(x)"), c.at(x, 0)), SolverError);
}

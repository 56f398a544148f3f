#include <doctest.h>

#include "fixtures.hpp"
#include "tiny_cem.hpp"
#include "telezoom/cem.hpp"

using namespace telezoom;

namespace {

FineSeries series(std::vector<double> v, ValueDomain d = ValueDomain::nonneg_int) {
  FineSeries s;
  s.channel = "q";
  s.values = std::move(v);
  s.domain = d;
  return s;
}

ConstraintSet c1_only() { return parse_constraints("[C1]\nkind = measurement\nform = eq\nexpr = m.q_max - max(x)\n"); }

using fixtures::kGrid;
using fixtures::random_tiny;

}  // namespace

TEST_CASE("C1 raises the earliest argmax to the measured max") {
  auto w = fixtures::window_from({3, 3}, 2, {CoarsenKind::max});
  w.input.entries[0].values = {5};
  const auto set = c1_only();
  const auto p = compile(set, w.input, {}, std::vector<double>{3, 3}, ValueDomain::nonneg_int);
  const auto r = solve(p);
  REQUIRE(r.feasible);
  CHECK(r.objective == 2);
  CHECK(r.x == std::vector<double>{5, 3});
  const auto o = brute_force_oracle(p, kGrid);
  CHECK(o.feasible);
  CHECK(o.objective == 2);
}

TEST_CASE("C1 below every output caps all values and pins one") {
  auto w = fixtures::window_from({1, 1, 1}, 3, {CoarsenKind::max});
  w.input.entries[0].values = {2};
  const auto r = solve(compile(c1_only(), w.input, {}, std::vector<double>{7, 9, 8}, ValueDomain::nonneg_int));
  REQUIRE(r.feasible);
  CHECK(r.x == std::vector<double>{2, 2, 2});
}

TEST_CASE("C2 alone fixes the samples and leaves the rest") {
  const auto w = fixtures::window_from({4, 1, 2, 6, 0, 0}, 3, {CoarsenKind::periodic});
  const auto set = parse_constraints("[C2]\nkind = measurement\nform = eq\nexpr = m.q_periodic - at(x, 0)\n");
  const std::vector<double> y{1, 2, 3, 4, 5, 6};
  const auto p = compile(set, w.input, {}, y, ValueDomain::nonneg_int);
  CHECK(p.sampled == std::vector<char>{1, 0, 0, 1, 0, 0});
  const auto r = solve(p);
  CHECK(r.x == std::vector<double>{4, 2, 3, 6, 5, 6});
  CHECK(r.objective == 0);  // sampled steps are outside the objective
}

TEST_CASE("an already feasible output comes back unchanged") {
  const std::vector<double> truth{0, 3, 1, 2, 2, 0};
  const auto w = fixtures::window_from(truth, 3);
  const auto res = enforce(fixtures::queue_set_q(), w, series(truth));
  CHECK(res.series.values == truth);
  CHECK(res.report.objective == 0);
  CHECK_FALSE(res.report.infeasible);
}

TEST_CASE("C9 with a true guard zeroes the interval") {
  WindowExample w;
  w.input.zoom = 4;
  w.input.context_len = 1;
  w.scalars = {{"elapsed_time", 3}, {"rwnd_limited", 3}};
  Bindings b;
  for (const char* s : {"elapsed_time", "rwnd_limited"}) b.roles[s] = s;
  const auto set = builtin_library({"C9"}, b);
  const auto res = enforce(set, w, series({1.5, 0.2, 7, 3}, ValueDomain::nonneg_real));
  CHECK(res.series.values == std::vector<double>{0, 0, 0, 0});
  w.scalars["rwnd_limited"] = 0;  // guard false: nothing to do
  CHECK(enforce(set, w, series({1.5, 0.2, 7, 3}, ValueDomain::nonneg_real)).report.objective == 0);
}

TEST_CASE("solver matches the brute-force oracle on random C1-C3 instances") {
  Rng rng(2024);
  int compared = 0, feasible = 0;
  for (int i = 0; i < 120; ++i) {
    const auto t = random_tiny(rng);
    CompileOptions opt;
    opt.channel_bound = 5;
    opt.target_channel = "q";
    const auto p = compile(t.set, t.w.input, {}, t.y, ValueDomain::nonneg_int, opt);
    const auto r = solve(p);
    const auto o = brute_force_oracle(p, kGrid);
    REQUIRE(r.feasible == o.feasible);
    if (r.feasible) {
      CHECK(r.objective == doctest::Approx(o.objective).epsilon(1e-12));
      ++feasible;
    }
    ++compared;
  }
  CHECK(compared == 120);
  CHECK(feasible >= 50);
}

TEST_CASE("count and sum rows together stay optimal") {
  // sum(x) = S and count_pos(x) <= K on one interval: branch and bound.
  const auto set = parse_constraints(
      "[total]\nkind = measurement\nform = eq\nexpr = m.q_sum - sum(x)\n\n"
      "[sparse]\nkind = operational\nform = le\nexpr = count_pos(x) - 2\n");
  Rng rng(7);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> truth(5, 0.0);
    truth[rng.below(5)] = static_cast<double>(rng.below(4));
    truth[rng.below(5)] += static_cast<double>(rng.below(3));
    auto w = fixtures::window_from(truth, 5, {CoarsenKind::sum});
    std::vector<double> y(5);
    for (auto& v : y) v = std::round(rng.uniform() * 40) / 10.0;
    CompileOptions opt;
    opt.channel_bound = 5;
    const auto p = compile(set, w.input, {}, y, ValueDomain::nonneg_int, opt);
    const auto r = solve(p);
    const auto o = brute_force_oracle(p, kGrid);
    REQUIRE(r.feasible == o.feasible);
    if (r.feasible) CHECK(r.objective == doctest::Approx(o.objective).epsilon(1e-12));
  }
}

TEST_CASE("real-domain sums are repaired by levelling") {
  const auto set = parse_constraints("[C4]\nkind = measurement\nform = eq\nexpr = m.q_sum - sum(x)\n");
  auto w = fixtures::window_from({1, 1, 1, 1}, 4, {CoarsenKind::sum}, ValueDomain::nonneg_real);
  w.input.entries[0].values = {10};
  const auto res = enforce(set, w, series({0.5, 4, 0, 1}, ValueDomain::nonneg_real));
  double s = 0;
  for (double v : res.series.values) s += v;
  CHECK(s == doctest::Approx(10).epsilon(1e-12));
  CHECK(res.report.objective == doctest::Approx(4.5));
  CHECK(res.series.values[1] == doctest::Approx(4));  // never lowered when raising the total
}

TEST_CASE("enforcement is idempotent and never touches samples") {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    auto t = random_tiny(rng);
    EnforceOptions opt;
    opt.compile.channel_bound = 5;
    opt.compile.target_channel = "q";
    const auto once = enforce(t.set, t.w, series(t.y, ValueDomain::nonneg_int), opt);
    const auto twice = enforce(t.set, t.w, once.series, opt);
    CHECK(twice.series.values == once.series.values);
    if (!once.report.infeasible) {
      const int zoom = t.w.input.zoom;
      const auto& samples = t.w.input.at("q_periodic").values;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        CHECK(once.series.values[k * static_cast<std::size_t>(zoom)] == samples[k]);
      }
    }
  }
}

TEST_CASE("operational constraints are dropped when the set is infeasible") {
  // The sample and the max force two positives; sent = 1 allows one.
  auto w = fixtures::window_from({2, 0, 3}, 3, {CoarsenKind::max, CoarsenKind::periodic});
  w.input.entries.push_back({make_entry("s", CoarsenKind::sum, 3), {1}});
  Bindings b;
  b.roles = {{"max", "q_max"}, {"periodic", "q_periodic"}, {"sent", "s_sum"}};
  const auto set = builtin_library({"C1", "C2", "C3"}, b);
  EnforceOptions opt;
  opt.compile.channel_bound = 5;
  opt.compile.target_channel = "q";
  const auto res = enforce(set, w, series({0, 0, 0}), opt);
  CHECK_FALSE(res.report.infeasible);
  CHECK(res.report.relaxed == std::vector<std::string>{"C3"});
  // Raising either free step to 3 costs the same; the earliest wins.
  CHECK(res.series.values == std::vector<double>{2, 3, 0});
  CHECK(res.report.objective == 3);

  opt.fallback = false;
  const auto strict = enforce(set, w, series({0, 0, 0}), opt);
  CHECK(strict.report.infeasible);
  CHECK(strict.series.values == std::vector<double>{0, 0, 0});
}

TEST_CASE("contradictory measurements flag the window and keep the output") {
  auto w = fixtures::window_from({2, 0, 3}, 3, {CoarsenKind::max, CoarsenKind::periodic});
  w.input.entries[1].values = {9};  // sample above the max
  const auto set = builtin_library({"C1", "C2"}, Bindings{{{"max", "q_max"}, {"periodic", "q_periodic"}}, 0, 0.5});
  const auto res = enforce(set, w, series({1, 1, 1}));
  CHECK(res.report.infeasible);
  CHECK(res.series.values == std::vector<double>{1, 1, 1});
}

TEST_CASE("unsupported forms and missing bounds are reported") {
  auto w = fixtures::window_from({1, 2, 3}, 3, {CoarsenKind::sum, CoarsenKind::mean});
  const auto nonlinear = parse_constraints("[bad]\nkind = operational\nform = le\nexpr = max(x) * max(x) - 4\n");
  CHECK_THROWS_AS(compile(nonlinear, w.input, {}, std::vector<double>{1, 2, 3}, ValueDomain::nonneg_int), SolverError);
  const auto mixed = parse_constraints("[two]\nkind = operational\nform = le\nexpr = max(x) - sum(x)\n");
  CHECK_THROWS_AS(compile(mixed, w.input, {}, std::vector<double>{1, 2, 3}, ValueDomain::nonneg_int), SolverError);
  const auto count = parse_constraints("[c]\nkind = operational\nform = le\nexpr = count_pos(x) - 1\n");
  CHECK_THROWS_WITH_AS(compile(count, w.input, {}, std::vector<double>{1, 2, 3}, ValueDomain::nonneg_int),
                       doctest::Contains("channel bound"), SolverError);
}

TEST_CASE("ground truth is feasible in its own compiled problem") {
  const auto preset = fixtures::small_preset("bursty", 1, 2000);
  const auto splits = build_dataset(preset, 50, 3);
  const auto& h = splits.test.header;
  const auto set = builtin_library(preset.constraints, standard_bindings(h.layout, h.target));
  CompileOptions opt;
  opt.channel_bound = h.target_bound;
  opt.target_channel = h.target;
  for (std::size_t i = 0; i < std::min<std::size_t>(splits.test.windows.size(), 30); ++i) {
    const auto& w = splits.test.windows[i];
    std::vector<double> y(w.target.values.size(), 1.0);
    const auto p = compile(set, w.input, w.scalars, y, h.target_domain, opt);
    CHECK_FALSE(p.trivially_infeasible);
    for (std::size_t t = 0; t < p.n; ++t) {
      CHECK(w.target.values[t] >= p.lower[t]);
      CHECK(w.target.values[t] <= p.upper[t]);
    }
    CHECK(p.objective(w.target.values) >= solve(p).objective - 1e-9);
  }
}

TEST_CASE("repair report CSV lists pre and post violations") {
  const std::vector<double> truth{0, 3, 1, 2, 2, 0};
  const auto w = fixtures::window_from(truth, 3);
  const auto set = fixtures::queue_set_q();
  const auto res = enforce(set, w, series({1, 1, 1, 1, 1, 1}));
  const auto csv = reports_csv(set, {res.report});
  CHECK(csv.rfind("window_id,objective,solve_ms,infeasible,relaxed,pre_C1,pre_C2,pre_C3,post_C1,post_C2,post_C3\n", 0) == 0);
  for (double v : res.report.post_violations) CHECK(v == 0);
}

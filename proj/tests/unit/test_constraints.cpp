#include <doctest.h>

#include "fixtures.hpp"
#include "telezoom/constraints.hpp"

using namespace telezoom;

TEST_CASE("constraint files round-trip through the text format") {
  const char* text =
      "# queue facts\n"
      "[C1]\nkind = measurement\nform = eq\nexpr = m.q_max - max(x)\n\n"
      "[busy]\nkind = operational\nform = le\nexpr = count_pos(x) - m.q_sum\nguard = m.q_max > 0\n"
      "scope = window\nscale = 5\n";
  const auto set = parse_constraints(text);
  REQUIRE(set.size() == 2);
  CHECK(set.equality_count() == 1);
  CHECK(set.inequality_count() == 1);
  CHECK(set[1].scope == ConstraintScope::window);
  CHECK(set[1].scale == 5);
  const auto again = parse_constraints(format_constraints(set));
  CHECK(format_constraints(again) == format_constraints(set));
}

TEST_CASE("parse errors name the line") {
  CHECK_THROWS_WITH_AS(parse_constraints("[a]\nkind = measurement\nform = eq\nexpr = max(x\n"),
                       doctest::Contains("line 4"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_constraints("[a]\nkind = sometimes\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(parse_constraints("[a]\nform = eq\nexpr = max(x)\nguard = max(x) > 1\nkind = measurement\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_constraints("[a]\nkind = measurement\nform = eq\nexpr = max(x)\n[a]\nkind = measurement\n"
                                    "form = eq\nexpr = max(x)\n"),
                  ConfigError);
}

TEST_CASE("layout check names the unknown measurement") {
  const auto set = fixtures::queue_set_q();
  const auto w = fixtures::window_from({1, 2, 3}, 3, {CoarsenKind::max, CoarsenKind::periodic});
  CHECK_THROWS_WITH_AS(set.check_layout(w.input.layout()), doctest::Contains("q_sum"), ConfigError);
}

TEST_CASE("guards switch instances off") {
  auto w = fixtures::window_from({0, 0, 3, 4}, 2, {CoarsenKind::max});
  const auto c = make_constraint("g", ConstraintForm::le, ConstraintKind::operational, "1 - max(x)", "m.q_max > 0");
  const std::vector<double> x{0, 0, 0, 0};
  const auto r = eval_exact(c, x, w.input, {}, 1);
  CHECK(r == std::vector<double>{0, 1});
  const auto s = eval_smooth(c, x, w.input, {}, SmoothOptions{});
  CHECK_FALSE(s[0].active);
  CHECK(s[1].active);
  CHECK(s[1].offset == 2);
}

TEST_CASE("smooth and exact agree on constraints without steps") {
  const auto preset = fixtures::small_preset("link", 1, 1500);
  const auto splits = build_dataset(preset, 25, 4);
  const auto& h = splits.train.header;
  const auto set = builtin_library({"C4", "C5", "C6", "C7"}, standard_bindings(h.layout, h.target));
  for (const auto& w : splits.train.windows) {
    for (const auto& c : set.items()) {
      const auto e = eval_exact(c, w.target.values, w.input, w.scalars, 1e-6);
      const auto s = eval_smooth(c, w.target.values, w.input, w.scalars, SmoothOptions{});
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (s[i].active) CHECK(s[i].value == e[i]);
      }
    }
  }
}

TEST_CASE("ground truth satisfies every library constraint it is generated for") {
  for (const char* name : {"bursty", "persistent", "link"}) {
    const auto preset = fixtures::small_preset(name, 1, 2000);
    const auto splits = build_dataset(preset, 50, 8);
    const auto& h = splits.train.header;
    const std::vector<std::string> ids =
        std::string(name) == "link" ? std::vector<std::string>{"C4", "C5", "C6", "C7", "C8", "C9"} : preset.constraints;
    const auto set = builtin_library(ids, standard_bindings(h.layout, h.target));
    double worst = 0;
    for (const auto* split : {&splits.train, &splits.val, &splits.test}) {
      for (const auto& w : split->windows) {
        for (const auto& c : set.items()) {
          for (double r : eval_exact(c, w.target.values, w.input, w.scalars, positive_eps(h.target_domain))) {
            worst = std::max(worst, violation(c, r));
          }
        }
      }
    }
    INFO(name);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("library bindings are required") {
  Bindings b;
  CHECK_THROWS_WITH_AS(builtin_library({"C1"}, b), doctest::Contains("max"), ConfigError);
  CHECK_THROWS_AS(builtin_library({"C42"}, b), ConfigError);
}

TEST_CASE("shipped constraint files match the built-in library") {
  const std::string dir = std::string(TELEZOOM_SOURCE_DIR) + "/constraints/";
  Bindings q;
  q.roles = {{"max", "qlen_max"}, {"periodic", "qlen_periodic"}, {"sent", "sent_sum"}};
  CHECK(format_constraints(load_constraints(dir + "queue.cons")) ==
        format_constraints(builtin_library({"C1", "C2", "C3"}, q)));
  const auto link = load_constraints(dir + "link.cons");
  CHECK(link.size() == 6);
  CHECK(link[3].guard.has_value());
  CHECK_FALSE(link[0].guard.has_value());
}

#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "telezoom/kal.hpp"

using namespace telezoom;

namespace {

ConstraintSet mixed_set() {
  // One equality (C2) and one inequality (C1) per interval.
  return fixtures::queue_set_q();
}

}  // namespace

TEST_CASE("multiplier updates follow the update rules") {
  const auto set = mixed_set();
  auto k = KalState::init(set, {7, 9}, 3, 0.5, 2.0);
  REQUIRE(k.lambda.size() == 3);
  Rng rng(4);
  for (auto& l : k.lambda)
    for (auto& v : l) v = rng.normal();
  const auto before = k;
  ResidualTable r(3);
  for (std::size_t c = 0; c < 3; ++c) {
    r[c].resize(k.lambda[c].size());
    for (auto& v : r[c]) v = rng.normal();
  }
  update_multipliers(k, r);
  for (std::size_t c = 0; c < 3; ++c) {
    const bool eq = set[c].form == ConstraintForm::eq;
    for (std::size_t i = 0; i < r[c].size(); ++i) {
      const double want = eq ? oracles::lambda_eq_next(before.lambda[c][i], 0.5, r[c][i])
                             : oracles::lambda_ineq_next(before.lambda[c][i], 0.5, r[c][i]);
      CHECK(k.lambda[c][i] == doctest::Approx(want).epsilon(1e-15));
      if (!eq) CHECK(k.lambda[c][i] >= 0);
    }
  }
  CHECK(k.mu == 1.0);
  CHECK(k.outer_iter == 1);
  CHECK(k.violation_history.size() == 1);

  ResidualTable wrong(2);
  CHECK_THROWS_AS(update_multipliers(k, wrong), ShapeError);
  CHECK_THROWS_AS(KalState::init(set, {1}, 3, 0.0), ConfigError);
  CHECK_THROWS_AS(KalState::init(set, {1}, 3, 1.0, 0.5), ConfigError);
}

TEST_CASE("multiplier state round trips through JSON") {
  auto k = KalState::init(mixed_set(), {1, 2, 3}, 3);
  k.lambda[0][2] = 0.25;
  k.violation_history = {0.5, 0.25};
  const auto back = KalState::from_json(k.to_json());
  CHECK(back.lambda == k.lambda);
  CHECK(back.names == k.names);
  CHECK(back.example_ids == k.example_ids);
  CHECK(back.instances == k.instances);
  CHECK(back.violation_history == k.violation_history);
  CHECK_THROWS_AS(KalState::from_json("{}"), DataError);
}

TEST_CASE("residual scales follow the aggregated quantity") {
  auto set = parse_constraints(
      "[A]\nform = le\nexpr = count_pos(x) - 3\n"
      "[B]\nexpr = sum(x) - m.q_sum\n"
      "[C]\nform = le\nexpr = max(x) - m.q_max\n"
      "[D]\nform = le\nexpr = max(x) - m.q_max\nscale = 7\n"
      "[E]\nform = le\nexpr = count_pos(x) - 3\nscope = window\n");
  CHECK(residual_scale(set[0], 10, 4, 2.0) == 10);
  CHECK(residual_scale(set[1], 10, 4, 2.0) == 20);
  CHECK(residual_scale(set[2], 10, 4, 2.0) == 2);
  CHECK(residual_scale(set[3], 10, 4, 2.0) == 7);
  CHECK(residual_scale(set[4], 10, 4, 2.0) == 40);
}

TEST_CASE("augmented loss gradient matches finite differences") {
  const int zoom = 6;
  std::vector<double> fine = {0, 2, 5, 3, 0, 1, 4, 4, 0, 2, 1, 0, 0, 0, 3, 6, 2, 1};
  const auto w = fixtures::window_from(fine, zoom);
  Dataset ds;
  ds.header.zoom = zoom;
  ds.header.context_len = 3;
  ds.header.target = "q";
  ds.header.target_domain = ValueDomain::nonneg_int;
  for (const auto& e : w.input.entries) ds.header.layout.push_back(e.entry);
  ds.windows = {w};
  auto model = fixtures::model_for(ds, ds.windows);
  const auto set = mixed_set();
  const auto ctx = make_kal_context(set, model, 5.0);
  auto samples = make_samples(model, ds.windows);
  auto kal = KalState::init(set, {w.id}, 3, 0.7);
  Rng rng(6);
  for (std::size_t c = 0; c < kal.lambda.size(); ++c)
    for (auto& v : kal.lambda[c]) v = set[c].form == ConstraintForm::eq ? rng.normal() : rng.uniform();

  std::vector<double> z(fine.size());
  for (auto& v : z) v = 0.3 + rng.uniform();
  auto f = [&](const std::vector<double>& x) { return l_aug(ctx, samples[0], x, 1.0, kal.mu, &kal, 0, {}); };
  std::vector<double> dz(z.size(), 0.0);
  const double v = l_aug(ctx, samples[0], z, 1.0, kal.mu, &kal, 0, dz);
  CHECK(v == doctest::Approx(f(z)));
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(fixtures::rel_diff(dz[i], fixtures::fd(f, z, i, 1e-7)) < 1e-4);
  }
}

TEST_CASE("an empty constraint set reduces to plain training") {
  auto splits = build_dataset(fixtures::small_preset("bursty", 2, 1200), 10, 2);
  auto cfg = fixtures::small_model();
  cfg.width = 8;
  cfg.ff_width = 8;
  auto a = fixtures::model_for(splits.train, splits.train.windows, cfg);
  auto b = a;
  const auto tcfg = fixtures::quick_train(2);
  fit_plain(a, splits.train.windows, splits.val.windows, tcfg);
  const auto ts = make_samples(b, splits.train.windows);
  const auto vs = make_samples(b, splits.val.windows);
  KalConfig kc;
  kc.max_outer = 3;
  const auto log = fit_kal(b, ts, vs, splits.val.windows, ConstraintSet{}, tcfg, kc);
  CHECK(log.rounds.size() == 1);
  CHECK(a.params() == b.params());
}

#include <doctest.h>

#include "fixtures.hpp"
#include "telezoom/losses.hpp"
#include "telezoom/refinement.hpp"

using namespace telezoom;

namespace {

Dataset as_dataset(const std::vector<WindowExample>& windows) {
  Dataset ds;
  const auto& w = windows.front();
  ds.header.zoom = w.input.zoom;
  ds.header.context_len = w.input.context_len;
  ds.header.target = w.target.channel;
  ds.header.target_domain = w.target.domain;
  for (const auto& e : w.input.entries) ds.header.layout.push_back(e.entry);
  ds.windows = windows;
  return ds;
}

ImputationModel basic_for(const Dataset& ds) {
  auto m = fixtures::model_for(ds, ds.windows);
  m.info["mode"] = "plain";
  return m;
}

}  // namespace

TEST_CASE("l_class takes the best target and its gradient") {
  const std::vector<double> out = {1, 2, 3};
  const std::vector<std::vector<double>> targets = {{3, 2, 1}, {1, 2, 2}, {0, 0, 0}};
  std::vector<double> dz(3, 0.0);
  const double v = l_class(out, targets, 1.0, dz);
  CHECK(v == doctest::Approx(l_combine(out, targets[1], 1.0)));
  const auto g = l_combine_grad(out, targets[1], 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(dz[i] == doctest::Approx(g.grad[i]));
  // Never above the loss against any single member, and equal for a singleton.
  for (const auto& t : targets) CHECK(v <= l_combine(out, t, 1.0));
  CHECK(l_class(out, {targets[0]}, 0.5) == l_combine(out, targets[0], 0.5));
  CHECK_THROWS_AS(l_class(out, {}, 1.0), DataError);
}

TEST_CASE("identical windows form no class") {
  auto windows = fixtures::collision_fixture(1, 3);
  for (int i = 1; i < 6; ++i) {
    auto w = windows.front();
    w.id = i;
    windows.push_back(w);
  }
  const auto ds = as_dataset(windows);
  CHECK(equivalence_test(ds.windows, basic_for(ds)).empty());
}

TEST_CASE("colliding windows are grouped") {
  auto windows = fixtures::collision_fixture(12, 9);
  const auto ds = as_dataset(windows);
  const auto classes = equivalence_test(ds.windows, basic_for(ds));
  REQUIRE(classes.size() == 1);
  CHECK(classes[0].member_ids.size() == 12);
  CHECK(classes[0].member_ids.front() == 0);
  CHECK(std::is_sorted(classes[0].member_ids.begin(), classes[0].member_ids.end()));
  CHECK(classes[0].targets.size() == 12);

  auto untrained = fixtures::model_for(ds, ds.windows);
  CHECK_THROWS_AS(equivalence_test(ds.windows, untrained), ConfigError);
  RefineConfig bad;
  bad.theta_far = 0;
  CHECK_THROWS_AS(equivalence_test(ds.windows, basic_for(ds), bad), ConfigError);
}

TEST_CASE("refined samples carry the whole class") {
  const auto windows = fixtures::collision_fixture(6, 4);
  const auto ds = as_dataset(windows);
  const auto model = basic_for(ds);
  const auto classes = equivalence_test(ds.windows, model);
  REQUIRE(classes.size() == 1);
  auto samples = make_samples(model, ds.windows);
  const auto before = samples;
  const double ts = model.normalizer().target_scale;
  CHECK(refine_samples(samples, classes, ds.windows, ts) == 6);
  CHECK(samples.size() == before.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].tokens == before[i].tokens);
    CHECK(samples[i].targets.size() == 6);
    CHECK(samples[i].targets[i] == before[i].targets[0]);
  }
}

TEST_CASE("overlapping classes merge and the sidecar round trips") {
  const auto windows = fixtures::collision_fixture(5, 6);
  auto make = [&](std::vector<std::int64_t> ids) {
    EquivalenceClass c;
    c.member_ids = ids;
    for (auto id : ids) c.targets.push_back(windows[static_cast<std::size_t>(id)].target);
    c.representative_input = windows[static_cast<std::size_t>(ids.front())].input;
    return c;
  };
  const auto merged = merge_overlapping({make({3, 4}), make({0, 1}), make({1, 3})}, windows);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].member_ids == std::vector<std::int64_t>{0, 1, 3, 4});

  const auto two = merge_overlapping({make({0, 1}), make({2, 4})}, windows);
  CHECK(two.size() == 2);
  const auto text = classes_to_json(two, "abc");
  const auto back = classes_from_json(text, windows);
  REQUIRE(back.size() == 2);
  CHECK(back[1].member_ids == two[1].member_ids);
  CHECK(back[1].targets[1].values == windows[4].target.values);
  CHECK_THROWS_AS(classes_from_json("{\"format\":\"other\"}", windows), DataError);
  CHECK_THROWS_AS(classes_from_json(classes_to_json({make({0, 4})}), {windows[0]}), DataError);
}

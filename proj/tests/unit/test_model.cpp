#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "telezoom/trainer.hpp"

using namespace telezoom;

namespace {

struct Setup {
  DatasetSplits splits;
  ImputationModel model;
};

Setup setup(int zoom = 10) {
  Setup s;
  s.splits = build_dataset(fixtures::small_preset("bursty", 2, 1500), zoom, 4);
  auto cfg = fixtures::small_model();
  cfg.width = 8;
  cfg.ff_width = 12;
  cfg.layers = 2;
  s.model = fixtures::model_for(s.splits.train, s.splits.train.windows, cfg);
  return s;
}

}  // namespace

TEST_CASE("parameter gradients match finite differences") {
  auto s = setup();
  auto& m = s.model;
  const auto tokens = m.encode(s.splits.train.windows.at(3).input);
  Rng rng(2);
  std::vector<double> w(m.output_len());
  for (auto& v : w) v = rng.normal();
  auto loss = [&](const std::vector<double>& params) {
    ImputationModel copy = m;
    copy.params() = params;
    std::vector<double> z(m.output_len());
    copy.forward(tokens, z, nullptr, nullptr);
    double l = 0;
    for (std::size_t i = 0; i < z.size(); ++i) l += w[i] * z[i] + 0.5 * z[i] * z[i];
    return l;
  };
  ImputationModel::Cache cache;
  std::vector<double> z(m.output_len());
  m.forward(tokens, z, &cache, nullptr);
  std::vector<double> dz(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) dz[i] = w[i] + z[i];
  std::vector<double> grad(m.param_count(), 0.0);
  m.backward(cache, dz, grad);

  int checked = 0, bad = 0;
  for (std::size_t k = 0; k < 60; ++k) {
    const std::size_t idx = rng.below(m.param_count());
    const double num = fixtures::fd(loss, m.params(), idx, 1e-5);
    if (std::abs(num) < 1e-7 && std::abs(grad[idx]) < 1e-7) continue;
    ++checked;
    if (fixtures::rel_diff(grad[idx], num) > 1e-4) ++bad;
  }
  CHECK(checked > 20);
  CHECK(bad == 0);
}

TEST_CASE("checkpoints round trip") {
  auto s = setup();
  s.model.info["mode"] = "plain";
  s.model.kal_state_json = "{\"x\":1}";
  const auto path = (std::filesystem::temp_directory_path() / "telezoom_model_rt.ckpt").string();
  s.model.save(path);
  const auto back = ImputationModel::load(path);
  CHECK(back.params() == s.model.params());
  CHECK(back.config() == s.model.config());
  CHECK(back.info.at("mode") == "plain");
  CHECK(back.kal_state_json == s.model.kal_state_json);
  CHECK(back.normalizer().target_scale == s.model.normalizer().target_scale);
  const auto& w = s.splits.test.windows.front();
  CHECK(back.impute(w.input).values == s.model.impute(w.input).values);

  write_file_atomic(path, "not a checkpoint");
  CHECK_THROWS_AS(ImputationModel::load(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("encoding names the missing entry") {
  auto s = setup();
  auto bundle = s.splits.train.windows.front().input;
  const auto missing = bundle.entries.back().entry.name;
  bundle.entries.pop_back();
  try {
    (void)s.model.encode(bundle);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  ModelConfig bad = fixtures::small_model();
  bad.width = 30;
  bad.heads = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("serial and parallel training agree bit for bit") {
  auto s = setup();
  auto a = s.model;
  auto b = s.model;
  auto cfg = fixtures::quick_train(2);
  cfg.exec = Exec::serial;
  const auto la = fit_plain(a, s.splits.train.windows, s.splits.val.windows, cfg);
  cfg.exec = Exec::parallel;
  const auto lb = fit_plain(b, s.splits.train.windows, s.splits.val.windows, cfg);
  CHECK(a.params() == b.params());
  CHECK(la.train_loss == lb.train_loss);
  CHECK(la.val_loss == lb.val_loss);
  // Training made progress.
  CHECK(la.val_loss.back() <= la.val_loss.front() * 1.5);
}

TEST_CASE("imputations are non-negative") {
  auto s = setup();
  const auto out = impute_all(s.model, s.splits.test.windows, Exec::parallel);
  for (const auto& f : out) {
    CHECK(f.values.size() == s.model.output_len());
    for (double v : f.values) CHECK(v >= 0);
  }
}

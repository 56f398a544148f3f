// Serial reference vs OpenMP version of the hot kernels.
// Arg(0) = serial, Arg(1) = parallel.
#include <benchmark/benchmark.h>

#include "telezoom/cem.hpp"
#include "telezoom/datagen.hpp"
#include "telezoom/kernels.hpp"
#include "telezoom/trainer.hpp"

using namespace telezoom;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m(r, c);
  Rng rng(seed);
  for (auto& v : m.data) v = rng.uniform();
  return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_pairwise_rmse(benchmark::State& st) {
  const auto m = random_matrix(400, 250, 1);
  for (auto _ : st) benchmark::DoNotOptimize(pairwise_rmse(m, exec_of(st)));
}
BENCHMARK(BM_pairwise_rmse)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_squared_distances(benchmark::State& st) {
  const auto q = random_matrix(200, 20, 2), r = random_matrix(1300, 20, 3);
  for (auto _ : st) benchmark::DoNotOptimize(squared_distances(q, r, exec_of(st)));
}
BENCHMARK(BM_squared_distances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_accumulate_rows(benchmark::State& st) {
  const auto m = random_matrix(32, 20000, 4);
  std::vector<double> acc(m.cols);
  for (auto _ : st) {
    std::fill(acc.begin(), acc.end(), 0.0);
    accumulate_rows(m, m.rows, acc, exec_of(st));
    benchmark::DoNotOptimize(acc.data());
  }
}
BENCHMARK(BM_accumulate_rows)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

struct EpochFixture {
  DatasetSplits splits;
  ImputationModel model;
  std::vector<Sample> samples;

  EpochFixture() {
    auto preset = load_preset(find_preset_file("bursty"));
    preset.traces_per_variant = 2;
    for (auto& v : preset.variants) v.duration_ms = 2500;
    splits = build_dataset(preset, 50, 11);
    const auto& h = splits.train.header;
    ModelConfig mc;
    mc.layers = 2;
    mc.width = 32;
    mc.heads = 2;
    mc.ff_width = 64;
    model = ImputationModel(mc, h.layout, h.context_len, h.zoom, h.target, h.target_domain);
    model.normalizer() = Normalizer::fit(splits.train.windows, h.layout);
    model.init_params();
    samples = make_samples(model, splits.train.windows);
  }
};

void BM_train_epoch(benchmark::State& st) {
  static EpochFixture fx;
  for (auto _ : st) {
    ImputationModel m = fx.model;
    TrainConfig tc;
    tc.exec = exec_of(st);
    Trainer t(m, tc);
    benchmark::DoNotOptimize(t.run_epoch(fx.samples, nullptr));
  }
}
BENCHMARK(BM_train_epoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_enforce_all(benchmark::State& st) {
  static EpochFixture fx;
  const auto& h = fx.splits.test.header;
  int offset = 0;
  const auto set = builtin_library({"C1", "C2", "C3"}, standard_bindings(h.layout, h.target, offset));
  const auto raw = impute_all(fx.model, fx.splits.test.windows, Exec::serial);
  EnforceOptions opt;
  opt.compile.channel_bound = h.target_bound;
  opt.compile.target_channel = h.target;
  for (auto _ : st) benchmark::DoNotOptimize(enforce_all(set, fx.splits.test.windows, raw, opt, exec_of(st)));
}
BENCHMARK(BM_enforce_all)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

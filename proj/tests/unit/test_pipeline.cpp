#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "tiny_run.hpp"

using namespace telezoom;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const char* cli = std::getenv("TELEZOOM_CLI");
  if (cli == nullptr) cli = TELEZOOM_CLI_PATH;  // running outside ctest
  const int rc = std::system((std::string(cli) + " --quiet " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("run configs round trip and reject unknown keys") {
  RunConfig c;
  c.zoom = 25;
  c.train.emd_weight = 0.5;
  c.kal.max_outer = 4;
  c.sweep_zooms = {10, 20};
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_WITH_AS(RunConfig::from_json(R"({"zoom": 10, "zooom": 3})"), doctest::Contains("zooom"),
                       ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(R"({"train": {"epochs": 3}})"), ConfigError);
  RunConfig bad;
  bad.zoom = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  const auto dir = fixtures::temp_dir("gen");
  const auto preset = fixtures::write_small_preset(dir, "bursty", 3, 800, 3);
  auto cfg = fixtures::tiny_config(preset);
  cmd_generate(cfg, dir + "/a");
  cmd_generate(cfg, dir + "/b");
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "constraints.cons"}) {
    CHECK(read_file(dir + "/a/" + f) == read_file(dir + "/b/" + f));
  }
  cfg.seed = 2;
  cmd_generate(cfg, dir + "/c");
  CHECK(read_file(dir + "/a/train.jsonl") != read_file(dir + "/c/train.jsonl"));
  CHECK(fs::exists(dir + "/a/manifest.json"));
}

TEST_CASE("train, impute with enforcement, evaluate") {
  const auto dir = fixtures::temp_dir("flow");
  const auto preset = fixtures::write_small_preset(dir, "bursty", 3, 800, 3);
  const auto cfg = fixtures::tiny_config(preset);
  cmd_generate(cfg, dir + "/data");
  const auto tr = cmd_train(cfg, dir + "/data", dir + "/kal", TrainMode::kal, false);
  CHECK(fs::exists(tr.checkpoint));
  CHECK(fs::exists(dir + "/kal/violations.csv"));
  CHECK(fs::exists(dir + "/kal/curves.csv"));
  const auto im = cmd_impute(cfg, tr.checkpoint, dir + "/data/test.jsonl", dir + "/out/kal.jsonl", true);
  CHECK(im.windows > 0);
  CHECK(im.infeasible == 0);
  const auto set = load_constraints(dir + "/data/constraints.cons");
  const auto truth = read_windows(dir + "/data/test.jsonl");
  const auto imputed = read_windows(dir + "/out/kal.jsonl");
  std::vector<FineSeries> series;
  for (const auto& w : imputed.windows) series.push_back(w.target);
  for (double v : mean_violations(set, truth.windows, series)) CHECK(v <= 1e-6);
  CHECK(fs::exists(dir + "/out/kal.jsonl.repair.csv"));
  const auto report = cmd_evaluate({{"kal", dir + "/out/kal.jsonl"}}, dir + "/data/test.jsonl", dir + "/report");
  CHECK(report.methods.size() == 1);
  CHECK(fs::exists(dir + "/report/report.json"));
}

TEST_CASE("the command line maps failures to exit codes") {
  const auto dir = fixtures::temp_dir("cli");
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("--no-such-flag") == 1);
  write_file_atomic(dir + "/bad.json", R"({"zoom": 10, "bogus": 1})");
  CHECK(run_cli("--config " + dir + "/bad.json generate --out " + dir + "/g") == 1);
  CHECK_FALSE(fs::exists(dir + "/g/train.jsonl"));

  write_file_atomic(dir + "/empty.jsonl", "");
  write_file_atomic(dir + "/fake.ckpt", "nope");
  CHECK(run_cli("impute --checkpoint " + dir + "/fake.ckpt --input " + dir + "/empty.jsonl --output " + dir +
                "/o.jsonl") == 2);
  CHECK_FALSE(fs::exists(dir + "/o.jsonl"));
  CHECK(run_cli("train --data " + dir + "/missing") != 0);
}

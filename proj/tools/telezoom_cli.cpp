#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "telezoom/pipeline.hpp"

using namespace telezoom;

namespace {

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const TrainingError*>(&e)) return 3;
  return 2;  // I/O and everything else the library did not classify
}

std::string out_or_default(const std::string& flag, const RunConfig& cfg, const std::string& sub) {
  if (!flag.empty()) return flag;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  return (std::filesystem::path(default_output_root()) / sub).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"telezoom: fine-grained telemetry from coarse measurements"};
  app.set_version_flag("--version", std::string("telezoom ") + TELEZOOM_VERSION);
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, manifest_path, out;
  bool quiet = false, verbose = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--manifest", manifest_path, "re-run the command recorded in a manifest");
  app.add_option("--out", out, "output directory (default: $TELEZOOM_OUT/<command> or ./runs/<command>)");
  app.add_flag("--quiet", quiet, "warnings and errors only");
  app.add_flag("--verbose", verbose, "debug logging");

  // Overrides shared by several subcommands; unset values leave the config alone.
  std::optional<std::uint64_t> seed;
  std::optional<int> zoom, epochs, context_len;
  std::optional<double> emd_weight, budget;
  std::string preset, constraints;

  auto* gen = app.add_subcommand("generate", "simulate traces and write train/val/test windows");
  gen->add_option("--preset", preset, "generator preset name or JSON file");
  gen->add_option("--zoom", zoom, "zoom-in factor Z");
  gen->add_option("--seed", seed, "master seed");
  gen->add_option("--context-len", context_len, "coarse steps per window");

  std::string data, mode = "kal";
  bool refine = false;
  auto* train = app.add_subcommand("train", "train a checkpoint");
  train->add_option("--data", data, "dataset directory")->required();
  train->add_option("--mode", mode, "plain or kal")->check(CLI::IsMember({"plain", "kal"}));
  train->add_flag("--refine", refine, "consolidate coarse-grained collisions first");
  train->add_option("--constraints", constraints, "constraint file (default: <data>/constraints.cons)");
  train->add_option("--epochs", epochs, "max epochs per training phase");
  train->add_option("--emd-weight", emd_weight, "weight of the EMD term");
  train->add_option("--seed", seed, "seed for weights, shuffling and dropout");

  std::string checkpoint, input, output;
  bool enforce = false, no_fallback = false;
  auto* imp = app.add_subcommand("impute", "impute fine-grained series for a window file");
  imp->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  imp->add_option("--input", input, "window file (JSONL)")->required();
  imp->add_option("--output", output, "imputed window file (default: <out>/imputed.jsonl)");
  imp->add_flag("--enforce", enforce, "repair every window so all constraints hold");
  imp->add_flag("--no-fallback", no_fallback, "do not drop operational constraints when infeasible");
  imp->add_option("--constraints", constraints, "constraint file (default: next to the input)");
  imp->add_option("--budget", budget, "per-window solve budget in seconds");

  std::string truth;
  std::vector<std::string> method_specs;
  double threshold = 0.5;
  auto* ev = app.add_subcommand("evaluate", "score imputations against the truth");
  ev->add_option("--truth", truth, "ground-truth window file")->required();
  ev->add_option("--method", method_specs, "NAME=FILE, repeatable")->required();
  ev->add_option("--threshold", threshold, "burst threshold as a fraction of the window max");

  std::vector<int> zooms;
  auto* sweep = app.add_subcommand("sweep", "generate, train, repair and evaluate for several zoom factors");
  sweep->add_option("--zooms", zooms, "zoom factors (default 25 50 100)");
  sweep->add_option("--preset", preset, "generator preset name or JSON file");
  sweep->add_option("--seed", seed, "master seed");
  sweep->add_option("--epochs", epochs, "max epochs per training phase");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  set_log_level(quiet ? LogLevel::warn : verbose ? LogLevel::debug : LogLevel::info);
  try {
    if (!manifest_path.empty()) {
      replay_manifest(manifest_path, out.empty() ? std::nullopt : std::optional<std::string>(out));
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.model.seed = *seed;
      cfg.train.seed = *seed;
    }
    if (zoom) cfg.zoom = *zoom;
    if (context_len) cfg.context_len = *context_len;
    if (epochs) cfg.train.max_epochs = *epochs;
    if (emd_weight) cfg.train.emd_weight = *emd_weight;
    if (budget) cfg.cem.budget_seconds = *budget;
    if (no_fallback) cfg.cem.fallback = false;
    if (!preset.empty()) cfg.preset = preset;
    if (!constraints.empty()) cfg.constraints = constraints;
    if (!zooms.empty()) cfg.sweep_zooms = zooms;
    cfg.validate();

    if (*gen) {
      const auto r = cmd_generate(cfg, out_or_default(out, cfg, "data"));
      std::cout << r.dir << ": " << r.train << " train, " << r.val << " val, " << r.test << " test windows\n";
    } else if (*train) {
      const auto r = cmd_train(cfg, data, out_or_default(out, cfg, "train"),
                               mode == "kal" ? TrainMode::kal : TrainMode::plain, refine);
      std::cout << "checkpoint " << r.checkpoint << "\n";
    } else if (*imp) {
      const std::string dest = output.empty() ? (std::filesystem::path(out_or_default(out, cfg, "impute")) /
                                                 "imputed.jsonl").string()
                                              : output;
      const auto r = cmd_impute(cfg, checkpoint, input, dest, enforce);
      std::cout << r.windows << " windows -> " << r.output;
      if (enforce) std::cout << " (" << r.relaxed << " relaxed, " << r.infeasible << " infeasible)";
      std::cout << "\n";
    } else if (*ev) {
      std::vector<MethodFile> methods;
      for (const auto& s : method_specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--method expects NAME=FILE, got '" + s + "'");
        methods.push_back({s.substr(0, eq), s.substr(eq + 1)});
      }
      const auto report = cmd_evaluate(methods, truth, out_or_default(out, cfg, "report"), threshold);
      std::cout << report.raw_csv();
    } else if (*sweep) {
      const std::string dir = out_or_default(out, cfg, "sweep");
      const auto results = cmd_sweep(cfg, dir);
      std::cout << read_file((std::filesystem::path(dir) / "sweep.csv").string());
    }
  } catch (const std::exception& e) {
    std::cerr << "telezoom: " << e.what() << "\n";
    return exit_code(e);
  }
  return 0;
}

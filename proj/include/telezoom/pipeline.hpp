#pragma once

#include <optional>
#include <string>
#include <vector>

#include "telezoom/cem.hpp"
#include "telezoom/evalkit.hpp"
#include "telezoom/kal.hpp"
#include "telezoom/refinement.hpp"

namespace telezoom {

/// Everything a run needs, loaded from one JSON file with flag overrides on top.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string preset = "bursty";
  int zoom = 50;
  int context_len = 0;  // 0: the preset's value
  ModelConfig model;
  TrainConfig train;
  KalConfig kal;
  RefineConfig refine;
  bool refine_in_comparison = true;  // run_comparison/sweep train KAL on refined targets
  bool kal_warm_start = true;        // KAL starts from the l_combine-trained basic model
  std::string constraints;  // .cons file; empty: the one written next to the dataset
  EnforceOptions cem;
  std::string out_dir;
  std::vector<int> sweep_zooms{25, 50, 100};

  static RunConfig from_json(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

RunConfig load_run_config(const std::string& path);

/// TELEZOOM_OUT, else "runs".
std::string default_output_root();

struct GenerateResult {
  std::string dir;
  std::size_t train = 0, val = 0, test = 0;
};

/// train/val/test.jsonl, constraints.cons and manifest.json under out_dir.
GenerateResult cmd_generate(const RunConfig& cfg, const std::string& out_dir);

enum class TrainMode { plain, kal };

struct TrainResult {
  std::string checkpoint;
  std::size_t class_members = 0;
  KalLog kal;
  std::vector<PhaseLog> phases;
};

/// model.ckpt, curves.csv, manifest.json; violations.csv in kal mode;
/// classes.json with refinement.
TrainResult cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir, TrainMode mode,
                      bool refine);

struct ImputeResult {
  std::string output;
  std::size_t windows = 0;
  std::size_t infeasible = 0;
  std::size_t relaxed = 0;
  std::vector<RepairReport> reports;
};

/// Imputes every window of `input`; with enforce, repairs each one and
/// writes <output>.repair.csv next to the imputations.
ImputeResult cmd_impute(const RunConfig& cfg, const std::string& checkpoint, const std::string& input,
                        const std::string& output, bool enforce);

struct MethodFile {
  std::string name;
  std::string path;
};

/// report_raw.csv, report_normalized.csv (two or more methods) and report.json.
EvalReport cmd_evaluate(const std::vector<MethodFile>& methods, const std::string& truth, const std::string& out_dir,
                        double threshold_frac = 0.5);

/// Trains KAL (+CEM) and the plain-MSE model, runs the KNN and linear
/// baselines on the test split, and evaluates all of them.
struct ComparisonResult {
  EvalReport report;
  double infeasible_rate = 0;
  std::vector<double> kal_violation;    // test, pre-CEM, per constraint
  std::vector<double> plain_violation;  // test, per constraint
  KalLog kal_log;
  int knn_k = 0;
};

ComparisonResult run_comparison(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir);

/// generate + run_comparison for every zoom in cfg.sweep_zooms; writes sweep.csv.
std::vector<ComparisonResult> cmd_sweep(const RunConfig& cfg, const std::string& out_dir);

/// Re-runs the command recorded in a manifest.
void replay_manifest(const std::string& path, const std::optional<std::string>& out_dir);

}  // namespace telezoom

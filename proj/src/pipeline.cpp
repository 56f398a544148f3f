#include "telezoom/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "telezoom/datagen.hpp"

#ifndef TELEZOOM_VERSION
#define TELEZOOM_VERSION "dev"
#endif

namespace telezoom {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void write_manifest(const std::string& path, const std::string& command, const RunConfig& cfg, const json& args,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  json m;
  m["format"] = "telezoom.manifest";
  m["version"] = TELEZOOM_VERSION;
  m["command"] = command;
  m["args"] = args;
  m["config"] = json::parse(cfg.to_json());
  for (const auto& f : inputs) m["inputs"][f] = hash_file(f);
  for (const auto& f : outputs) m["outputs"][f] = hash_file(f);
  write_file_atomic(path, m.dump(2) + "\n");
}

GeneratorPreset resolve_preset(const RunConfig& cfg) {
  const bool is_path = cfg.preset.find('/') != std::string::npos || cfg.preset.ends_with(".json");
  auto preset = load_preset(is_path ? cfg.preset : find_preset_file(cfg.preset));
  if (cfg.context_len > 0) preset.context_len = cfg.context_len;
  return preset;
}

ConstraintSet resolve_constraints(const RunConfig& cfg, const std::string& data_dir) {
  const std::string path = cfg.constraints.empty() ? join(data_dir, "constraints.cons") : cfg.constraints;
  if (!fs::exists(path)) throw ConfigError("constraint file not found: " + path);
  return load_constraints(path);
}

std::string constraints_path(const RunConfig& cfg, const std::string& data_dir) {
  return cfg.constraints.empty() ? join(data_dir, "constraints.cons") : cfg.constraints;
}

void check_layout(const ImputationModel& model, const DatasetHeader& h, const std::string& origin) {
  if (h.zoom != model.zoom() || h.context_len != model.context_len()) {
    throw DataError(origin + ": windows are " + std::to_string(h.context_len) + "x" + std::to_string(h.zoom) +
                    ", the checkpoint expects " + std::to_string(model.context_len()) + "x" +
                    std::to_string(model.zoom()));
  }
  for (const auto& e : model.layout()) {
    const bool found = std::any_of(h.layout.begin(), h.layout.end(), [&](const EntrySpec& x) { return x == e; });
    if (!found) throw DataError(origin + ": layout lacks coarse entry '" + e.name + "' required by the checkpoint");
  }
}

Dataset as_imputed(const Dataset& source, const std::vector<FineSeries>& series) {
  Dataset out;
  out.header = source.header;
  out.header.content = "imputed";
  out.windows = source.windows;
  for (std::size_t i = 0; i < out.windows.size(); ++i) {
    out.windows[i].target = series[i];
    out.windows[i].target.channel = source.windows[i].target.channel;
  }
  return out;
}

std::vector<FineSeries> targets_of(const Dataset& ds) {
  std::vector<FineSeries> out;
  for (const auto& w : ds.windows) out.push_back(w.target);
  return out;
}

std::string curves_csv(const std::vector<std::pair<std::string, PhaseLog>>& phases) {
  std::string out = "phase,epoch,train_loss,val_loss\n";
  for (const auto& [name, p] : phases) {
    for (std::size_t e = 0; e < p.train_loss.size(); ++e) {
      out += name + "," + std::to_string(e) + "," + format_double(p.train_loss[e]) + "," +
             format_double(p.val_loss[e]) + "\n";
    }
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ config

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"seed", "preset", "zoom", "context_len", "model", "train", "kal", "refine", "constraints", "cem",
                  "out_dir", "sweep_zooms", "refine_in_comparison", "kal_warm_start"},
                 "config");
  RunConfig c;
  take(j, "seed", c.seed);
  c.model.seed = c.seed;
  c.train.seed = c.seed;
  take(j, "preset", c.preset);
  take(j, "zoom", c.zoom);
  take(j, "context_len", c.context_len);
  take(j, "constraints", c.constraints);
  take(j, "out_dir", c.out_dir);
  take(j, "sweep_zooms", c.sweep_zooms);
  take(j, "refine_in_comparison", c.refine_in_comparison);
  take(j, "kal_warm_start", c.kal_warm_start);
  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"layers", "width", "heads", "ff_width", "dropout", "seed"}, "model");
    take(m, "layers", c.model.layers);
    take(m, "width", c.model.width);
    take(m, "heads", c.model.heads);
    take(m, "ff_width", c.model.ff_width);
    take(m, "dropout", c.model.dropout);
    take(m, "seed", c.model.seed);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t, {"max_epochs", "patience", "batch_size", "lr", "grad_clip", "emd_weight", "seed", "serial"},
                   "train");
    take(t, "max_epochs", c.train.max_epochs);
    take(t, "patience", c.train.patience);
    take(t, "batch_size", c.train.batch_size);
    take(t, "lr", c.train.lr);
    take(t, "grad_clip", c.train.grad_clip);
    take(t, "emd_weight", c.train.emd_weight);
    take(t, "seed", c.train.seed);
    bool serial = false;
    take(t, "serial", serial);
    c.train.exec = serial ? Exec::serial : Exec::parallel;
  }
  if (j.contains("kal")) {
    const auto& k = j["kal"];
    reject_unknown(k, {"mu0", "mu_mult", "saturation_tol", "max_outer", "smooth_k"}, "kal");
    take(k, "mu0", c.kal.mu0);
    take(k, "mu_mult", c.kal.mu_mult);
    take(k, "saturation_tol", c.kal.saturation_tol);
    take(k, "max_outer", c.kal.max_outer);
    take(k, "smooth_k", c.kal.smooth_k);
  }
  if (j.contains("refine")) {
    const auto& r = j["refine"];
    reject_unknown(r, {"theta_far", "theta_close"}, "refine");
    take(r, "theta_far", c.refine.theta_far);
    take(r, "theta_close", c.refine.theta_close);
  }
  if (j.contains("cem")) {
    const auto& e = j["cem"];
    reject_unknown(e, {"budget_seconds", "fallback"}, "cem");
    take(e, "budget_seconds", c.cem.budget_seconds);
    take(e, "fallback", c.cem.fallback);
  }
  c.validate();
  return c;
}

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["preset"] = preset;
  j["zoom"] = zoom;
  j["context_len"] = context_len;
  j["model"] = {{"layers", model.layers}, {"width", model.width},     {"heads", model.heads},
                {"ff_width", model.ff_width}, {"dropout", model.dropout}, {"seed", model.seed}};
  j["train"] = {{"max_epochs", train.max_epochs}, {"patience", train.patience}, {"batch_size", train.batch_size},
                {"lr", train.lr},                 {"grad_clip", train.grad_clip}, {"emd_weight", train.emd_weight},
                {"seed", train.seed},             {"serial", train.exec == Exec::serial}};
  j["kal"] = {{"mu0", kal.mu0},
              {"mu_mult", kal.mu_mult},
              {"saturation_tol", kal.saturation_tol},
              {"max_outer", kal.max_outer},
              {"smooth_k", kal.smooth_k}};
  j["refine"] = {{"theta_far", refine.theta_far}, {"theta_close", refine.theta_close}};
  j["refine_in_comparison"] = refine_in_comparison;
  j["kal_warm_start"] = kal_warm_start;
  j["constraints"] = constraints;
  j["cem"] = {{"budget_seconds", cem.budget_seconds}, {"fallback", cem.fallback}};
  j["out_dir"] = out_dir;
  j["sweep_zooms"] = sweep_zooms;
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  if (zoom < 2) throw ConfigError("zoom must be at least 2");
  if (context_len < 0) throw ConfigError("context_len must be non-negative");
  model.validate();
  if (train.max_epochs < 1 || train.batch_size < 1 || train.patience < 1) {
    throw ConfigError("max_epochs, batch_size and patience must be positive");
  }
  if (train.emd_weight < 0) throw ConfigError("emd_weight must be non-negative");
  if (kal.mu0 <= 0 || kal.mu_mult < 1) throw ConfigError("kal needs mu0 > 0 and mu_mult >= 1");
  if (kal.max_outer < 1) throw ConfigError("kal.max_outer must be >= 1");
  if (cem.budget_seconds <= 0) throw ConfigError("cem.budget_seconds must be positive");
  for (int z : sweep_zooms) {
    if (z < 2) throw ConfigError("sweep zooms must be at least 2");
  }
}

RunConfig load_run_config(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  return RunConfig::from_json(read_file(path));
}

std::string default_output_root() {
  const char* env = std::getenv("TELEZOOM_OUT");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("runs");
}

// ------------------------------------------------------------------ generate

GenerateResult cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
  const auto preset = resolve_preset(cfg);
  auto splits = build_dataset(preset, cfg.zoom, cfg.seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

  const std::vector<std::string> files{join(out_dir, "train.jsonl"), join(out_dir, "val.jsonl"),
                                       join(out_dir, "test.jsonl"), join(out_dir, "constraints.cons")};
  write_windows(files[0], splits.train);
  write_windows(files[1], splits.val);
  write_windows(files[2], splits.test);

  int offset = 0;
  for (const auto& e : preset.entries) {
    if (e.channel == preset.target && e.kind == CoarsenKind::periodic) offset = e.offset;
  }
  const auto set = builtin_library(preset.constraints, standard_bindings(preset.layout(cfg.zoom), preset.target, offset));
  write_file_atomic(files[3], format_constraints(set));
  write_manifest(join(out_dir, "manifest.json"), "generate", cfg, {{"out", out_dir}}, {}, files);
  log_info("generated " + std::to_string(splits.train.windows.size()) + "/" +
           std::to_string(splits.val.windows.size()) + "/" + std::to_string(splits.test.windows.size()) +
           " train/val/test windows in " + out_dir);
  return {out_dir, splits.train.windows.size(), splits.val.windows.size(), splits.test.windows.size()};
}

// ------------------------------------------------------------------ train

TrainResult cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir, TrainMode mode,
                      bool refine) {
  const std::string train_path = join(data_dir, "train.jsonl"), val_path = join(data_dir, "val.jsonl");
  const auto train = read_windows(train_path);
  const auto val = read_windows(val_path);
  const auto& h = train.header;

  std::optional<ConstraintSet> set;
  std::vector<std::string> inputs{train_path, val_path};
  if (mode == TrainMode::kal) {
    set = resolve_constraints(cfg, data_dir);
    set->check_layout(h.layout);
    inputs.push_back(constraints_path(cfg, data_dir));
  } else if (!cfg.constraints.empty()) {
    log_warn("plain mode ignores the constraint file " + cfg.constraints);
  }

  auto fresh_model = [&] {
    ImputationModel m(cfg.model, h.layout, h.context_len, h.zoom, h.target, h.target_domain);
    m.normalizer() = Normalizer::fit(train.windows, h.layout);
    m.target_bound = h.target_bound;
    m.init_params();
    return m;
  };
  ImputationModel model = fresh_model();
  auto ts = make_samples(model, train.windows);
  const auto vs = make_samples(model, val.windows);

  TrainResult res;
  std::vector<std::pair<std::string, PhaseLog>> curves;
  std::vector<std::string> outputs;
  fs::create_directories(out_dir);

  const bool warm = mode == TrainMode::kal && cfg.kal_warm_start;
  if (refine || warm) {
    // The basic model shares the final model's architecture and budget.
    ImputationModel basic = fresh_model();
    Trainer bt(basic, cfg.train);
    curves.emplace_back("basic", train_phase(bt, ts, vs, nullptr, nullptr, 0.0));
    basic.info["mode"] = "basic";
    if (refine) {
      const auto classes = equivalence_test(train.windows, basic, cfg.refine);
      res.class_members = refine_samples(ts, classes, train.windows, model.normalizer().target_scale);
      const std::string sidecar = join(out_dir, "classes.json");
      write_file_atomic(sidecar, classes_to_json(classes, hash_file(train_path)));
      outputs.push_back(sidecar);
      log_info("refinement: " + std::to_string(classes.size()) + " classes covering " +
               std::to_string(res.class_members) + " of " + std::to_string(ts.size()) + " training windows");
    }
    if (warm) model.params() = basic.params();
  }

  if (mode == TrainMode::plain) {
    Trainer trainer(model, cfg.train);
    auto phase = train_phase(trainer, ts, vs, nullptr, nullptr, 0.0);
    curves.emplace_back("train", phase);
    model.info["mode"] = cfg.train.emd_weight == 0 ? "plain_mse" : "plain";
    model.info["epochs"] = std::to_string(trainer.epochs_done());
  } else {
    res.kal = fit_kal(model, ts, vs, val.windows, *set, cfg.train, cfg.kal);
    const std::string vpath = join(out_dir, "violations.csv");
    write_file_atomic(vpath, res.kal.violations_csv(*set));
    outputs.push_back(vpath);
  }
  model.info["refined"] = refine ? "yes" : "no";
  for (const auto& [name, p] : curves) res.phases.push_back(p);

  res.checkpoint = join(out_dir, "model.ckpt");
  model.save(res.checkpoint);
  const std::string cpath = join(out_dir, "curves.csv");
  write_file_atomic(cpath, curves_csv(curves));
  outputs.insert(outputs.begin(), {res.checkpoint, cpath});
  write_manifest(join(out_dir, "manifest.json"), "train", cfg,
                 {{"data", data_dir}, {"out", out_dir}, {"mode", mode == TrainMode::kal ? "kal" : "plain"},
                  {"refine", refine}},
                 inputs, outputs);
  return res;
}

// ------------------------------------------------------------------ impute

ImputeResult cmd_impute(const RunConfig& cfg, const std::string& checkpoint, const std::string& input,
                        const std::string& output, bool enforce) {
  const auto model = ImputationModel::load(checkpoint);
  const auto ds = read_windows(input);
  check_layout(model, ds.header, input);
  auto series = impute_all(model, ds.windows, cfg.train.exec);

  ImputeResult res;
  res.output = output;
  res.windows = ds.windows.size();
  std::vector<std::string> inputs{checkpoint, input};
  std::vector<std::string> outputs{output};
  std::string repair_csv;
  if (enforce) {
    const std::string data_dir = fs::path(input).parent_path().string();
    const auto set = resolve_constraints(cfg, data_dir);
    set.check_layout(ds.header.layout);
    inputs.push_back(constraints_path(cfg, data_dir));
    EnforceOptions opt = cfg.cem;
    opt.compile.channel_bound = model.target_bound ? model.target_bound : ds.header.target_bound;
    opt.compile.target_channel = model.target();
    auto repaired = enforce_all(set, ds.windows, series, opt, cfg.train.exec);
    for (std::size_t i = 0; i < repaired.size(); ++i) {
      series[i] = std::move(repaired[i].series);
      res.infeasible += repaired[i].report.infeasible ? 1 : 0;
      res.relaxed += repaired[i].report.relaxed.empty() ? 0 : 1;
      res.reports.push_back(std::move(repaired[i].report));
    }
    repair_csv = reports_csv(set, res.reports);
  }
  write_windows(output, as_imputed(ds, series));
  if (enforce) {
    write_file_atomic(output + ".repair.csv", repair_csv);
    outputs.push_back(output + ".repair.csv");
  }
  write_manifest(output + ".manifest.json", "impute", cfg,
                 {{"checkpoint", checkpoint}, {"input", input}, {"output", output}, {"enforce", enforce}}, inputs,
                 outputs);
  if (res.infeasible > 0) {
    log_warn(std::to_string(res.infeasible) + " of " + std::to_string(res.windows) +
             " windows were infeasible and kept the raw model output");
  }
  return res;
}

// ------------------------------------------------------------------ evaluate

EvalReport cmd_evaluate(const std::vector<MethodFile>& methods, const std::string& truth, const std::string& out_dir,
                        double threshold_frac) {
  if (methods.empty()) throw ConfigError("evaluate needs at least one method");
  const auto t = read_windows(truth);
  std::vector<MethodScores> scores;
  std::vector<std::string> inputs{truth};
  for (const auto& m : methods) {
    const auto ds = read_windows(m.path);
    if (ds.windows.size() != t.windows.size()) {
      throw ShapeError(m.name + ": " + std::to_string(ds.windows.size()) + " windows, truth has " +
                       std::to_string(t.windows.size()));
    }
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
      if (ds.windows[i].id != t.windows[i].id) {
        throw ShapeError(m.name + ": window " + std::to_string(ds.windows[i].id) + " is aligned with truth window " +
                         std::to_string(t.windows[i].id));
      }
    }
    scores.push_back(score_method(m.name, targets_of(ds), t.windows, threshold_frac));
    inputs.push_back(m.path);
  }
  auto report = make_report(std::move(scores));
  std::vector<std::string> outputs{join(out_dir, "report_raw.csv"), join(out_dir, "report.json")};
  write_file_atomic(outputs[0], report.raw_csv());
  write_file_atomic(outputs[1], report.to_json());
  if (!report.normalized.empty()) {
    outputs.push_back(join(out_dir, "report_normalized.csv"));
    write_file_atomic(outputs.back(), report.normalized_csv());
  } else {
    log_warn(report.note);
  }
  json args;
  args["truth"] = truth;
  args["out"] = out_dir;
  args["threshold_frac"] = threshold_frac;
  for (const auto& m : methods) args["methods"].push_back({{"name", m.name}, {"path", m.path}});
  write_manifest(join(out_dir, "manifest.json"), "evaluate", RunConfig{}, args, inputs, outputs);
  return report;
}

// ------------------------------------------------------------------ comparison and sweep

ComparisonResult run_comparison(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir) {
  ComparisonResult res;
  const std::string test_path = join(data_dir, "test.jsonl");
  const auto train = read_windows(join(data_dir, "train.jsonl"));
  const auto val = read_windows(join(data_dir, "val.jsonl"));
  const auto test = read_windows(test_path);
  const auto set = resolve_constraints(cfg, data_dir);

  const auto kal = cmd_train(cfg, data_dir, join(out_dir, "kal"), TrainMode::kal, cfg.refine_in_comparison);
  res.kal_log = kal.kal;
  const auto raw = cmd_impute(cfg, kal.checkpoint, test_path, join(out_dir, "kal_raw.jsonl"), false);
  const auto cem = cmd_impute(cfg, kal.checkpoint, test_path, join(out_dir, "kal_cem.jsonl"), true);
  res.infeasible_rate = static_cast<double>(cem.infeasible) / static_cast<double>(std::max<std::size_t>(1, cem.windows));
  res.kal_violation = mean_violations(set, test.windows, targets_of(read_windows(raw.output)));

  RunConfig plain_cfg = cfg;
  plain_cfg.train.emd_weight = 0.0;
  const auto plain = cmd_train(plain_cfg, data_dir, join(out_dir, "plain"), TrainMode::plain, false);
  const auto plain_out = cmd_impute(plain_cfg, plain.checkpoint, test_path, join(out_dir, "plain.jsonl"), false);
  res.plain_violation = mean_violations(set, test.windows, targets_of(read_windows(plain_out.output)));

  KnnImputer knn(train.windows, cfg.train.exec);
  res.knn_k = knn.select_k(val.windows);
  write_windows(join(out_dir, "knn.jsonl"), as_imputed(test, knn.impute_all(test.windows, res.knn_k)));

  std::vector<FineSeries> lin;
  for (const auto& w : test.windows) lin.push_back(linear_baseline(w.input, test.header.target, test.header.target_domain));
  write_windows(join(out_dir, "linear.jsonl"), as_imputed(test, lin));

  res.report = cmd_evaluate({{"kal_cem", cem.output},
                             {"plain", plain_out.output},
                             {"knn", join(out_dir, "knn.jsonl")},
                             {"linear", join(out_dir, "linear.jsonl")}},
                            test_path, join(out_dir, "report"));

  json summary;
  summary["infeasible_rate"] = res.infeasible_rate;
  summary["knn_k"] = res.knn_k;
  summary["kal_rounds"] = res.kal_log.rounds.size();
  for (std::size_t c = 0; c < set.size(); ++c) {
    summary["test_violation"]["kal_pre_cem"][set[c].name] = res.kal_violation[c];
    summary["test_violation"]["plain"][set[c].name] = res.plain_violation[c];
  }
  write_file_atomic(join(out_dir, "comparison.json"), summary.dump(2) + "\n");
  return res;
}

std::vector<ComparisonResult> cmd_sweep(const RunConfig& cfg, const std::string& out_dir) {
  std::vector<ComparisonResult> out;
  std::string csv = "zoom,method";
  for (const auto& c : MethodScores::columns()) csv += "," + c;
  csv += ",infeasible_rate\n";
  for (int z : cfg.sweep_zooms) {
    RunConfig zc = cfg;
    zc.zoom = z;
    const std::string dir = join(out_dir, "z" + std::to_string(z));
    log_info("sweep: zoom " + std::to_string(z));
    cmd_generate(zc, join(dir, "data"));
    out.push_back(run_comparison(zc, join(dir, "data"), dir));
    for (const auto& m : out.back().report.methods) {
      csv += std::to_string(z) + "," + m.method;
      for (double v : m.values()) csv += "," + format_double(v);
      csv += "," + format_double(out.back().infeasible_rate) + "\n";
    }
  }
  write_file_atomic(join(out_dir, "sweep.csv"), csv);
  write_manifest(join(out_dir, "manifest.json"), "sweep", cfg, {{"out", out_dir}}, {}, {join(out_dir, "sweep.csv")});
  return out;
}

void replay_manifest(const std::string& path, const std::optional<std::string>& out_dir) {
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (m.value("format", "") != "telezoom.manifest") throw ConfigError(path + " is not a run manifest");
  const auto cfg = RunConfig::from_json(m.at("config").dump());
  const auto& a = m.at("args");
  const std::string cmd = m.at("command").get<std::string>();
  const auto out = [&](const char* key) { return out_dir.value_or(a.at(key).get<std::string>()); };
  if (cmd == "generate") {
    cmd_generate(cfg, out("out"));
  } else if (cmd == "train") {
    cmd_train(cfg, a.at("data"), out("out"), a.at("mode") == "kal" ? TrainMode::kal : TrainMode::plain,
              a.at("refine").get<bool>());
  } else if (cmd == "impute") {
    std::string output = a.at("output");
    if (out_dir) output = join(*out_dir, fs::path(output).filename().string());
    cmd_impute(cfg, a.at("checkpoint"), a.at("input"), output, a.at("enforce").get<bool>());
  } else if (cmd == "evaluate") {
    std::vector<MethodFile> methods;
    for (const auto& x : a.at("methods")) methods.push_back({x.at("name"), x.at("path")});
    cmd_evaluate(methods, a.at("truth"), out("out"), a.at("threshold_frac").get<double>());
  } else if (cmd == "sweep") {
    cmd_sweep(cfg, out("out"));
  } else {
    throw ConfigError("manifest records an unknown command '" + cmd + "'");
  }
}

}  // namespace telezoom

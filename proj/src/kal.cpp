#include "telezoom/kal.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "telezoom/losses.hpp"

namespace telezoom {

using nlohmann::json;

namespace {

void scan(const Expr& e, bool& has_count, bool& has_sum) {
  if (e.op == ExprOp::aggregate) {
    if (e.agg == AggKind::count_pos) has_count = true;
    if (e.agg == AggKind::sum) has_sum = true;
  }
  for (const auto& a : e.args) scan(*a, has_count, has_sum);
}

}  // namespace

KalState KalState::init(const ConstraintSet& set, const std::vector<std::int64_t>& example_ids, int context_len,
                        double mu0, double mu_mult) {
  if (!(mu0 > 0)) throw ConfigError("initial penalty coefficient must be positive");
  if (!(mu_mult >= 1)) throw ConfigError("penalty multiplier must be >= 1");
  KalState k;
  k.mu = mu0;
  k.mu_mult = mu_mult;
  k.example_ids = example_ids;
  for (const auto& c : set.items()) {
    k.names.push_back(c.name);
    k.forms.push_back(c.form);
    k.instances.push_back(c.instances(context_len));
    k.lambda.emplace_back(example_ids.size() * static_cast<std::size_t>(k.instances.back()), 0.0);
  }
  return k;
}

std::string KalState::to_json() const {
  json j = {{"mu", mu}, {"mu_mult", mu_mult}, {"outer_iter", outer_iter}, {"example_ids", example_ids},
            {"violation_history", violation_history}};
  json cs = json::array();
  for (std::size_t c = 0; c < names.size(); ++c) {
    cs.push_back({{"name", names[c]},
                  {"form", forms[c] == ConstraintForm::eq ? "eq" : "le"},
                  {"instances", instances[c]},
                  {"lambda", lambda[c]}});
  }
  j["constraints"] = cs;
  return j.dump();
}

KalState KalState::from_json(const std::string& text) {
  KalState k;
  try {
    const auto j = json::parse(text);
    k.mu = j.at("mu");
    k.mu_mult = j.at("mu_mult");
    k.outer_iter = j.at("outer_iter");
    k.example_ids = j.at("example_ids").get<std::vector<std::int64_t>>();
    k.violation_history = j.at("violation_history").get<std::vector<double>>();
    for (const auto& c : j.at("constraints")) {
      k.names.push_back(c.at("name"));
      k.forms.push_back(c.at("form") == "eq" ? ConstraintForm::eq : ConstraintForm::le);
      k.instances.push_back(c.at("instances"));
      k.lambda.push_back(c.at("lambda").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad multiplier state: ") + e.what());
  }
  return k;
}

void update_multipliers(KalState& kal, const ResidualTable& residuals) {
  if (residuals.size() != kal.lambda.size()) throw ShapeError("residual table does not match the multipliers");
  const double mu_old = kal.mu;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < kal.lambda.size(); ++c) {
    auto& lam = kal.lambda[c];
    const auto& r = residuals[c];
    if (r.size() != lam.size()) throw ShapeError("residual table does not match the multipliers");
    const bool eq = kal.forms[c] == ConstraintForm::eq;
    for (std::size_t i = 0; i < lam.size(); ++i) {
      if (eq) {
        lam[i] += 2.0 * mu_old * r[i];
        total += std::abs(r[i]);
      } else {
        lam[i] = std::max(0.0, lam[i] + 2.0 * mu_old * r[i]);
        total += std::max(0.0, r[i]);
      }
    }
    count += lam.size();
  }
  kal.mu = mu_old * kal.mu_mult;
  ++kal.outer_iter;
  kal.violation_history.push_back(count ? total / static_cast<double>(count) : 0.0);
}

double residual_scale(const Constraint& c, int zoom, int context_len, double target_scale) {
  if (c.scale) return *c.scale;
  bool has_count = false, has_sum = false;
  scan(*c.expr, has_count, has_sum);
  const double span = c.scope == ConstraintScope::interval ? zoom : static_cast<double>(zoom) * context_len;
  if (has_count) return span;
  if (has_sum) return span * target_scale;
  return target_scale;
}

KalContext make_kal_context(const ConstraintSet& set, const ImputationModel& model, double smooth_k) {
  KalContext ctx;
  ctx.set = &set;
  ctx.target_scale = model.normalizer().target_scale;
  ctx.domain = model.domain();
  ctx.smooth_k = smooth_k;
  for (const auto& c : set.items()) {
    ctx.scales.push_back(residual_scale(c, model.zoom(), model.context_len(), ctx.target_scale));
  }
  return ctx;
}

namespace {

SmoothOptions smooth_options(const KalContext& ctx) {
  SmoothOptions o;
  o.eps = positive_eps(ctx.domain);
  o.k = ctx.smooth_k;
  o.unit = ctx.target_scale;
  return o;
}

std::vector<double> physical(std::span<const double> z, double ts) {
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * ts;
  return x;
}

}  // namespace

double kal_penalty(const KalContext& ctx, const WindowExample& w, std::span<const double> z, double mu,
                   const KalState* kal, std::size_t kal_row, std::span<double> dz) {
  const auto x = physical(z, ctx.target_scale);
  const auto opt = smooth_options(ctx);
  double p = 0;
  for (std::size_t c = 0; c < ctx.set->size(); ++c) {
    const auto& con = (*ctx.set)[c];
    const double scale = ctx.scales[c];
    const auto res = eval_smooth(con, x, w.input, w.scalars, opt);
    for (std::size_t s = 0; s < res.size(); ++s) {
      const auto& r = res[s];
      if (!r.active) continue;
      const double v = r.value / scale;
      const double lam = kal ? kal->at(c, kal_row, static_cast<int>(s)) : 0.0;
      double dv = 0;
      if (con.form == ConstraintForm::eq) {
        p += mu * v * v + lam * v;
        dv = 2.0 * mu * v + lam;
      } else {
        // The gate is evaluated, not differentiated.
        const bool gate = lam > 0 || v > 0;
        p += lam * v + (gate ? mu * v * v : 0.0);
        dv = lam + (gate ? 2.0 * mu * v : 0.0);
      }
      if (dz.empty() || dv == 0.0 || r.grad.empty()) continue;
      const double k = dv / scale * ctx.target_scale;
      for (std::size_t j = 0; j < r.grad.size(); ++j) dz[r.offset + j] += k * r.grad[j];
    }
  }
  return p;
}

double l_aug(const KalContext& ctx, const Sample& s, std::span<const double> z, double emd_weight, double mu,
             const KalState* kal, std::size_t kal_row, std::span<double> dz) {
  double v = base_loss(s, z, emd_weight, dz);
  v += kal_penalty(ctx, *s.window, z, mu, kal, kal_row, dz);
  return v;
}

ResidualTable smooth_residuals(const KalContext& ctx, const std::vector<Sample>& samples,
                               const std::vector<std::vector<double>>& z) {
  const auto opt = smooth_options(ctx);
  ResidualTable table(ctx.set->size());
  for (std::size_t c = 0; c < ctx.set->size(); ++c) {
    const auto& con = (*ctx.set)[c];
    const int inst = con.instances(samples.empty() ? 1 : samples.front().window->input.context_len);
    table[c].assign(samples.size() * static_cast<std::size_t>(inst), 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto x = physical(z[i], ctx.target_scale);
      const auto res = eval_smooth(con, x, samples[i].window->input, samples[i].window->scalars, opt);
      for (std::size_t s = 0; s < res.size(); ++s) {
        if (res[s].active) table[c][i * static_cast<std::size_t>(inst) + s] = res[s].value / ctx.scales[c];
      }
    }
  }
  return table;
}

std::vector<double> mean_violations(const ConstraintSet& set, const std::vector<WindowExample>& windows,
                                    const std::vector<FineSeries>& imputed) {
  if (windows.size() != imputed.size()) throw ShapeError("imputed windows do not match the dataset");
  std::vector<double> out(set.size(), 0.0);
  for (std::size_t c = 0; c < set.size(); ++c) {
    double total = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto r = eval_exact(set[c], imputed[i].values, windows[i].input, windows[i].scalars,
                                positive_eps(imputed[i].domain));
      for (double v : r) total += violation(set[c], v);
      count += r.size();
    }
    out[c] = count ? total / static_cast<double>(count) : 0.0;
  }
  return out;
}

std::string KalLog::violations_csv(const ConstraintSet& set) const {
  std::string out = "outer,mu,epochs,train_loss,val_objective,mean_violation";
  for (const auto& c : set.items()) out += "," + c.name;
  out += "\n";
  for (const auto& r : rounds) {
    out += std::to_string(r.outer) + "," + format_double(r.mu) + "," + std::to_string(r.epochs) + "," +
           format_double(r.train_loss) + "," + format_double(r.val_objective) + "," + format_double(r.mean_violation);
    for (double v : r.violations) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

KalLog fit_kal(ImputationModel& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
               const std::vector<WindowExample>& val_windows, const ConstraintSet& set, const TrainConfig& tcfg,
               const KalConfig& kcfg) {
  if (kcfg.max_outer < 1) throw ConfigError("max_outer must be >= 1");
  if (kcfg.saturation_tol < 0) throw ConfigError("saturation_tol must be non-negative");
  std::vector<std::int64_t> ids;
  for (const auto& s : train) ids.push_back(s.id);
  KalLog log;
  log.state = KalState::init(set, ids, model.context_len(), kcfg.mu0, kcfg.mu_mult);
  KalState& kal = log.state;
  const auto ctx = make_kal_context(set, model, kcfg.smooth_k);
  const auto& report_windows = val_windows;
  Trainer trainer(model, tcfg);
  std::vector<double> best_params = model.params();
  double best_violation = 0;
  const double n_train = static_cast<double>(train.size());

  for (int outer = 0; outer < kcfg.max_outer; ++outer) {
    const double mu = kal.mu;
    Penalty train_pen = [&](const Sample& s, std::size_t idx, std::span<const double> z, std::span<double> dz) {
      return kal_penalty(ctx, *s.window, z, mu, &kal, idx, dz);
    };
    // Validation examples carry no multipliers of their own.
    Penalty val_pen = [&](const Sample& s, std::size_t, std::span<const double> z, std::span<double> dz) {
      return kal_penalty(ctx, *s.window, z, mu, nullptr, 0, dz);
    };
    const bool constrained = !set.empty();
    PhaseLog phase;
    try {
      phase = train_phase(trainer, train, val, constrained ? &train_pen : nullptr, constrained ? &val_pen : nullptr,
                          n_train);
    } catch (const TrainingError& e) {
      throw TrainingError("outer iteration " + std::to_string(outer) + ": " + e.what());
    }

    OuterRecord rec;
    rec.outer = outer;
    rec.mu = mu;
    rec.epochs = static_cast<int>(phase.train_loss.size());
    rec.train_loss = phase.train_loss.empty() ? 0 : phase.train_loss[static_cast<std::size_t>(phase.best_epoch)];
    rec.val_objective = phase.best_val;
    const auto imputed = impute_all(model, report_windows, tcfg.exec);
    rec.violations = mean_violations(set, report_windows, imputed);
    for (std::size_t c = 0; c < set.size(); ++c) rec.mean_violation += rec.violations[c] / ctx.scales[c];
    if (!set.empty()) rec.mean_violation /= static_cast<double>(set.size());
    log.rounds.push_back(rec);
    log_info("outer " + std::to_string(outer) + ": mu=" + format_double(mu) + " epochs=" +
             std::to_string(rec.epochs) + " violation=" + format_double(rec.mean_violation));

    if (log.best_round < 0 || rec.mean_violation < best_violation) {
      log.best_round = outer;
      best_violation = rec.mean_violation;
      best_params = model.params();
    }
    if (!constrained) break;

    const auto z = predict_all(model, train, tcfg.exec);
    update_multipliers(kal, smooth_residuals(ctx, train, z));

    if (outer > 0) {
      const double prev = log.rounds[log.rounds.size() - 2].mean_violation;
      if (prev <= 0 || (prev - rec.mean_violation) / prev < kcfg.saturation_tol) break;
    } else if (rec.mean_violation == 0) {
      break;
    }
  }
  model.params() = best_params;
  model.info["mode"] = "kal";
  model.info["epochs"] = std::to_string(trainer.epochs_done());
  model.info["outer_rounds"] = std::to_string(log.rounds.size());
  model.kal_state_json = kal.to_json();
  return log;
}

}  // namespace telezoom

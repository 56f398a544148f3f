#include "telezoom/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "telezoom/losses.hpp"

namespace telezoom {

std::vector<BurstRecord> detect_bursts(std::span<const double> values, double threshold_frac) {
  if (!(threshold_frac > 0 && threshold_frac < 1)) throw ConfigError("burst threshold must lie in (0, 1)");
  std::vector<BurstRecord> out;
  if (values.empty()) return out;
  const double peak = *std::max_element(values.begin(), values.end());
  if (peak <= 0) return out;
  const double thr = threshold_frac * peak;
  std::size_t t = 0;
  while (t < values.size()) {
    if (values[t] < thr) {
      ++t;
      continue;
    }
    BurstRecord b;
    b.start = t;
    while (t < values.size() && values[t] >= thr) {
      b.height = std::max(b.height, values[t]);
      b.volume += values[t];
      ++t;
    }
    b.duration = t - b.start;
    out.push_back(b);
  }
  return out;
}

BurstProperties burst_properties(std::span<const double> values, double threshold_frac) {
  const auto bursts = detect_bursts(values, threshold_frac);
  BurstProperties p;
  p.frequency = static_cast<double>(bursts.size());
  if (bursts.empty()) return p;
  for (const auto& b : bursts) {
    p.position += static_cast<double>(b.start);
    p.height += b.height;
    p.duration += static_cast<double>(b.duration);
    p.volume += b.volume;
  }
  const double n = p.frequency;
  p.position /= n;
  p.height /= n;
  p.duration /= n;
  p.volume /= n;
  if (bursts.size() > 1) {
    p.interarrival = static_cast<double>(bursts.back().start - bursts.front().start) / (n - 1);
  }
  return p;
}

RelError relative_error(double t, double t_real) {
  if (t_real == 0) return {std::abs(t), true};
  return {std::abs(t - t_real) / std::abs(t_real), false};
}

double lag1_autocorr(std::span<const double> values) {
  if (values.size() < 2) return 0;
  const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double num = 0, den = 0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    den += (values[t] - m) * (values[t] - m);
    if (t + 1 < values.size()) num += (values[t] - m) * (values[t + 1] - m);
  }
  return den > 0 ? num / den : 0;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty series");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

ImputationMetrics imputation_metrics(std::span<const double> imputed, std::span<const double> truth) {
  ImputationMetrics m;
  m.mse = mse(imputed, truth);
  m.emd = emd(imputed, truth);
  m.autocorr = relative_error(lag1_autocorr(imputed), lag1_autocorr(truth));
  m.p99 = relative_error(percentile(imputed, 0.99), percentile(truth, 0.99));
  return m;
}

std::vector<std::vector<double>> normalize_errors(const std::vector<std::vector<double>>& table) {
  if (table.size() < 2) throw ConfigError("normalization needs at least two methods");
  const std::size_t cols = table[0].size();
  for (const auto& r : table) {
    if (r.size() != cols) throw ShapeError("error table rows differ in length");
  }
  auto out = table;
  for (std::size_t c = 0; c < cols; ++c) {
    double lo = table[0][c], hi = table[0][c];
    for (const auto& r : table) {
      lo = std::min(lo, r[c]);
      hi = std::max(hi, r[c]);
    }
    for (auto& r : out) r[c] = hi > lo ? 0.1 + 0.8 * (r[c] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

// ------------------------------------------------------------------ KNN

KnnImputer::KnnImputer(const std::vector<WindowExample>& train, Exec exec) : exec_(exec) {
  if (train.empty()) throw DataError("KNN needs a non-empty training set");
  layout_ = train.front().input.layout();
  const auto norm = Normalizer::fit(train, layout_);
  mean_ = norm.mean;
  std_ = norm.std;
  const std::size_t dim = features(train.front().input).size();
  train_features_ = Matrix(train.size(), dim);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto f = features(train[i].input);
    std::copy(f.begin(), f.end(), train_features_.row(i).begin());
    targets_.push_back(train[i].target);
  }
}

std::vector<double> KnnImputer::features(const CoarseBundle& b) const {
  std::vector<double> f;
  for (std::size_t e = 0; e < layout_.size(); ++e) {
    for (double v : b.at(layout_[e].name).values) f.push_back((v - mean_[e]) / std_[e]);
  }
  return f;
}

FineSeries KnnImputer::impute(const CoarseBundle& query, int k) const {
  if (k < 1 || static_cast<std::size_t>(k) > targets_.size()) {
    throw ConfigError("K must lie in [1, " + std::to_string(targets_.size()) + "]");
  }
  Matrix q(1, train_features_.cols);
  const auto f = features(query);
  if (f.size() != q.cols) throw ShapeError("query layout does not match the KNN training set");
  std::copy(f.begin(), f.end(), q.row(0).begin());
  const Matrix d = squared_distances(q, train_features_, Exec::serial);
  std::vector<std::size_t> idx(targets_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    return d(0, a) < d(0, b) || (d(0, a) == d(0, b) && a < b);
  });
  FineSeries out = targets_[idx[0]];
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (int j = 0; j < k; ++j) {
    const auto& t = targets_[idx[static_cast<std::size_t>(j)]].values;
    for (std::size_t i = 0; i < t.size(); ++i) out.values[i] += t[i];
  }
  for (auto& v : out.values) v /= k;
  out.domain = ValueDomain::nonneg_real;  // a mean of integers need not be integral
  return out;
}

std::vector<FineSeries> KnnImputer::impute_all(const std::vector<WindowExample>& queries, int k) const {
  std::vector<FineSeries> out(queries.size());
  for_each_index(queries.size(), exec_, [&](std::size_t i) { out[i] = impute(queries[i].input, k); });
  return out;
}

int KnnImputer::select_k(const std::vector<WindowExample>& val, const std::vector<int>& candidates) const {
  if (val.empty()) throw DataError("K selection needs a validation split");
  int best_k = 0;
  double best = 0;
  for (int k : candidates) {
    if (static_cast<std::size_t>(k) > targets_.size()) continue;
    const auto out = impute_all(val, k);
    double s = 0;
    for (std::size_t i = 0; i < val.size(); ++i) s += mse(out[i].values, val[i].target.values);
    if (best_k == 0 || s < best) {
      best_k = k;
      best = s;
    }
  }
  if (best_k == 0) throw ConfigError("no candidate K fits the training set size");
  return best_k;
}

FineSeries knn_baseline(const std::vector<WindowExample>& train, const CoarseBundle& query, int k) {
  return KnnImputer(train, Exec::serial).impute(query, k);
}

// ------------------------------------------------------------------ linear

FineSeries linear_baseline(const CoarseBundle& bundle, const std::string& channel, ValueDomain domain) {
  const CoarseEntry* periodic = nullptr;
  const CoarseEntry* peak = nullptr;
  for (const auto& e : bundle.entries) {
    if (e.entry.channel != channel) continue;
    if (e.entry.spec.kind == CoarsenKind::periodic && periodic == nullptr) periodic = &e;
    if (e.entry.spec.kind == CoarsenKind::max && peak == nullptr) peak = &e;
  }
  if (periodic == nullptr) {
    throw DataError("the linear baseline needs a periodic sample of '" + channel + "'");
  }
  const auto zoom = static_cast<std::size_t>(bundle.zoom);
  const std::size_t n = static_cast<std::size_t>(bundle.context_len) * zoom;
  // anchor position -> value; samples win over a max placed at the same index
  std::vector<std::pair<std::size_t, double>> anchors;
  for (std::size_t i = 0; i < static_cast<std::size_t>(bundle.context_len); ++i) {
    const std::size_t sample_at = i * zoom + static_cast<std::size_t>(periodic->entry.spec.offset);
    const std::size_t mid_at = i * zoom + zoom / 2;
    std::vector<std::pair<std::size_t, double>> here{{sample_at, periodic->values[i]}};
    if (peak != nullptr && mid_at != sample_at) here.emplace_back(mid_at, peak->values[i]);
    std::sort(here.begin(), here.end());
    anchors.insert(anchors.end(), here.begin(), here.end());
  }
  FineSeries out;
  out.channel = channel;
  out.domain = domain;
  out.values.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (t <= anchors.front().first) {
      out.values[t] = anchors.front().second;
      continue;
    }
    if (t >= anchors.back().first) {
      out.values[t] = anchors.back().second;
      continue;
    }
    auto hi = std::lower_bound(anchors.begin(), anchors.end(), t,
                               [](const auto& a, std::size_t v) { return a.first < v; });
    if (hi->first == t) {
      out.values[t] = hi->second;
      continue;
    }
    const auto lo = std::prev(hi);
    const double w = static_cast<double>(t - lo->first) / static_cast<double>(hi->first - lo->first);
    out.values[t] = lo->second + w * (hi->second - lo->second);
  }
  if (domain == ValueDomain::nonneg_int) {
    for (auto& v : out.values) v = std::round(v);
  }
  return out;
}

PhaseLog plain_baseline(ImputationModel& model, const std::vector<WindowExample>& train,
                        const std::vector<WindowExample>& val, TrainConfig cfg) {
  cfg.emd_weight = 0.0;
  return fit_plain(model, train, val, cfg);
}

// ------------------------------------------------------------------ reports

const std::vector<std::string>& MethodScores::columns() {
  static const std::vector<std::string> cols{"mse",           "emd",          "autocorr",        "p99",
                                             "burst_position", "burst_height", "burst_frequency", "burst_duration",
                                             "burst_volume",  "burst_interarrival"};
  return cols;
}

std::vector<double> MethodScores::values() const {
  return {mse,          emd,          autocorr,        p99,          burst_position,
          burst_height, burst_frequency, burst_duration, burst_volume, burst_interarrival};
}

MethodScores score_method(const std::string& method, const std::vector<FineSeries>& imputed,
                          const std::vector<WindowExample>& truth, double threshold_frac, Exec exec) {
  if (imputed.size() != truth.size()) {
    throw ShapeError(method + ": " + std::to_string(imputed.size()) + " imputed windows for " +
                     std::to_string(truth.size()) + " truth windows");
  }
  if (truth.empty()) throw DataError("nothing to evaluate");
  const std::size_t n = truth.size();
  Matrix per(n, 10);
  std::vector<std::size_t> flags(n, 0);
  for_each_index(n, exec, [&](std::size_t i) {
    const auto& x = imputed[i].values;
    const auto& y = truth[i].target.values;
    if (x.size() != y.size()) {
      throw ShapeError(method + ": window " + std::to_string(truth[i].id) + " has " + std::to_string(x.size()) +
                       " steps, truth has " + std::to_string(y.size()));
    }
    const auto m = imputation_metrics(x, y);
    const auto pi = burst_properties(x, threshold_frac);
    const auto pt = burst_properties(y, threshold_frac);
    const RelError rel[] = {m.autocorr,
                            m.p99,
                            relative_error(pi.position, pt.position),
                            relative_error(pi.height, pt.height),
                            relative_error(pi.frequency, pt.frequency),
                            relative_error(pi.duration, pt.duration),
                            relative_error(pi.volume, pt.volume),
                            relative_error(pi.interarrival, pt.interarrival)};
    per(i, 0) = m.mse;
    per(i, 1) = m.emd;
    for (std::size_t k = 0; k < 8; ++k) {
      per(i, 2 + k) = rel[k].value;
      flags[i] += rel[k].absolute ? 1 : 0;
    }
  });
  std::vector<double> mean(10, 0.0);
  accumulate_rows(per, n, mean, Exec::serial);
  for (auto& v : mean) v /= static_cast<double>(n);
  MethodScores s;
  s.method = method;
  s.mse = mean[0];
  s.emd = mean[1];
  s.autocorr = mean[2];
  s.p99 = mean[3];
  s.burst_position = mean[4];
  s.burst_height = mean[5];
  s.burst_frequency = mean[6];
  s.burst_duration = mean[7];
  s.burst_volume = mean[8];
  s.burst_interarrival = mean[9];
  s.windows = n;
  s.absolute_fallbacks = std::accumulate(flags.begin(), flags.end(), std::size_t{0});
  return s;
}

EvalReport make_report(std::vector<MethodScores> methods) {
  EvalReport r;
  r.methods = std::move(methods);
  if (r.methods.size() >= 2) {
    std::vector<std::vector<double>> table;
    for (const auto& m : r.methods) table.push_back(m.values());
    r.normalized = normalize_errors(table);
  } else {
    r.note = "a single method: normalized table omitted";
  }
  return r;
}

namespace {

std::string table_csv(const std::vector<MethodScores>& methods, const std::vector<std::vector<double>>& rows) {
  std::string out = "method";
  for (const auto& c : MethodScores::columns()) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    out += methods[i].method;
    for (double v : rows[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace

std::string EvalReport::raw_csv() const {
  std::vector<std::vector<double>> rows;
  for (const auto& m : methods) rows.push_back(m.values());
  return table_csv(methods, rows);
}

std::string EvalReport::normalized_csv() const {
  if (normalized.empty()) return "";
  return table_csv(methods, normalized);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["columns"] = MethodScores::columns();
  j["raw"] = nlohmann::json::object();
  for (std::size_t i = 0; i < methods.size(); ++i) {
    nlohmann::json row;
    const auto v = methods[i].values();
    for (std::size_t c = 0; c < v.size(); ++c) row[MethodScores::columns()[c]] = v[c];
    row["windows"] = methods[i].windows;
    row["absolute_fallbacks"] = methods[i].absolute_fallbacks;
    j["raw"][methods[i].method] = row;
    if (!normalized.empty()) {
      nlohmann::json nrow;
      for (std::size_t c = 0; c < v.size(); ++c) nrow[MethodScores::columns()[c]] = normalized[i][c];
      j["normalized"][methods[i].method] = nrow;
    }
  }
  if (!note.empty()) j["note"] = note;
  return j.dump(2) + "\n";
}

}  // namespace telezoom

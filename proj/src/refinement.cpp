#include "telezoom/refinement.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <json.hpp>

#include "telezoom/losses.hpp"

namespace telezoom {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  // The smaller root wins, so the closure does not depend on visit order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::map<std::int64_t, std::size_t> index_by_id(const std::vector<WindowExample>& windows) {
  std::map<std::int64_t, std::size_t> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!out.emplace(windows[i].id, i).second) {
      throw DataError("duplicate window id " + std::to_string(windows[i].id));
    }
  }
  return out;
}

std::vector<EquivalenceClass> build_classes(UnionFind& uf, const std::vector<WindowExample>& windows,
                                            const std::vector<std::size_t>& index) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < index.size(); ++k) groups[uf.find(k)].push_back(index[k]);
  std::vector<EquivalenceClass> out;
  for (auto& [root, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return windows[a].id < windows[b].id; });
    EquivalenceClass cls;
    cls.representative_input = windows[members.front()].input;
    for (std::size_t m : members) {
      cls.member_ids.push_back(windows[m].id);
      cls.targets.push_back(windows[m].target);
    }
    out.push_back(std::move(cls));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.member_ids[0] < b.member_ids[0]; });
  return out;
}

}  // namespace

std::vector<EquivalenceClass> equivalence_test(const std::vector<WindowExample>& windows,
                                               const ImputationModel& basic, const RefineConfig& cfg) {
  if (basic.info.find("mode") == basic.info.end()) {
    throw ConfigError("the equivalence test needs a trained basic model (checkpoint has no training mode)");
  }
  if (cfg.theta_far <= 0 || cfg.theta_close <= 0) throw ConfigError("refinement thresholds must be positive");
  const std::size_t n = windows.size();
  if (n < 2) return {};
  const std::size_t len = basic.output_len();
  const double sigma = basic.normalizer().target_scale;

  Matrix outs(n, len), targets(n, len);
  for_each_index(n, cfg.exec, [&](std::size_t i) {
    const auto tokens = basic.encode(windows[i].input);
    auto row = outs.row(i);
    basic.forward(tokens, row, nullptr, nullptr);
    for (auto& v : row) v *= sigma;
    if (windows[i].target.values.size() != len) throw ShapeError("window target does not match the basic model");
    std::copy(windows[i].target.values.begin(), windows[i].target.values.end(), targets.row(i).begin());
  });
  const Matrix d_out = pairwise_rmse(outs, cfg.exec);
  const Matrix d_tgt = pairwise_rmse(targets, cfg.exec);

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d_tgt(i, j) > cfg.theta_far * sigma && d_out(i, j) < cfg.theta_close * sigma) uf.unite(i, j);
    }
  }
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  return build_classes(uf, windows, index);
}

double l_class(std::span<const double> out, const std::vector<std::vector<double>>& targets, double emd_weight,
               std::span<double> dz) {
  if (targets.empty()) throw DataError("l_class over an empty class");
  std::size_t best = 0;
  double best_v = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double v = l_combine(out, targets[k], emd_weight);
    if (k == 0 || v < best_v) {
      best = k;
      best_v = v;
    }
  }
  if (!dz.empty()) {
    const auto r = l_combine_grad(out, targets[best], emd_weight);
    std::copy(r.grad.begin(), r.grad.end(), dz.begin());
  }
  return best_v;
}

std::vector<EquivalenceClass> merge_overlapping(const std::vector<EquivalenceClass>& classes,
                                                const std::vector<WindowExample>& windows) {
  const auto by_id = index_by_id(windows);
  std::vector<std::size_t> index;  // local slot -> window index
  std::map<std::size_t, std::size_t> slot;
  auto slot_of = [&](std::int64_t id) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("class member " + std::to_string(id) + " is not in the dataset");
    auto [s, fresh] = slot.emplace(it->second, index.size());
    if (fresh) index.push_back(it->second);
    return s->second;
  };
  std::vector<std::vector<std::size_t>> local;
  for (const auto& c : classes) {
    std::vector<std::size_t> l;
    for (auto id : c.member_ids) l.push_back(slot_of(id));
    local.push_back(std::move(l));
  }
  UnionFind uf(index.size());
  for (const auto& l : local) {
    for (std::size_t k = 1; k < l.size(); ++k) uf.unite(l[0], l[k]);
  }
  return build_classes(uf, windows, index);
}

std::size_t refine_samples(std::vector<Sample>& samples, const std::vector<EquivalenceClass>& classes,
                           const std::vector<WindowExample>& windows, double target_scale) {
  const auto merged = merge_overlapping(classes, windows);
  std::map<std::int64_t, std::size_t> sample_of;
  for (std::size_t i = 0; i < samples.size(); ++i) sample_of[samples[i].id] = i;
  std::size_t touched = 0;
  for (const auto& cls : merged) {
    std::vector<std::vector<double>> set;
    for (const auto& t : cls.targets) {
      std::vector<double> v(t.values.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = t.values[i] / target_scale;
      set.push_back(std::move(v));
    }
    for (auto id : cls.member_ids) {
      auto it = sample_of.find(id);
      if (it == sample_of.end()) continue;
      samples[it->second].targets = set;
      ++touched;
    }
  }
  return touched;
}

std::string classes_to_json(const std::vector<EquivalenceClass>& classes, const std::string& dataset_hash) {
  nlohmann::json j;
  j["format"] = "telezoom.classes";
  j["version"] = 1;
  if (!dataset_hash.empty()) j["dataset_hash"] = dataset_hash;
  j["classes"] = nlohmann::json::array();
  std::size_t members = 0;
  for (const auto& c : classes) {
    j["classes"].push_back(c.member_ids);
    members += c.member_ids.size();
  }
  j["member_count"] = members;
  return j.dump() + "\n";
}

std::vector<EquivalenceClass> classes_from_json(const std::string& text, const std::vector<WindowExample>& windows) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("class sidecar is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "telezoom.classes") throw DataError("not a class sidecar file");
  std::vector<EquivalenceClass> raw;
  for (const auto& c : j.at("classes")) {
    EquivalenceClass cls;
    cls.member_ids = c.get<std::vector<std::int64_t>>();
    raw.push_back(std::move(cls));
  }
  return merge_overlapping(raw, windows);
}

}  // namespace telezoom

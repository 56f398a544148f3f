#pragma once

// Shared builders for the unit and acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "telezoom/datagen.hpp"
#include "telezoom/kal.hpp"
#include "telezoom/model.hpp"

namespace fixtures {

using namespace telezoom;

inline ModelConfig small_model() {
  ModelConfig m;
  m.layers = 2;
  m.width = 32;
  m.heads = 2;
  m.ff_width = 64;
  m.dropout = 0.1;
  m.seed = 5;
  return m;
}

/// A window whose coarse input is computed from `fine` (channel "q").
inline WindowExample window_from(const std::vector<double>& fine, int zoom,
                                 const std::vector<CoarsenKind>& kinds = {CoarsenKind::max, CoarsenKind::periodic,
                                                                          CoarsenKind::sum},
                                 ValueDomain domain = ValueDomain::nonneg_int, std::int64_t id = 0) {
  WindowExample w;
  w.id = id;
  w.input.zoom = zoom;
  w.input.context_len = static_cast<int>(fine.size()) / zoom;
  for (auto k : kinds) {
    auto e = make_entry("q", k, zoom);
    w.input.entries.push_back({e, coarsen(fine, e.spec)});
  }
  w.target.channel = "q";
  w.target.values = fine;
  w.target.domain = domain;
  return w;
}

inline ConstraintSet queue_set_q() {
  Bindings b;
  b.roles = {{"max", "q_max"}, {"periodic", "q_periodic"}, {"sent", "q_sum"}};
  return builtin_library({"C1", "C2", "C3"}, b);
}

/// The bursty preset shrunk so the suites stay fast.
inline GeneratorPreset small_preset(const std::string& name = "bursty", int traces = 2, std::int64_t duration = 2500) {
  auto p = load_preset(find_preset_file(name));
  p.traces_per_variant = traces;
  for (auto& v : p.variants) v.duration_ms = duration;
  return p;
}

/// Identical coarse inputs whose targets carry one burst (height ~20, width
/// 5) at different offsets inside interval 1. The burst never touches the
/// periodic sample at offset 0, so the coarse values cannot tell them apart.
inline std::vector<WindowExample> collision_fixture(std::size_t count, std::uint64_t seed, int zoom = 25,
                                                    int context_len = 3) {
  Rng rng(seed);
  std::vector<WindowExample> out;
  const std::size_t n = static_cast<std::size_t>(zoom * context_len);
  const int width = 5;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> fine(n, 0.0);
    const auto start = static_cast<std::size_t>(zoom + 2 + static_cast<int>(rng.below(zoom - width - 3)));
    const double heights[] = {12, 16, 20, 16, 12};
    for (int k = 0; k < width; ++k) fine[start + static_cast<std::size_t>(k)] = heights[k];
    auto w = window_from(fine, zoom, {CoarsenKind::max, CoarsenKind::periodic, CoarsenKind::sum},
                         ValueDomain::nonneg_int, static_cast<std::int64_t>(i));
    out.push_back(std::move(w));
  }
  return out;
}

/// A fresh model fit (normalizer only) on `train`.
inline ImputationModel model_for(const Dataset& ds, const std::vector<WindowExample>& train,
                                 ModelConfig cfg = small_model()) {
  const auto& h = ds.header;
  ImputationModel m(cfg, h.layout, h.context_len, h.zoom, h.target, h.target_domain);
  m.normalizer() = Normalizer::fit(train, h.layout);
  m.target_bound = h.target_bound;
  m.init_params();
  return m;
}

inline TrainConfig quick_train(int epochs = 3) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.patience = epochs;
  t.batch_size = 16;
  t.lr = 2e-3;
  t.seed = 3;
  return t;
}

/// Central finite difference of f at x along coordinate i.
template <typename F>
double fd(F&& f, std::vector<double> x, std::size_t i, double h = 1e-6) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

}  // namespace fixtures

#pragma once

#include <cmath>

#include "fixtures.hpp"

namespace fixtures {

// Tiny queue window plus an independent "sent" counter so C3 can bind.
struct Tiny {
  WindowExample w;
  ConstraintSet set;
  std::vector<double> y;
};

inline Tiny random_tiny(Rng& rng) {
  const int zoom = rng.below(2) == 0 ? 2 : 3;
  const int ctx = zoom == 2 ? 3 : 2;
  std::vector<double> truth(static_cast<std::size_t>(zoom * ctx));
  for (auto& v : truth) v = static_cast<double>(rng.below(6));
  Tiny t;
  t.w = fixtures::window_from(truth, zoom, {CoarsenKind::max, CoarsenKind::periodic});
  auto sent = make_entry("s", CoarsenKind::sum, zoom);
  std::vector<double> sv(static_cast<std::size_t>(ctx));
  // Mostly consistent with the truth (sometimes with slack), sometimes arbitrary.
  for (std::size_t k = 0; k < sv.size(); ++k) {
    double positives = 0;
    for (int j = 0; j < zoom; ++j) positives += truth[k * static_cast<std::size_t>(zoom) + static_cast<std::size_t>(j)] > 0;
    sv[k] = rng.below(4) == 0 ? static_cast<double>(rng.below(zoom + 1))
                              : std::min<double>(zoom, positives + static_cast<double>(rng.below(2)));
  }
  t.w.input.entries.push_back({sent, sv});
  Bindings b;
  b.roles = {{"max", "q_max"}, {"periodic", "q_periodic"}, {"sent", "s_sum"}};
  t.set = builtin_library({"C1", "C2", "C3"}, b);
  t.y.resize(truth.size());
  for (auto& v : t.y) v = std::round(rng.uniform() * 60) / 10.0;
  return t;
}

inline const std::vector<double> kGrid{0, 1, 2, 3, 4, 5};

}  // namespace fixtures

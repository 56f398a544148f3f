#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "telezoom/losses.hpp"

using namespace telezoom;

TEST_CASE("EMD equals the transport optimum") {
  Rng rng(31);
  for (int i = 0; i < 60; ++i) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = static_cast<double>(rng.below(6)) + (rng.below(2) ? 0.5 : 0.0);
    for (auto& v : b) v = rng.uniform() * 6;
    CHECK(emd(a, b) == doctest::Approx(oracles::ot_by_permutation(a, b)).epsilon(1e-12));
    CHECK(emd(a, b) == doctest::Approx(oracles::ot_by_cdf(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("EMD ignores where a burst sits") {
  std::vector<double> a(50, 0.0), b(50, 0.0);
  for (int k = 0; k < 5; ++k) {
    a[10 + k] = 20 - k;
    b[30 + k] = 20 - k;
  }
  CHECK(emd(a, b) == 0);
  CHECK(mse(a, b) > 0);
  CHECK_THROWS_AS(emd(std::vector<double>{1, 2}, std::vector<double>{1}), ShapeError);
  CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), ShapeError);
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> out(12), target(12);
    for (auto& v : out) v = rng.normal();
    for (auto& v : target) v = rng.normal();
    for (double w : {0.0, 1.0, 2.5}) {
      const auto g = l_combine_grad(out, target, w);
      CHECK(g.value == doctest::Approx(l_combine(out, target, w)));
      auto f = [&](const std::vector<double>& x) { return l_combine(x, target, w); };
      for (std::size_t j = 0; j < out.size(); ++j) {
        CHECK(fixtures::rel_diff(g.grad[j], fixtures::fd(f, out, j)) < 1e-5);
      }
    }
  }
  CHECK_THROWS_AS(l_combine(std::vector<double>{1}, std::vector<double>{1}, -1), ConfigError);
}

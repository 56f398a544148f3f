#include <doctest.h>

#include <cmath>

#include "telezoom/common.hpp"
#include "telezoom/kernels.hpp"

using namespace telezoom;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree exactly") {
  const auto a = random_matrix(37, 13, 1);
  const auto b = random_matrix(11, 13, 2);
  CHECK(pairwise_rmse(a, Exec::serial).data == pairwise_rmse(a, Exec::parallel).data);
  CHECK(squared_distances(a, b, Exec::serial).data == squared_distances(a, b, Exec::parallel).data);
  std::vector<double> s(13, 0.5), p(13, 0.5);
  accumulate_rows(a, 30, s, Exec::serial);
  accumulate_rows(a, 30, p, Exec::parallel);
  CHECK(s == p);
}

TEST_CASE("kernels compute what they claim") {
  Matrix m(2, 2);
  m.data = {0, 0, 3, 4};
  const auto d = pairwise_rmse(m, Exec::parallel);
  CHECK(d(0, 1) == doctest::Approx(std::sqrt(12.5)));
  CHECK(d(1, 0) == d(0, 1));
  CHECK(d(0, 0) == 0);
  const auto sq = squared_distances(m, m, Exec::serial);
  CHECK(sq(0, 1) == 25);
  std::vector<double> acc(2, 0.0);
  accumulate_rows(m, 2, acc, Exec::serial);
  CHECK(acc == std::vector<double>{3, 4});
  std::vector<int> hit(100, 0);
  for_each_index(100, Exec::parallel, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
}

#pragma once

// Independent reference computations used by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace oracles {

/// Optimal transport between two equal-size empirical distributions, by
/// enumerating permutations (the vertices of the transport polytope).
inline double ot_by_permutation(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> p(b.size());
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) c += std::abs(a[i] - b[p[i]]);
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return best / static_cast<double>(a.size());
}

/// W1 between the value histograms as the integral of |F_a - F_b|.
inline double ot_by_cdf(const std::vector<double>& a, const std::vector<double>& b) {
  std::map<double, double> mass;  // value -> (mass in a) - (mass in b)
  for (double v : a) mass[v] += 1.0 / static_cast<double>(a.size());
  for (double v : b) mass[v] -= 1.0 / static_cast<double>(b.size());
  double cdf = 0, total = 0, prev = 0;
  bool first = true;
  for (const auto& [v, m] : mass) {
    if (!first) total += std::abs(cdf) * (v - prev);
    cdf += m;
    prev = v;
    first = false;
  }
  return total;
}

/// New multipliers after one outer step, written straight from the update rules.
inline double lambda_eq_next(double lambda, double mu, double phi) { return lambda + 2 * mu * phi; }
inline double lambda_ineq_next(double lambda, double mu, double psi) { return std::max(0.0, lambda + 2 * mu * psi); }

}  // namespace oracles

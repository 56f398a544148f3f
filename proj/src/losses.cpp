#include "telezoom/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace telezoom {

namespace {

void check(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("series lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw ShapeError("empty series");
}

std::vector<std::size_t> sort_order(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  return idx;
}

}  // namespace

double mse(std::span<const double> a, std::span<const double> b) {
  check(a, b);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double mse(const FineSeries& a, const FineSeries& b) { return mse(a.values, b.values); }

double emd(std::span<const double> a, std::span<const double> b) {
  check(a, b);
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
  return s / static_cast<double>(sa.size());
}

double emd(const FineSeries& a, const FineSeries& b) { return emd(a.values, b.values); }

LossGrad mse_grad(std::span<const double> out, std::span<const double> target) {
  check(out, target);
  const double n = static_cast<double>(out.size());
  LossGrad r;
  r.grad.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - target[i];
    r.value += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.value /= n;
  return r;
}

LossGrad emd_grad(std::span<const double> out, std::span<const double> target) {
  check(out, target);
  const double n = static_cast<double>(out.size());
  const auto io = sort_order(out);
  std::vector<double> st(target.begin(), target.end());
  std::sort(st.begin(), st.end());
  LossGrad r;
  r.grad.assign(out.size(), 0.0);
  for (std::size_t k = 0; k < io.size(); ++k) {
    const double d = out[io[k]] - st[k];
    r.value += std::abs(d);
    r.grad[io[k]] = d > 0 ? 1.0 / n : d < 0 ? -1.0 / n : 0.0;
  }
  r.value /= n;
  return r;
}

double l_combine(std::span<const double> out, std::span<const double> target, double emd_weight) {
  if (emd_weight < 0) throw ConfigError("emd_weight must be non-negative");
  const double m = mse(out, target);
  return emd_weight == 0 ? m : m + emd_weight * emd(out, target);
}

LossGrad l_combine_grad(std::span<const double> out, std::span<const double> target, double emd_weight) {
  if (emd_weight < 0) throw ConfigError("emd_weight must be non-negative");
  auto r = mse_grad(out, target);
  if (emd_weight == 0) return r;
  const auto e = emd_grad(out, target);
  r.value += emd_weight * e.value;
  for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] += emd_weight * e.grad[i];
  return r;
}

}  // namespace telezoom

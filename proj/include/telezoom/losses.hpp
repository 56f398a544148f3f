#pragma once

#include <span>
#include <vector>

#include "telezoom/series.hpp"

namespace telezoom {

/// Mean squared pointwise difference.
double mse(std::span<const double> a, std::span<const double> b);
double mse(const FineSeries& a, const FineSeries& b);

/// 1-D earth mover's distance between the value distributions of a and b:
/// mean |sort(a) - sort(b)|. Ignores where in time the values sit.
double emd(std::span<const double> a, std::span<const double> b);
double emd(const FineSeries& a, const FineSeries& b);

/// Loss value plus its gradient with respect to the first argument.
struct LossGrad {
  double value = 0;
  std::vector<double> grad;
};

LossGrad mse_grad(std::span<const double> out, std::span<const double> target);
/// Sort permutation held fixed in the backward pass (stable, index order on ties).
LossGrad emd_grad(std::span<const double> out, std::span<const double> target);

/// mse + emd_weight * emd.
double l_combine(std::span<const double> out, std::span<const double> target, double emd_weight);
LossGrad l_combine_grad(std::span<const double> out, std::span<const double> target, double emd_weight);

}  // namespace telezoom

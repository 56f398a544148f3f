#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace telezoom {

// Every hot loop exists twice: a plain serial version kept as the reference
// and an OpenMP version. Both produce bit-identical results; the tests and
// the benchmark compare them.
enum class Exec { serial, parallel };

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Runs fn(i) for i in [0, n); iterations must not share mutable state.
void for_each_index(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn);

double rmse(std::span<const double> a, std::span<const double> b);

/// Symmetric n x n matrix of RMSE between rows.
Matrix pairwise_rmse(const Matrix& rows, Exec exec);

/// Squared Euclidean distance from every query row to every reference row.
Matrix squared_distances(const Matrix& queries, const Matrix& refs, Exec exec);

/// acc[j] += m(0, j) + m(1, j) + ... + m(n-1, j), added one row at a time in
/// row order so the result does not depend on the execution mode.
void accumulate_rows(const Matrix& m, std::size_t n, std::span<double> acc, Exec exec);

}  // namespace telezoom

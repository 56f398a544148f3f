#include "telezoom/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telezoom {

void for_each_index(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
  if (a.empty()) return 0;
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

Matrix pairwise_rmse(const Matrix& rows, Exec exec) {
  const std::size_t n = rows.rows;
  Matrix out(n, n);
  auto fill_row = [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rmse(rows.row(i), rows.row(j));
      out(i, j) = v;
      out(j, i) = v;  // each (i, j) pair is written by exactly one row task
    }
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fill_row(i);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < count; ++i) fill_row(static_cast<std::size_t>(i));
  }
  return out;
}

Matrix squared_distances(const Matrix& queries, const Matrix& refs, Exec exec) {
  if (queries.cols != refs.cols) throw std::invalid_argument("squared_distances: dimension mismatch");
  Matrix out(queries.rows, refs.rows);
  auto fill_row = [&](std::size_t q) {
    const auto a = queries.row(q);
    for (std::size_t r = 0; r < refs.rows; ++r) {
      const auto b = refs.row(r);
      double s = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
      }
      out(q, r) = s;
    }
  };
  if (exec == Exec::serial) {
    for (std::size_t q = 0; q < queries.rows; ++q) fill_row(q);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(queries.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < count; ++q) fill_row(static_cast<std::size_t>(q));
  }
  return out;
}

void accumulate_rows(const Matrix& m, std::size_t n, std::span<double> acc, Exec exec) {
  if (acc.size() != m.cols) throw std::invalid_argument("accumulate_rows: output size mismatch");
  if (n > m.rows) throw std::invalid_argument("accumulate_rows: row count out of range");
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = m.row(i);
      for (std::size_t j = 0; j < m.cols; ++j) acc[j] += r[j];
    }
    return;
  }
  // Columns are split across threads; each column still adds rows 0..n-1 in order.
  const auto cols = static_cast<std::ptrdiff_t>(m.cols);
  constexpr std::ptrdiff_t kBlock = 512;
  const std::ptrdiff_t blocks = (cols + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const auto lo = static_cast<std::size_t>(b * kBlock);
    const auto hi = static_cast<std::size_t>(std::min(cols, (b + 1) * kBlock));
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = m.data.data() + i * m.cols;
      for (std::size_t j = lo; j < hi; ++j) acc[j] += r[j];
    }
  }
}

}  // namespace telezoom

// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 reclens authors

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "reclens/core/rng.hpp"

namespace reclens {

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1 matrices.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }

  static Mat full(int r, int c, double v) {
    Mat m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
  }

  static Mat from_row(const std::vector<double>& v) {
    Mat m(1, static_cast<int>(v.size()));
    m.data = v;
    return m;
  }

  static Mat randn(int r, int c, Rng& rng, double sigma = 1.0) {
    Mat m(r, c);
    for (double& x : m.data) x = rng.normal(0.0, sigma);
    return m;
  }

  static Mat rand_uniform(int r, int c, Rng& rng, double lo, double hi) {
    Mat m(r, c);
    for (double& x : m.data) x = rng.uniform(lo, hi);
    return m;
  }

  double& at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(0.0); }

  Mat slice_rows(int start, int count) const {
    assert(start >= 0 && count >= 0 && start + count <= rows);
    Mat out(count, cols);
    std::copy(row(start), row(start) + static_cast<size_t>(count) * cols, out.data.begin());
    return out;
  }

  void add_inplace(const Mat& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  }

  void add_scaled_inplace(const Mat& o, double a) {
    assert(same_shape(o));
    for (size_t i = 0; i < data.size(); ++i) data[i] += a * o.data[i];
  }

  double l2_norm() const {
    double s = 0.0;
    for (double x : data) s += x * x;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : data) m = std::max(m, std::fabs(x));
    return m;
  }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return s0 + s1 + s2 + s3;
}

inline void axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// out += a * b            (a: m x k, b: k x n)
inline void matmul_acc(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  for (int i = 0; i < m; ++i) {
    const double* ar = a.row(i);
    double* orow = out.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av != 0.0) axpy(av, b.row(p), orow, n);
    }
  }
}

// out += a * b^T          (a: m x k, b: n x k)
inline void matmul_nt_acc(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const int m = a.rows, k = a.cols, n = b.rows;
  for (int i = 0; i < m; ++i) {
    const double* ar = a.row(i);
    double* orow = out.row(i);
    for (int j = 0; j < n; ++j) orow[j] += dot(ar, b.row(j), k);
  }
}

// out += a^T * b          (a: m x k, b: m x n, out: k x n)
inline void matmul_tn_acc(const Mat& a, const Mat& b, Mat& out) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  for (int i = 0; i < m; ++i) {
    const double* ar = a.row(i);
    const double* br = b.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av != 0.0) axpy(av, br, out.row(p), n);
    }
  }
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  matmul_acc(a, b, out);
  return out;
}

inline Mat matmul_nt(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.rows);
  matmul_nt_acc(a, b, out);
  return out;
}

}  // namespace reclens

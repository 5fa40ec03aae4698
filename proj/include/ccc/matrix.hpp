#pragma once

// Dense row-major matrix and the small kernel set the models are built on.
// All reductions run in a fixed order so results are reproducible.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccc {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& src) {
    Matrix m(src.size(), src.empty() ? 0 : src.front().size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i].size() != m.cols)
        throw std::invalid_argument("from_rows: ragged input rows");
      for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = src[i][j];
    }
    return m;
  }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

/// a^T * b
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows, "matmul_tn");
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = a.at(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aki * b.at(k, j);
    }
  return out;
}

/// a * b^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols == b.cols, "matmul_nt");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(j, k);
      out.at(i, j) = acc;
    }
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

inline Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v *= s;
  return out;
}

/// p -= lr * g, elementwise.
inline void axpy_inplace(Matrix& p, const Matrix& g, double lr) {
  require(p.same_shape(g), "axpy");
  for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] -= lr * g.data[i];
}

inline Matrix map(const Matrix& a, const std::function<double(double)>& f) {
  Matrix out = a;
  for (double& v : out.data) v = f(v);
  return out;
}

inline Matrix relu(const Matrix& a) {
  return map(a, [](double v) { return v > 0.0 ? v : 0.0; });
}

/// Subgradient at exactly zero is zero.
inline Matrix relu_grad(const Matrix& pre, const Matrix& upstream) {
  require(pre.same_shape(upstream), "relu_grad");
  Matrix out = upstream;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    if (pre.data[i] <= 0.0) out.data[i] = 0.0;
  return out;
}

inline Matrix sigmoid(const Matrix& a) {
  return map(a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Matrix tanh_m(const Matrix& a) {
  return map(a, [](double v) { return std::tanh(v); });
}

inline std::vector<double> col_sum(const Matrix& a) {
  std::vector<double> s(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) s[j] += a.at(i, j);
  return s;
}

inline std::vector<double> col_mean(const Matrix& a) {
  std::vector<double> s = col_sum(a);
  if (a.rows > 0)
    for (double& v : s) v /= static_cast<double>(a.rows);
  return s;
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

inline bool all_finite(const Matrix& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ccc

#pragma once

#include <optional>
#include <vector>

#include "scalar.hpp"

namespace ncdiff {

using Vec = std::vector<Scalar>;
using Matrix = std::vector<Vec>;

inline Matrix zero_matrix(std::size_t r, std::size_t c) { return Matrix(r, Vec(c, Scalar(0))); }

inline Matrix identity_matrix(std::size_t n) {
  Matrix m = zero_matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) m[k][k] = Scalar(1);
  return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.empty()) return {};
  std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Matrix r = zero_matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      if (a[i][l].is_zero()) continue;
      for (std::size_t j = 0; j < m; ++j)
        if (!b[l][j].is_zero()) r[i][j] += a[i][l] * b[l][j];
    }
  return r;
}

inline Matrix matadd(Matrix a, const Matrix& b, const Scalar& s = Scalar(1)) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += s * b[i][j];
  return a;
}

inline bool is_zero_matrix(const Matrix& a) {
  for (auto& row : a)
    for (auto& x : row)
      if (!x.is_zero()) return false;
  return true;
}

// In-place reduced row echelon form; returns pivot columns.
inline std::vector<std::size_t> rref(Matrix& m) {
  std::vector<std::size_t> pivots;
  if (m.empty()) return pivots;
  std::size_t rows = m.size(), cols = m[0].size(), r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c].is_zero()) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    Scalar inv = m[r][c].inverse();
    for (std::size_t j = c; j < cols; ++j)
      if (!m[r][j].is_zero()) m[r][j] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c].is_zero()) continue;
      Scalar f = m[i][c];
      for (std::size_t j = c; j < cols; ++j)
        if (!m[r][j].is_zero()) m[i][j] -= f * m[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

inline std::size_t rank(Matrix m) { return rref(m).size(); }

// Basis of {x : m x = 0}, one vector per free column, in column order.
inline std::vector<Vec> nullspace(Matrix m, std::size_t cols) {
  std::vector<Vec> out;
  if (m.empty()) {
    for (std::size_t c = 0; c < cols; ++c) {
      Vec v(cols, Scalar(0));
      v[c] = Scalar(1);
      out.push_back(v);
    }
    return out;
  }
  auto piv = rref(m);
  std::vector<int> is_piv(cols, -1);
  for (std::size_t r = 0; r < piv.size(); ++r) is_piv[piv[r]] = static_cast<int>(r);
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_piv[f] >= 0) continue;
    Vec v(cols, Scalar(0));
    v[f] = Scalar(1);
    for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m[r][f];
    out.push_back(v);
  }
  return out;
}

// A solution of m x = b with free variables set to zero, if one exists.
inline std::optional<Vec> solve(const Matrix& m, const Vec& b, std::size_t cols) {
  Matrix aug = m;
  for (std::size_t i = 0; i < aug.size(); ++i) aug[i].push_back(b[i]);
  auto piv = rref(aug);
  Vec x(cols, Scalar(0));
  for (std::size_t r = 0; r < piv.size(); ++r) {
    if (piv[r] == cols) return std::nullopt;
    x[piv[r]] = aug[r][cols];
  }
  return x;
}

inline std::optional<Matrix> inverse(const Matrix& m) {
  std::size_t n = m.size();
  Matrix aug = m;
  for (std::size_t i = 0; i < n; ++i) {
    aug[i].resize(2 * n, Scalar(0));
    aug[i][n + i] = Scalar(1);
  }
  auto piv = rref(aug);
  if (piv.size() < n || piv[n - 1] != n - 1) return std::nullopt;
  Matrix r = zero_matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r[i][j] = aug[i][n + j];
  return r;
}

}  // namespace ncdiff

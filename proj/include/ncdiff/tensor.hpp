#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "expression.hpp"

namespace ncdiff {

// Coefficient algebra element: polynomial in the coordinates with Scalar
// coefficients. For the constants backend it only has a constant term.
using AElem = MultiPoly<Scalar>;

using Idx = std::vector<int>;

inline Idx cat(const Idx& a, const Idx& b) {
  Idx r = a;
  r.insert(r.end(), b.begin(), b.end());
  return r;
}
inline Idx cat(const Idx& a, int x) {
  Idx r = a;
  r.push_back(x);
  return r;
}
inline Idx cat(int x, const Idx& a) {
  Idx r{x};
  r.insert(r.end(), a.begin(), a.end());
  return r;
}
inline Idx slice(const Idx& a, std::size_t from, std::size_t to) {
  return Idx(a.begin() + static_cast<long>(from), a.begin() + static_cast<long>(to));
}
inline Idx reversed(Idx a) {
  std::reverse(a.begin(), a.end());
  return a;
}

// Finitely supported map from multi-indices to A-elements. The meaning of the
// index slots (forms, vector fields, module basis) is fixed by the operation
// producing the tensor. Index length doubles as grade inside a DiffOp.
class Tensor {
 public:
  using Map = std::map<Idx, AElem>;

  Tensor() = default;
  static Tensor basis(const Idx& i, const AElem& c = AElem(Scalar(1))) {
    Tensor t;
    t.add(i, c);
    return t;
  }
  static Tensor scalar(const AElem& a) { return basis(Idx{}, a); }

  const Map& terms() const { return m_; }
  bool is_zero() const { return m_.empty(); }
  std::size_t size() const { return m_.size(); }

  AElem at(const Idx& i) const {
    auto it = m_.find(i);
    return it == m_.end() ? AElem() : it->second;
  }

  void add(const Idx& i, const AElem& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = m_.try_emplace(i, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) m_.erase(it);
    }
  }

  Tensor& operator+=(const Tensor& o) {
    for (auto& [i, c] : o.m_) add(i, c);
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    for (auto& [i, c] : o.m_) add(i, -c);
    return *this;
  }
  Tensor operator-() const {
    Tensor r;
    for (auto& [i, c] : m_) r.m_.emplace(i, -c);
    return r;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

  Tensor scaled(const AElem& a) const {
    Tensor r;
    if (a.is_zero()) return r;
    for (auto& [i, c] : m_) r.add(i, c * a);
    return r;
  }
  friend Tensor operator*(const AElem& a, const Tensor& t) { return t.scaled(a); }

  // Part whose index has length n.
  Tensor grade(std::size_t n) const {
    Tensor r;
    for (auto& [i, c] : m_)
      if (i.size() == n) r.m_.emplace(i, c);
    return r;
  }
  int top_grade() const {
    int g = -1;
    for (auto& [i, c] : m_) g = std::max(g, static_cast<int>(i.size()));
    return g;
  }

  // Reindex every term; f may merge terms.
  template <class F>
  Tensor reindex(F&& f) const {
    Tensor r;
    for (auto& [i, c] : m_) r.add(f(i), c);
    return r;
  }

  template <class F>
  Tensor map_coeffs(F&& f) const {
    Tensor r;
    for (auto& [i, c] : m_) r.add(i, f(c));
    return r;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.m_ == b.m_; }
  friend bool operator!=(const Tensor& a, const Tensor& b) { return !(a == b); }

 private:
  Map m_;
};

// Tensor product of index maps: concatenated indices, multiplied coefficients.
inline Tensor outer(const Tensor& a, const Tensor& b) {
  Tensor r;
  for (auto& [i, c] : a.terms())
    for (auto& [j, d] : b.terms()) r.add(cat(i, j), c * d);
  return r;
}

inline AElem aconst(const Scalar& s) { return AElem(s); }

}  // namespace ncdiff

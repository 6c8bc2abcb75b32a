#pragma once

#include <ostream>
#include <random>
#include <string>

#include "ncdiff/builtins.hpp"
#include "ncdiff/diffop.hpp"

namespace ncdiff {

// Readable gtest failure output; coefficient variables print as p0.. (parameters)
// and c0.. (coordinates).
inline void PrintTo(const Tensor& t, std::ostream* os) {
  std::vector<std::string> names;
  for (int k = 0; k < 8; ++k) names.push_back("p" + std::to_string(k));
  for (int k = 0; k < 4; ++k) names.push_back("c" + std::to_string(k));
  if (t.is_zero()) *os << "0";
  bool first = true;
  for (auto& [I, a] : t.terms()) {
    if (!first) *os << " + ";
    first = false;
    *os << "(" << render(join_coords(a, 8), names) << ")[";
    for (std::size_t k = 0; k < I.size(); ++k) *os << (k ? "," : "") << I[k];
    *os << "]";
  }
}

inline void PrintTo(const AElem& a, std::ostream* os) { PrintTo(Tensor::scalar(a), os); }

}  // namespace ncdiff

namespace support {

using namespace ncdiff;

inline Tensor T(const Idx& i, const AElem& c = AElem(Scalar(1))) { return Tensor::basis(i, c); }
inline AElem X(const CalculusSpec& s, const std::string& e) { return parse_aelem(e, s); }
inline AElem one() { return AElem(Scalar(1)); }

inline AElem random_poly(std::mt19937& rng, std::size_t ncoords, int maxdeg = 2, int nterms = 3) {
  std::uniform_int_distribution<int> coef(-3, 3);
  AElem a;
  for (int t = 0; t < nterms; ++t) {
    Exponent e(ncoords);
    int left = maxdeg;
    for (auto& x : e) {
      x = std::uniform_int_distribution<int>(0, left)(rng);
      left -= x;
    }
    trim(e);
    a.add_term(e, Scalar(coef(rng)));
  }
  return a;
}

inline DiffOp random_op(std::mt19937& rng, const CalculusSpec& s, int maxgrade = 2) {
  std::uniform_int_distribution<int> pick(0, s.n1 - 1), grade(0, maxgrade);
  DiffOp v;
  for (int k = 0; k < 3; ++k) {
    Idx I(static_cast<std::size_t>(grade(rng)));
    for (auto& x : I) x = pick(rng);
    v.add(I, random_poly(rng, s.algebra.coords.size()));
  }
  return v;
}

inline DiffOp random_homogeneous(std::mt19937& rng, const CalculusSpec& s, int grade) {
  std::uniform_int_distribution<int> pick(0, s.n1 - 1);
  DiffOp v;
  for (int k = 0; k < 2; ++k) {
    Idx I(static_cast<std::size_t>(grade));
    for (auto& x : I) x = pick(rng);
    v.add(I, random_poly(rng, s.algebra.coords.size()));
  }
  return v;
}

inline Tensor random_element(std::mt19937& rng, const CalculusSpec& s, int rank) {
  Tensor e;
  for (int b = 0; b < rank; ++b) e.add({b}, random_poly(rng, s.algebra.coords.size()));
  return e;
}

// Classical oracle: a u_I acts on functions as a * d/dx_{I_1} ... d/dx_{I_n}.
inline AElem classical_apply(const DiffOp& v, const AElem& f) {
  AElem r;
  for (auto& [I, a] : v.terms()) {
    AElem g = f;
    for (int i : I) g = g.diff(static_cast<std::size_t>(i));
    r += a * g;
  }
  return r;
}

// Classical plane with a polynomial, non-flat christoffel table.
inline CalculusSpec curved_plane() {
  CalculusSpec s = classical_plane();
  (*s.gamma)[0][0][1] = X(s, "x");
  (*s.gamma)[0][1][1] = X(s, "2*y^2 - 1");
  (*s.gamma)[1][0][0] = X(s, "x*y");
  (*s.gamma)[1][1][0] = X(s, "3");
  return s;
}

// Flat rank-2 module: gauge transform of the trivial one by [[1, xy], [0, 1]].
inline ModuleConnection gauge_module(const CalculusSpec& s) {
  ModuleConnection m;
  m.name = "gauge";
  m.rank = 2;
  m.nabla = {T({0, 1}, X(s, "y")) + T({1, 1}, X(s, "x")), Tensor()};
  return with_flip_sigma(m, s.n1);
}

inline ModuleConnection curved_line(const CalculusSpec& s) {
  ModuleConnection m;
  m.name = "curved";
  m.rank = 1;
  m.nabla = {T({0, 0}, X(s, "y"))};
  return m;
}

}  // namespace support

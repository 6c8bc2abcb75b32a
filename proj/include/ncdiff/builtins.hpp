#pragma once

#include <map>
#include <string>

#include "calculus.hpp"

namespace ncdiff {

namespace detail {

inline std::vector<std::vector<std::vector<Scalar>>> zero3(int a, int b, int c) {
  return std::vector<std::vector<std::vector<Scalar>>>(
      a, std::vector<std::vector<Scalar>>(b, std::vector<Scalar>(c, Scalar(0))));
}

inline std::vector<std::vector<std::vector<AElem>>> zero_gamma(int n) {
  return std::vector<std::vector<std::vector<AElem>>>(
      n, std::vector<std::vector<AElem>>(n, std::vector<AElem>(n)));
}

inline std::vector<std::vector<AElem>> flip_sigma(int n) {
  std::vector<std::vector<AElem>> S(n * n, std::vector<AElem>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S[i * n + j][j * n + i] = AElem(Scalar(1));
  return S;
}

inline CalculusSpec plane(const std::string& name, const std::string& x, const std::string& y) {
  CalculusSpec s;
  s.name = name;
  s.algebra.kind = CoeffAlgebra::Kind::polynomial;
  s.algebra.coords = {x, y};
  s.algebra.dcoord = {{AElem(Scalar(1)), AElem()}, {AElem(), AElem(Scalar(1))}};
  s.n1 = 2;
  s.n2 = 1;
  s.omega1 = {"d" + x, "d" + y};
  s.omega2 = {"d" + x + "^d" + y};
  s.vec = {"D" + x, "D" + y};
  s.W = zero3(2, 2, 1);
  s.W[0][1][0] = Scalar(1);
  s.W[1][0][0] = Scalar(-1);
  s.N = {{Scalar(0)}, {Scalar(0)}};
  s.gamma = zero_gamma(2);
  s.sigma_inv = flip_sigma(2);
  return s;
}

}  // namespace detail

// Polynomials in x, y with dx, dy; flat, torsion free, sigma^-1 = flip.
inline CalculusSpec classical_plane() { return detail::plane("classical-plane", "x", "y"); }

// Polynomials in z, zb over Q(i); J dz = i dz, J dzb = -i dzb.
inline CalculusSpec classical_complex_plane() {
  CalculusSpec s = detail::plane("classical-complex-plane", "z", "zb");
  Matrix J = zero_matrix(2, 2);
  J[0][0] = Scalar::imag_unit();
  J[1][1] = -Scalar::imag_unit();
  s.J = J;
  return s;
}

inline const std::vector<std::string>& su2q_param_names() {
  static const std::vector<std::string> names = {"q", "r", "mu_p", "mu_m", "n_p", "n_m", "m_p", "m_m"};
  return names;
}

// Parameter bindings by name, values are expressions in the su2q parameters.
using Bindings = std::map<std::string, Scalar>;

inline std::map<std::size_t, Scalar> index_bindings(const CalculusSpec& s, const Bindings& b) {
  std::map<std::size_t, Scalar> out;
  for (auto& [k, v] : b) out[s.param_index(k)] = v;
  return out;
}

inline Bindings parse_bindings(const std::map<std::string, std::string>& text,
                               const std::vector<std::string>& names) {
  Bindings b;
  for (auto& [k, v] : text) {
    if (std::find(names.begin(), names.end(), k) == names.end())
      throw SpecError("unknown parameter '" + k + "'");
    b[k] = parse_scalar(v, names);
  }
  return b;
}

// Substitute parameter values into every table of the spec.
inline CalculusSpec specialize(CalculusSpec s, const Bindings& b) {
  if (b.empty()) return s;
  auto m = index_bindings(s, b);
  auto sub = [&](const Scalar& x) { return substitute(x, m); };
  auto suba = [&](const AElem& a) { return a.map_coeffs(sub); };
  for (auto& x : s.W)
    for (auto& y : x)
      for (auto& z : y) z = sub(z);
  for (auto& x : s.N)
    for (auto& y : x) y = sub(y);
  for (auto& x : s.algebra.dcoord)
    for (auto& y : x) y = suba(y);
  if (s.gamma)
    for (auto& x : *s.gamma)
      for (auto& y : x)
        for (auto& z : y) z = suba(z);
  if (s.sigma_inv)
    for (auto& x : *s.sigma_inv)
      for (auto& y : x) y = suba(y);
  if (s.J)
    for (auto& x : *s.J)
      for (auto& y : x) y = sub(y);
  return s;
}

// Left-invariant 3D calculus on SU_2 with basis (e+, e0, e-) and the
// connection family parametrized by r, mu_p, mu_m, n_p, n_m, m_p, m_m.
inline CalculusSpec su2q_3d(const Bindings& b = {}) {
  CalculusSpec s;
  s.name = "su2q";
  s.params = su2q_param_names();
  s.algebra.kind = CoeffAlgebra::Kind::constants;
  s.n1 = 3;
  s.n2 = 3;
  s.omega1 = {"e+", "e0", "e-"};
  s.omega2 = {"e+^e-", "e+^e0", "e-^e0"};
  s.vec = {"u+", "u0", "u-"};
  auto P = [&](const std::string& t) { return parse_scalar(t, s.params); };
  s.W = detail::zero3(3, 3, 3);
  s.W[0][2][0] = Scalar(1);
  s.W[2][0][0] = P("-q^2");
  s.W[0][1][1] = Scalar(1);
  s.W[1][0][1] = P("-q^4");
  s.W[2][1][2] = Scalar(1);
  s.W[1][2][2] = P("-q^-4");
  s.N = {{Scalar(0), P("-q^2*(1+q^-2)"), Scalar(0)},
         {P("q^3"), Scalar(0), Scalar(0)},
         {Scalar(0), Scalar(0), P("q^-2*(1+q^-2)")}};
  auto G = detail::zero_gamma(3);
  G[1][1][1] = AElem(P("r"));
  G[1][0][2] = AElem(P("mu_p"));
  G[1][2][0] = AElem(P("mu_m"));
  G[0][1][0] = AElem(P("n_p"));
  G[0][0][1] = AElem(P("m_p"));
  G[2][1][2] = AElem(P("n_m"));
  G[2][2][1] = AElem(P("m_m"));
  s.gamma = G;
  return specialize(s, b);
}

// Invariant 2D calculus on the standard Podles sphere, without sigma^-1; see
// podles_sphere() in library.hpp for the assembled connection.
inline CalculusSpec podles_sphere_data() {
  CalculusSpec s;
  s.name = "podles";
  s.params = {"q"};
  s.algebra.kind = CoeffAlgebra::Kind::constants;
  s.n1 = 2;
  s.n2 = 1;
  s.omega1 = {"e+", "e-"};
  s.omega2 = {"e+^e-"};
  s.vec = {"v+", "v-"};
  s.W = detail::zero3(2, 2, 1);
  s.W[0][1][0] = Scalar(1);
  s.W[1][0][0] = parse_scalar("-q^2", s.params);
  s.N = {{Scalar(0)}, {Scalar(0)}};
  s.gamma = detail::zero_gamma(2);
  Matrix J = zero_matrix(2, 2);
  J[0][0] = Scalar::imag_unit();
  J[1][1] = -Scalar::imag_unit();
  s.J = J;
  return s;
}

}  // namespace ncdiff

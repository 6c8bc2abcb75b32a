#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "builtins.hpp"
#include "complex.hpp"
#include "diffop.hpp"

namespace ncdiff {

using Su2qConnectionParams = Bindings;

// Podles sphere with sigma^-1 assembled from the flat sector connections.
inline CalculusSpec podles_sphere() { return nice_connection(podles_sphere_data(), HoloConnectionPair{}); }

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"classical-plane", "classical-complex-plane", "su2q", "podles"};
  return names;
}

inline CalculusSpec builtin(const std::string& name, const Bindings& b = {}) {
  if (name == "classical-plane") return classical_plane();
  if (name == "classical-complex-plane") return classical_complex_plane();
  if (name == "su2q") return su2q_3d(b);
  if (name == "podles") return podles_sphere();
  throw SpecError("unknown builtin '" + name + "'");
}

// --- curvature on Omega^1 ----------------------------------------------------------

// R(e_a) for every basis element, keys {k, b}.
inline std::vector<Tensor> omega1_curvature(const CalculusSpec& s) {
  ModuleConnection E = omega1_module(s);
  std::vector<Tensor> out;
  for (int a = 0; a < s.n1; ++a) out.push_back(module_curvature(s, E, Tensor::basis({a})));
  return out;
}

struct CurvatureCoefficient {
  int basis;
  Idx key;
  AElem value;
};

inline std::vector<CurvatureCoefficient> curvature_coefficients(const CalculusSpec& s) {
  std::vector<CurvatureCoefficient> out;
  auto R = omega1_curvature(s);
  for (int a = 0; a < s.n1; ++a)
    for (auto& [I, c] : R[a].terms()) out.push_back({a, I, c});
  return out;
}

inline bool is_flat(const CalculusSpec& s) { return curvature_coefficients(s).empty(); }

// --- zero curvature cases ----------------------------------------------------------

struct FlatCase {
  std::string label;
  Bindings bindings;
  std::vector<std::string> free;
  // Printed constraints the bindings cannot express.
  std::vector<std::string> unmet;
};

inline std::vector<std::string> su2q_connection_names() {
  auto n = su2q_param_names();
  return {n.begin() + 1, n.end()};
}

namespace detail {

inline Scalar su2q(const std::string& t) { return parse_scalar(t, su2q_param_names()); }

inline std::vector<std::string> unbound(const Bindings& b) {
  std::vector<std::string> out;
  for (auto& n : su2q_connection_names())
    if (!b.count(n)) out.push_back(n);
  return out;
}

}  // namespace detail

// The four cases as printed; (d) verbatim.
inline std::vector<FlatCase> su2q_flat_cases() {
  using detail::su2q;
  std::vector<FlatCase> out;
  {
    FlatCase c{"a", {}, {}, {}};
    for (auto& n : su2q_connection_names()) c.bindings[n] = Scalar(0);
    out.push_back(c);
  }
  {
    FlatCase c{"b", {}, {}, {}};
    c.bindings["n_m"] = su2q("-q^2*(1+q^-2)");
    c.bindings["m_m"] = su2q("q^3*(1+q^-2)/mu_p");
    c.bindings["n_p"] = su2q("q^-2*(1+q^-2)");
    c.bindings["m_p"] = su2q("q*(1+q^-2)/mu_m");
    c.bindings["r"] = Scalar(0);
    c.free = detail::unbound(c.bindings);
    out.push_back(c);
  }
  {
    FlatCase c{"c", {}, {}, {}};
    c.bindings["n_m"] = Scalar(0);
    c.bindings["m_m"] = Scalar(0);
    c.bindings["mu_p"] = Scalar(0);
    c.bindings["n_p"] = su2q("q^-2");
    c.bindings["m_p"] = su2q("q/mu_m");
    c.bindings["r"] = Scalar(-1);
    c.free = detail::unbound(c.bindings);
    out.push_back(c);
  }
  {
    FlatCase c{"d", {}, {}, {}};
    c.bindings["n_p"] = Scalar(0);
    c.bindings["m_p"] = Scalar(0);
    c.bindings["mu_p"] = Scalar(0);
    c.bindings["n_m"] = Scalar(-1);
    c.bindings["r"] = su2q("q^-2");
    c.free = detail::unbound(c.bindings);
    c.unmet = {"-1 = -mu_p*m_m*q^-1"};
    out.push_back(c);
  }
  return out;
}

inline CalculusSpec su2q_case_spec(const FlatCase& c) { return su2q_3d(c.bindings); }

namespace detail {

// num = A*x_v + B with B free of x_v, when num has degree one in x_v.
inline std::optional<Scalar> solve_linear(const Scalar& c, std::size_t v) {
  if (c.den().contains_var(v) || c.num().degree_in(v) != 1) return std::nullopt;
  Poly A, B;
  for (auto& [e, k] : c.num().terms()) {
    Exponent f = e;
    if (f.size() > v && f[v] == 1) {
      f[v] = 0;
      A += Poly::monomial(f, k);
    } else {
      B += Poly::monomial(f, k);
    }
  }
  return -Scalar(B) / Scalar(A);
}

inline void bind(Bindings& b, const std::string& name, const Scalar& value, const CalculusSpec& s) {
  std::map<std::size_t, Scalar> one{{s.param_index(name), value}};
  for (auto& [k, v] : b) v = substitute(v, one);
  b[name] = value;
}

}  // namespace detail

// Drive the curvature to zero by repeatedly solving a coefficient that is
// linear in one unbound connection parameter.
inline std::optional<FlatCase> solve_flat(FlatCase c) {
  CalculusSpec generic = su2q_3d();
  for (int step = 0; step < 8; ++step) {
    auto coeffs = curvature_coefficients(su2q_3d(c.bindings));
    if (coeffs.empty()) {
      c.free = detail::unbound(c.bindings);
      c.unmet.clear();
      return c;
    }
    bool progressed = false;
    for (auto& cc : coeffs) {
      Scalar x = cc.value.constant_term();
      for (auto& n : detail::unbound(c.bindings)) {
        auto sol = detail::solve_linear(x, generic.param_index(n));
        if (!sol) continue;
        detail::bind(c.bindings, n, *sol, generic);
        progressed = true;
        break;
      }
      if (progressed) break;
    }
    if (!progressed) return std::nullopt;
  }
  return std::nullopt;
}

struct CorrectedCase {
  std::string released;  // the zero assignment dropped from the printed case
  FlatCase solved;
};

// Release one zero assignment of the printed (d) at a time and solve.
inline std::vector<CorrectedCase> search_corrected_case_d() {
  FlatCase d = su2q_flat_cases()[3];
  std::vector<CorrectedCase> out;
  for (auto& z : {"n_p", "m_p", "mu_p"}) {
    FlatCase c = d;
    c.bindings.erase(z);
    c.unmet.clear();
    if (auto r = solve_flat(c)) {
      r->label = "d'";
      out.push_back({z, *r});
    }
  }
  return out;
}

struct FlatVerdict {
  std::string label;
  bool flat;
  std::vector<CurvatureCoefficient> surviving;
};

inline FlatVerdict check_flat_case(const FlatCase& c) {
  auto coeffs = curvature_coefficients(su2q_case_spec(c));
  return {c.label, coeffs.empty() && c.unmet.empty(), coeffs};
}

// --- matrix representation ---------------------------------------------------------

// M_i[b][a] = coefficient of e_b in u_i |> e_a, read off from Gamma.
inline std::vector<Matrix> matrix_rep(const CalculusSpec& s) {
  const auto& G = need_gamma(s);
  if (s.algebra.kind != CoeffAlgebra::Kind::constants) throw SpecError("matrix representation needs constant Gamma");
  std::vector<Matrix> M(s.n1, zero_matrix(s.n1, s.n1));
  for (int i = 0; i < s.n1; ++i)
    for (int a = 0; a < s.n1; ++a)
      for (int b = 0; b < s.n1; ++b) M[i][b][a] = G[a][i][b].constant_term();
  return M;
}

inline std::vector<Matrix> su2q_matrix_rep(const Su2qConnectionParams& p = {}) { return matrix_rep(su2q_3d(p)); }

// --- relations as words ------------------------------------------------------------

struct RelationWord {
  Scalar coeff;
  Idx word;  // u_{w0} . u_{w1} . ...
};

// sum_i N[i][k] u_i - sum_ij W[i][j][k] u_j . u_i
inline std::vector<std::vector<RelationWord>> relation_words(const CalculusSpec& s) {
  std::vector<std::vector<RelationWord>> out(s.n2);
  for (int k = 0; k < s.n2; ++k) {
    for (int i = 0; i < s.n1; ++i)
      if (!s.N[i][k].is_zero()) out[k].push_back({s.N[i][k], {i}});
    for (int i = 0; i < s.n1; ++i)
      for (int j = 0; j < s.n1; ++j)
        if (!s.W[i][j][k].is_zero()) out[k].push_back({-s.W[i][j][k], {j, i}});
  }
  return out;
}

inline DiffOp expand_words(const CalculusSpec& s, const std::vector<RelationWord>& words) {
  DiffOp r;
  for (auto& w : words) {
    DiffOp p = vec_field(w.word[0]);
    for (std::size_t m = 1; m < w.word.size(); ++m) p = bullet(s, p, vec_field(w.word[m]));
    r += p.scaled(AElem(w.coeff));
  }
  return r;
}

inline Matrix word_matrix(const std::vector<Matrix>& rep, const std::vector<RelationWord>& words) {
  std::size_t n = rep.at(0).size();
  Matrix acc = zero_matrix(n, n);
  for (auto& w : words) {
    Matrix p = identity_matrix(n);
    for (int i : w.word) p = matmul(p, rep.at(i));
    acc = matadd(acc, p, w.coeff);
  }
  return acc;
}

// a = c b with c free of the given variables.
inline bool proportional(const Scalar& a, const Scalar& b, const std::vector<std::size_t>& vars) {
  if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
  Scalar c = a / b;
  for (auto v : vars)
    if (c.depends_on(v)) return false;
  return true;
}

// Nonzero entries of the substituted relations, one per proportionality class.
inline std::vector<Scalar> derive_consistency_equations(const CalculusSpec& s, const std::vector<Matrix>& rep,
                                                        const std::vector<std::size_t>& unknowns) {
  std::vector<Scalar> out;
  for (auto& words : relation_words(s)) {
    Matrix m = word_matrix(rep, words);
    for (auto& row : m)
      for (auto& x : row) {
        if (x.is_zero()) continue;
        bool seen = false;
        for (auto& y : out) seen = seen || proportional(x, y, unknowns);
        if (!seen) out.push_back(x);
      }
  }
  return out;
}

inline std::vector<std::size_t> su2q_unknowns() {
  CalculusSpec s = su2q_3d();
  std::vector<std::size_t> v;
  for (auto& n : su2q_connection_names()) v.push_back(s.param_index(n));
  return v;
}

inline std::vector<Scalar> su2q_consistency_equations(const Su2qConnectionParams& p = {}) {
  CalculusSpec s = su2q_3d();
  auto eqs = derive_consistency_equations(s, matrix_rep(s), su2q_unknowns());
  if (p.empty()) return eqs;
  auto m = index_bindings(s, p);
  for (auto& e : eqs) e = substitute(e, m);
  return eqs;
}

inline std::vector<Scalar> su2q_golden_equations() {
  using detail::su2q;
  return {su2q("m_p*mu_m - n_p*q^3"),
          su2q("m_m*mu_p - m_p*mu_m*q^2 - q^3*r"),
          su2q("m_m*mu_p + n_m*q"),
          su2q("m_p*(-1 - q^2 + n_p*q^4 - r)"),
          su2q("mu_p*(1 + n_m + q^2 - q^4*r)"),
          su2q("mu_m*(-1 - q^2 + n_p*q^4 - r)"),
          su2q("m_m*(1 + n_m + q^2 - q^4*r)")};
}

// Equal as sets up to ordering and multiples free of the unknowns.
inline bool same_up_to_scalars(const std::vector<Scalar>& a, const std::vector<Scalar>& b,
                               const std::vector<std::size_t>& unknowns) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (auto& x : a) {
    bool hit = false;
    for (std::size_t k = 0; k < b.size() && !hit; ++k)
      if (!used[k] && proportional(x, b[k], unknowns)) used[k] = hit = true;
    if (!hit) return false;
  }
  return true;
}

}  // namespace ncdiff

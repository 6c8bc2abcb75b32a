#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tensor.hpp"

namespace ncdiff {

struct CoeffAlgebra {
  enum class Kind { constants, polynomial };
  Kind kind = Kind::constants;
  std::vector<std::string> coords;
  // d(x_v) = sum_k dcoord[v][k] xi_k
  std::vector<std::vector<AElem>> dcoord;
};

// A differential calculus given by structure constants over a free Omega^1.
//   xi_i ^ xi_j = sum_k W[i][j][k] omega_k
//   d xi_i      = sum_k N[i][k] omega_k
//   box xi_k    = sum_ij gamma[k][i][j] xi_i (x) xi_j
//   sigma^-1(xi_i (x) xi_j) = sum_ab sigma_inv[i*n1+j][a*n1+b] xi_a (x) xi_b
//   J xi_i      = sum_j J[i][j] xi_j
struct CalculusSpec {
  std::string name;
  std::vector<std::string> params;
  CoeffAlgebra algebra;
  int n1 = 0;
  int n2 = 0;
  std::vector<std::string> omega1;
  std::vector<std::string> omega2;
  std::vector<std::string> vec;
  std::vector<std::vector<std::vector<Scalar>>> W;
  std::vector<std::vector<Scalar>> N;
  std::optional<std::vector<std::vector<std::vector<AElem>>>> gamma;
  std::optional<std::vector<std::vector<AElem>>> sigma_inv;
  std::optional<Matrix> J;

  std::size_t pair(int i, int j) const { return static_cast<std::size_t>(i * n1 + j); }
  std::vector<std::string> all_names() const {
    std::vector<std::string> r = params;
    r.insert(r.end(), algebra.coords.begin(), algebra.coords.end());
    return r;
  }
  std::size_t param_index(const std::string& p) const {
    for (std::size_t k = 0; k < params.size(); ++k)
      if (params[k] == p) return k;
    throw SpecError("unknown parameter '" + p + "'");
  }
};

// --- A-elements as text -----------------------------------------------------

// Split a Scalar over params ++ coords into a polynomial in the coords.
inline AElem split_coords(const Scalar& s, std::size_t np, std::size_t nc) {
  for (std::size_t v = np; v < np + nc; ++v)
    if (s.den().contains_var(v)) throw SpecError("coordinate in a denominator");
  Scalar inv_den(Poly(GaussianRational(1)), s.den());
  AElem out;
  for (auto& [e, c] : s.num().terms()) {
    Exponent pe(e.begin(), e.begin() + static_cast<long>(std::min(e.size(), np)));
    Exponent ce;
    if (e.size() > np) ce.assign(e.begin() + static_cast<long>(np), e.end());
    trim(pe);
    trim(ce);
    out.add_term(ce, Scalar(Poly::monomial(pe, c)) * inv_den);
  }
  return out;
}

inline Scalar join_coords(const AElem& a, std::size_t np) {
  Scalar out;
  for (auto& [e, c] : a.terms()) {
    Exponent ce(np, 0);
    ce.insert(ce.end(), e.begin(), e.end());
    trim(ce);
    out += c * Scalar(Poly::monomial(ce, GaussianRational(1)));
  }
  return out;
}

inline AElem parse_aelem(const std::string& text, const CalculusSpec& s) {
  return split_coords(parse_scalar(text, s.all_names()), s.params.size(), s.algebra.coords.size());
}

inline std::string render_aelem(const AElem& a, const CalculusSpec& s) {
  return render(join_coords(a, s.params.size()), s.all_names());
}

inline std::string render_scalar(const Scalar& x, const CalculusSpec& s) { return render(x, s.params); }

// --- basic maps ---------------------------------------------------------------

inline AElem partial(const AElem& a, std::size_t v) { return a.diff(v); }

// da as an Omega^1 tensor {k}.
inline Tensor d0(const CalculusSpec& s, const AElem& a) {
  Tensor r;
  if (s.algebra.kind == CoeffAlgebra::Kind::constants) return r;
  for (std::size_t v = 0; v < s.algebra.coords.size(); ++v) {
    AElem da = a.diff(v);
    if (da.is_zero()) continue;
    for (int k = 0; k < s.n1; ++k) r.add({k}, da * s.algebra.dcoord[v][k]);
  }
  return r;
}

// ev^<n>(v (x) w) with ev(u_I (x) xi_J) = prod_k delta(I_k, J_{n+1-k}).
inline AElem ev_n(const Tensor& v, const Tensor& w) {
  AElem r;
  for (auto& [I, a] : v.terms()) {
    AElem b = w.at(reversed(I));
    if (!b.is_zero()) r += a * b;
  }
  return r;
}

// Contract the vector slot `vslot` of t against the form slot `fslot`; both are
// removed from the index.
inline Tensor contract(const Tensor& t, std::size_t vslot, std::size_t fslot) {
  Tensor r;
  for (auto& [I, a] : t.terms()) {
    if (I[vslot] != I[fslot]) continue;
    Idx J;
    for (std::size_t k = 0; k < I.size(); ++k)
      if (k != vslot && k != fslot) J.push_back(I[k]);
    r.add(J, a);
  }
  return r;
}

inline AElem directional(const CalculusSpec& s, const Tensor& u, const AElem& a) { return ev_n(u, d0(s, a)); }

// Apply the wedge to slots (slot, slot+1); the omega index takes their place.
inline Tensor wedge_at(const CalculusSpec& s, const Tensor& t, std::size_t slot) {
  Tensor r;
  for (auto& [I, a] : t.terms()) {
    const auto& w = s.W[I[slot]][I[slot + 1]];
    for (int k = 0; k < s.n2; ++k) {
      if (w[k].is_zero()) continue;
      Idx J = slice(I, 0, slot);
      J.push_back(k);
      J.insert(J.end(), I.begin() + static_cast<long>(slot) + 2, I.end());
      r.add(J, a * aconst(w[k]));
    }
  }
  return r;
}

// d on Omega^1: d(xi a) = d(xi) a - xi ^ da.
inline Tensor d1(const CalculusSpec& s, const Tensor& xi) {
  Tensor r;
  for (auto& [I, a] : xi.terms()) {
    int i = I[0];
    for (int k = 0; k < s.n2; ++k)
      if (!s.N[i][k].is_zero()) r.add({k}, a * aconst(s.N[i][k]));
    r -= wedge_at(s, outer(Tensor::basis({i}), d0(s, a)), 0);
  }
  return r;
}

inline const std::vector<std::vector<std::vector<AElem>>>& need_gamma(const CalculusSpec& s) {
  if (!s.gamma) throw SpecError("calculus '" + s.name + "' has no connection (christoffel data)");
  return *s.gamma;
}

// box on Omega^1: box(xi_k a) = box(xi_k) a + xi_k (x) da.
inline Tensor box_form(const CalculusSpec& s, const Tensor& xi) {
  const auto& G = need_gamma(s);
  Tensor r;
  for (auto& [I, a] : xi.terms()) {
    int k = I[0];
    for (int i = 0; i < s.n1; ++i)
      for (int j = 0; j < s.n1; ++j)
        if (!G[k][i][j].is_zero()) r.add({i, j}, G[k][i][j] * a);
    r += outer(Tensor::basis({k}), d0(s, a));
  }
  return r;
}

// sigma^-1 on form slots (slot, slot+1). Only demanded on nonzero input.
inline Tensor apply_sigma_inv(const CalculusSpec& s, const Tensor& t, std::size_t slot) {
  if (t.is_zero()) return t;
  if (!s.sigma_inv) throw sigma_required("calculus '" + s.name + "' has no sigma^-1");
  const auto& S = *s.sigma_inv;
  Tensor r;
  for (auto& [I, a] : t.terms()) {
    const auto& row = S[s.pair(I[slot], I[slot + 1])];
    for (int x = 0; x < s.n1; ++x)
      for (int y = 0; y < s.n1; ++y) {
        const AElem& c = row[s.pair(x, y)];
        if (c.is_zero()) continue;
        Idx J = I;
        J[slot] = x;
        J[slot + 1] = y;
        r.add(J, a * c);
      }
  }
  return r;
}

// box^<n>(xi_I) for a basis element of Omega^{(x)n}.
inline Tensor box_forms_basis(const CalculusSpec& s, const Idx& I) {
  if (I.empty()) return Tensor();
  Idx head = slice(I, 0, I.size() - 1);
  int k = I.back();
  Tensor r = outer(Tensor::basis(head), box_form(s, Tensor::basis({k})));
  Tensor lower = box_forms_basis(s, head);
  if (!lower.is_zero()) r += apply_sigma_inv(s, outer(lower, Tensor::basis({k})), I.size() - 1);
  return r;
}

// box^<n> on Omega^{(x)n}, with box^<0> = d.
inline Tensor square_forms_n(const CalculusSpec& s, const Tensor& w) {
  Tensor r;
  for (auto& [I, a] : w.terms()) {
    r += box_forms_basis(s, I).scaled(a);
    r += outer(Tensor::basis(I), d0(s, a));
  }
  return r;
}

// sigma^-<n> on Omega^{(x)(n+1)}: sigma^-1 on slots (0,1), then (1,2), ...
inline Tensor sigma_inv_n(const CalculusSpec& s, Tensor t, int n) {
  for (int k = 0; k < n; ++k) t = apply_sigma_inv(s, t, static_cast<std::size_t>(k));
  return t;
}

// --- vector fields ------------------------------------------------------------

// box u_c = -sum_{b,i} gamma[b][c][i] xi_i (x) u_b, extended by box(a.u) = da (x) u + a box(u).
inline Tensor box_vec(const CalculusSpec& s, const Tensor& u) {
  const auto& G = need_gamma(s);
  Tensor r;
  for (auto& [I, a] : u.terms()) {
    int c = I[0];
    for (int b = 0; b < s.n1; ++b)
      for (int i = 0; i < s.n1; ++i)
        if (!G[b][c][i].is_zero()) r.add({i, b}, -(G[b][c][i] * a));
    r += outer(d0(s, a), Tensor::basis({c}));
  }
  return r;
}

// sigma(u_c (x) xi_d) = sum_{e,b} S[(d,e)][(c,b)] xi_b (x) u_e, on slots (slot, slot+1).
inline Tensor apply_sigma(const CalculusSpec& s, const Tensor& t, std::size_t slot) {
  if (t.is_zero()) return t;
  if (!s.sigma_inv) throw sigma_required("calculus '" + s.name + "' has no sigma^-1 (needed for sigma)");
  const auto& S = *s.sigma_inv;
  Tensor r;
  for (auto& [I, a] : t.terms()) {
    int c = I[slot], d = I[slot + 1];
    for (int e = 0; e < s.n1; ++e) {
      const auto& row = S[s.pair(d, e)];
      for (int b = 0; b < s.n1; ++b) {
        const AElem& x = row[s.pair(c, b)];
        if (x.is_zero()) continue;
        Idx J = I;
        J[slot] = b;
        J[slot + 1] = e;
        r.add(J, a * x);
      }
    }
  }
  return r;
}

// box^<n>(u_J) for a basis element of Vec^{(x)n}.
inline Tensor box_vec_basis(const CalculusSpec& s, const Idx& J) {
  if (J.empty()) return Tensor();
  Idx tail = slice(J, 1, J.size());
  Tensor r = outer(box_vec(s, Tensor::basis({J[0]})), Tensor::basis(tail));
  Tensor lower = box_vec_basis(s, tail);
  if (!lower.is_zero()) r += apply_sigma(s, outer(Tensor::basis({J[0]}), lower), 0);
  return r;
}

// box^<n> on Vec^{(x)n} -> Omega^1 (x) Vec^{(x)n}; box^<0> = d. Coefficients sit
// on the leftmost factor.
inline Tensor square_vec_n(const CalculusSpec& s, const Tensor& v) {
  Tensor r;
  for (auto& [J, a] : v.terms()) {
    r += box_vec_basis(s, J).scaled(a);
    r += outer(d0(s, a), Tensor::basis(J));
  }
  return r;
}

// Torsion d + ^ box on Omega^1.
inline Tensor torsion(const CalculusSpec& s, const Tensor& xi) {
  return d1(s, xi) + wedge_at(s, box_form(s, xi), 0);
}

// --- modules --------------------------------------------------------------------

// Free left module with left connection nabla e_a = sum nabla[a]{k,b} xi_k (x) e_b.
// sigma_E(e_a (x) xi_d) = sigma_E[a][d]{b,c} xi_b (x) e_c.
struct ModuleConnection {
  std::string name;
  int rank = 1;
  std::vector<Tensor> nabla;
  std::optional<std::vector<std::vector<Tensor>>> sigma_E;
};

inline ModuleConnection trivial_module(const std::string& name = "A") {
  ModuleConnection m;
  m.name = name;
  m.rank = 1;
  m.nabla = {Tensor()};
  return m;
}

// Omega^1 as a left module, connection from the christoffel data.
inline ModuleConnection omega1_module(const CalculusSpec& s) {
  const auto& G = need_gamma(s);
  ModuleConnection m;
  m.name = "Omega1";
  m.rank = s.n1;
  m.nabla.assign(s.n1, Tensor());
  for (int k = 0; k < s.n1; ++k)
    for (int i = 0; i < s.n1; ++i)
      for (int j = 0; j < s.n1; ++j) m.nabla[k].add({i, j}, G[k][i][j]);
  return m;
}

inline ModuleConnection with_flip_sigma(ModuleConnection m, int n1) {
  std::vector<std::vector<Tensor>> sg(m.rank, std::vector<Tensor>(n1));
  for (int a = 0; a < m.rank; ++a)
    for (int d = 0; d < n1; ++d) sg[a][d] = Tensor::basis({d, a});
  m.sigma_E = sg;
  return m;
}

// nabla_E on a module element {b}: nabla(f e_b) = df (x) e_b + f nabla e_b.
inline Tensor nabla_module(const CalculusSpec& s, const ModuleConnection& E, const Tensor& e) {
  Tensor r;
  for (auto& [I, f] : e.terms()) {
    r += outer(d0(s, f), Tensor::basis(I));
    r += E.nabla[I[0]].scaled(f);
  }
  return r;
}

// nabla^(n) e in Omega^{(x)n} (x) E, keys {i_1..i_n, b}.
inline Tensor nabla_iter(const CalculusSpec& s, const ModuleConnection& E, int n, const Tensor& e) {
  Tensor cur = e;
  for (int m = 0; m < n; ++m) {
    Tensor next;
    for (auto& [I, f] : cur.terms()) {
      Idx forms = slice(I, 0, I.size() - 1);
      int b = I.back();
      Tensor fe = Tensor::basis({b}, f);
      if (!forms.empty()) {
        Tensor bx = box_forms_basis(s, forms);
        if (!bx.is_zero()) next += outer(bx, fe);
      }
      next += outer(Tensor::basis(forms), nabla_module(s, E, fe));
    }
    cur = std::move(next);
  }
  return cur;
}

// R_E(e) = (d (x) id - id ^ nabla) nabla e, keys {k, b}.
inline Tensor module_curvature(const CalculusSpec& s, const ModuleConnection& E, const Tensor& e) {
  Tensor r;
  Tensor ne = nabla_module(s, E, e);
  for (auto& [I, f] : ne.terms()) {
    int i = I[0], b = I[1];
    Tensor fe = Tensor::basis({b}, f);
    r += outer(d1(s, Tensor::basis({i})), fe);
    r -= wedge_at(s, outer(Tensor::basis({i}), nabla_module(s, E, fe)), 0);
  }
  return r;
}

// --- validation ---------------------------------------------------------------

// Coefficient matrix of the wedge: rows omega_k, columns pairs (i,j).
inline Matrix wedge_matrix(const CalculusSpec& s) {
  Matrix m = zero_matrix(s.n2, s.n1 * s.n1);
  for (int i = 0; i < s.n1; ++i)
    for (int j = 0; j < s.n1; ++j)
      for (int k = 0; k < s.n2; ++k) m[k][s.pair(i, j)] = s.W[i][j][k];
  return m;
}

// Spanning set of ker ^ inside Omega^1 (x) Omega^1, as vectors over pairs.
inline std::vector<Vec> wedge_kernel(const CalculusSpec& s) {
  return nullspace(wedge_matrix(s), static_cast<std::size_t>(s.n1 * s.n1));
}

// J (x) id + id (x) J on pair vectors.
inline Vec j_pair(const CalculusSpec& s, const Vec& x) {
  const Matrix& J = *s.J;
  Vec r(x.size(), Scalar(0));
  for (int i = 0; i < s.n1; ++i)
    for (int j = 0; j < s.n1; ++j) {
      const Scalar& c = x[s.pair(i, j)];
      if (c.is_zero()) continue;
      for (int a = 0; a < s.n1; ++a) {
        if (!J[i][a].is_zero()) r[s.pair(a, j)] += c * J[i][a];
        if (!J[j][a].is_zero()) r[s.pair(i, a)] += c * J[j][a];
      }
    }
  return r;
}

inline void check_j(const CalculusSpec& s) {
  if (!s.J) return;
  const Matrix& J = *s.J;
  if (static_cast<int>(J.size()) != s.n1) throw SpecError("J has wrong size");
  Matrix sq = matmul(J, J);
  if (!is_zero_matrix(matadd(sq, identity_matrix(s.n1))))
    throw SpecError("J^2 is not -identity");
  Matrix wm = wedge_matrix(s);
  for (auto& k : wedge_kernel(s)) {
    Vec jk = j_pair(s, k);
    for (int r = 0; r < s.n2; ++r) {
      Scalar acc;
      for (std::size_t c = 0; c < jk.size(); ++c) acc += wm[r][c] * jk[c];
      if (!acc.is_zero()) throw SpecError("J does not descend to Omega^2");
    }
  }
}

inline void validate(const CalculusSpec& s) {
  auto fail = [&](const std::string& m) { throw SpecError(s.name + ": " + m); };
  if (s.n1 <= 0) fail("Omega^1 must be nonempty");
  if (s.n2 < 0) fail("negative Omega^2 dimension");
  if (static_cast<int>(s.omega1.size()) != s.n1 || static_cast<int>(s.vec.size()) != s.n1)
    fail("Omega^1 / Vec names do not match n1");
  if (static_cast<int>(s.omega2.size()) != s.n2) fail("Omega^2 names do not match n2");
  if (static_cast<int>(s.W.size()) != s.n1) fail("wedge table has wrong size");
  for (auto& row : s.W) {
    if (static_cast<int>(row.size()) != s.n1) fail("wedge table has wrong size");
    for (auto& v : row)
      if (static_cast<int>(v.size()) != s.n2) fail("wedge table has wrong size");
  }
  if (static_cast<int>(s.N.size()) != s.n1) fail("d table has wrong size");
  for (auto& v : s.N)
    if (static_cast<int>(v.size()) != s.n2) fail("d table has wrong size");
  if (s.algebra.kind == CoeffAlgebra::Kind::constants && !s.algebra.coords.empty())
    fail("constants backend cannot have coordinates");
  if (s.algebra.dcoord.size() != s.algebra.coords.size()) fail("d-table of coordinates has wrong size");
  for (auto& v : s.algebra.dcoord)
    if (static_cast<int>(v.size()) != s.n1) fail("d-table of coordinates has wrong size");
  for (auto& p : s.params)
    for (auto& c : s.algebra.coords)
      if (p == c) fail("name '" + p + "' is both a parameter and a coordinate");
  if (s.gamma) {
    if (static_cast<int>(s.gamma->size()) != s.n1) fail("christoffel table has wrong size");
    for (auto& a : *s.gamma) {
      if (static_cast<int>(a.size()) != s.n1) fail("christoffel table has wrong size");
      for (auto& b : a)
        if (static_cast<int>(b.size()) != s.n1) fail("christoffel table has wrong size");
    }
  }
  if (s.sigma_inv) {
    if (static_cast<int>(s.sigma_inv->size()) != s.n1 * s.n1) fail("sigma_inv table has wrong size");
    for (auto& r : *s.sigma_inv)
      if (static_cast<int>(r.size()) != s.n1 * s.n1) fail("sigma_inv table has wrong size");
  }
  check_j(s);
}

}  // namespace ncdiff

#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "calculus.hpp"

namespace ncdiff {

// Element of TVec A: keys are vector-field indices u_J, the key length is the
// grade and coefficients sit on the left.
using DiffOp = Tensor;

inline DiffOp vec_field(int i, const AElem& a = AElem(Scalar(1))) { return Tensor::basis({i}, a); }

// --- bullet product -------------------------------------------------------------

class BulletEngine {
 public:
  explicit BulletEngine(const CalculusSpec& s) : s_(s) {}

  const CalculusSpec& spec() const { return s_; }

  // u_c ._low w = (ev (x) id)(u_c (x) box^<m> w), summed over the grades of w.
  Tensor low(int c, const Tensor& w) {
    Tensor r;
    for (auto& [J, f] : w.terms()) {
      for (auto& [K, g] : box(J).terms())
        if (K[0] == c) r.add(slice(K, 1, K.size()), g * f);
      AElem df = d0(s_, f).at({c});
      if (!df.is_zero()) r.add(J, df);
    }
    return r;
  }

  // u ._low w for a grade-1 u with coefficients.
  Tensor low(const Tensor& u, const Tensor& w) {
    Tensor r;
    for (auto& [I, a] : u.terms()) r += low(I[0], w).scaled(a);
    return r;
  }

  Tensor basis_times(const Idx& I, const Tensor& w) {
    if (I.empty()) return w;
    int c = I[0];
    if (I.size() == 1) return outer(Tensor::basis({c}), w) + low(c, w);
    Idx rest = slice(I, 1, I.size());
    Tensor r = basis_times({c}, basis_times(rest, w));
    Tensor l = low(c, Tensor::basis(rest));
    if (!l.is_zero()) r -= product(l, w);
    return r;
  }

  Tensor product(const Tensor& v, const Tensor& w) {
    Tensor r;
    for (auto& [I, a] : v.terms()) r += basis_times(I, w).scaled(a);
    return r;
  }

 private:
  const Tensor& box(const Idx& J) {
    auto it = memo_.find(J);
    if (it == memo_.end()) it = memo_.emplace(J, box_vec_basis(s_, J)).first;
    return it->second;
  }

  const CalculusSpec& s_;
  std::map<Idx, Tensor> memo_;
};

inline DiffOp bullet(const CalculusSpec& s, const DiffOp& v, const DiffOp& w) {
  BulletEngine eng(s);
  return eng.product(v, w);
}

// --- action on modules ------------------------------------------------------------

// v |> e = sum a_I [nabla^(n) e] paired against u_I.
inline Tensor act(const CalculusSpec& s, const ModuleConnection& E, const DiffOp& v, const Tensor& e) {
  Tensor r;
  int top = v.top_grade();
  Tensor cur = e;
  for (int n = 0; n <= top; ++n) {
    if (n > 0) cur = nabla_iter(s, E, 1, cur);
    Tensor part = v.grade(static_cast<std::size_t>(n));
    for (auto& [I, a] : part.terms()) {
      Idx R = reversed(I);
      for (auto& [K, g] : cur.terms())
        if (std::equal(R.begin(), R.end(), K.begin())) r.add({K.back()}, a * g);
    }
  }
  return r;
}

// nabla(v) = coev(1) . v, keys {i, J...}.
inline Tensor nabla_tvec(const CalculusSpec& s, const DiffOp& v) {
  BulletEngine eng(s);
  Tensor r;
  for (int i = 0; i < s.n1; ++i) r += outer(Tensor::basis({i}), eng.basis_times({i}, v));
  return r;
}

// --- curvature element and relations ----------------------------------------------

// R = sum_k omega_k (x) Rhat_k, keys {k, J...}.
struct CurvatureElement {
  Tensor value;

  DiffOp component(int k) const {
    DiffOp r;
    for (auto& [I, a] : value.terms())
      if (I[0] == k) r.add(slice(I, 1, I.size()), a);
    return r;
  }
};

inline Tensor curvature_bullet_form(const CalculusSpec& s) {
  BulletEngine eng(s);
  Tensor r;
  for (int i = 0; i < s.n1; ++i)
    for (int k = 0; k < s.n2; ++k)
      if (!s.N[i][k].is_zero()) r.add({k, i}, aconst(s.N[i][k]));
  for (int i = 0; i < s.n1; ++i)
    for (int j = 0; j < s.n1; ++j) {
      Tensor ji;
      for (int k = 0; k < s.n2; ++k)
        if (!s.W[i][j][k].is_zero()) ji.add({k}, aconst(s.W[i][j][k]));
      if (ji.is_zero()) continue;
      r -= outer(ji, eng.basis_times({j}, Tensor::basis({i})));
    }
  return r;
}

inline Tensor curvature_torsion_form(const CalculusSpec& s) {
  Tensor r;
  for (int i = 0; i < s.n1; ++i) r += outer(torsion(s, Tensor::basis({i})), Tensor::basis({i}));
  for (int i = 0; i < s.n1; ++i)
    for (int j = 0; j < s.n1; ++j)
      for (int k = 0; k < s.n2; ++k)
        if (!s.W[i][j][k].is_zero()) r.add({k, j, i}, -aconst(s.W[i][j][k]));
  return r;
}

inline CurvatureElement curvature_element(const CalculusSpec& s) {
  Tensor a = curvature_bullet_form(s);
  if (a != curvature_torsion_form(s))
    throw std::logic_error("curvature element: the two closed forms disagree for '" + s.name + "'");
  return {a};
}

// One relation per omega_k: sum_i N[i][k] u_i - sum_ij W[i][j][k] u_j . u_i.
inline std::vector<DiffOp> da_relations(const CalculusSpec& s) {
  CurvatureElement R = curvature_element(s);
  std::vector<DiffOp> out;
  for (int k = 0; k < s.n2; ++k) out.push_back(R.component(k));
  return out;
}

// --- splitting, antisymmetry, phi ----------------------------------------------------

// S[k] in Omega^1 (x) Omega^1, keys {a, b}, with wedge(S[k]) = omega_k.
struct WedgeSplitting {
  std::vector<Tensor> S;
};

inline Tensor pair_vec_to_tensor(const CalculusSpec& s, const Vec& x) {
  Tensor t;
  for (int i = 0; i < s.n1; ++i)
    for (int j = 0; j < s.n1; ++j) t.add({i, j}, aconst(x[s.pair(i, j)]));
  return t;
}

inline WedgeSplitting wedge_splitting(const CalculusSpec& s) {
  Matrix m = wedge_matrix(s);
  std::size_t cols = static_cast<std::size_t>(s.n1 * s.n1);
  if (rank(m) != static_cast<std::size_t>(s.n2)) throw SpecError(s.name + ": wedge is not surjective");
  WedgeSplitting out;
  for (int k = 0; k < s.n2; ++k) {
    Vec rhs(static_cast<std::size_t>(s.n2), Scalar(0));
    rhs[static_cast<std::size_t>(k)] = Scalar(1);
    out.S.push_back(pair_vec_to_tensor(s, *solve(m, rhs, cols)));
  }
  return out;
}

inline Tensor apply_splitting(const WedgeSplitting& sp, const Tensor& two_form) {
  Tensor r;
  for (auto& [I, a] : two_form.terms()) r += sp.S[static_cast<std::size_t>(I[0])].scaled(a);
  return r;
}

inline bool is_antisymmetric(const CalculusSpec& s, const Tensor& x) {
  for (auto& k : wedge_kernel(s))
    if (!ev_n(x, pair_vec_to_tensor(s, k)).is_zero()) return false;
  return true;
}

// x = sum_p u_p (x) v_p over C; phi is not balanced over A, so the pairs are kept.
using VecPairs = std::vector<std::pair<Tensor, Tensor>>;

inline Tensor balance(const VecPairs& x) {
  Tensor r;
  for (auto& [u, v] : x) r += outer(u, v);
  return r;
}

inline Tensor phi_unchecked(const CalculusSpec& s, const VecPairs& x, const WedgeSplitting& sp) {
  Tensor bal = balance(x);
  Tensor r;
  for (int l = 0; l < s.n1; ++l) {
    AElem val;
    for (auto& [u, v] : x) val += directional(s, u, v.at({l}));
    val += ev_n(bal, apply_splitting(sp, d1(s, Tensor::basis({l}))));
    r.add({l}, val);
  }
  return r;
}

inline Tensor phi(const CalculusSpec& s, const VecPairs& x, const WedgeSplitting& sp) {
  if (!is_antisymmetric(s, balance(x)))
    throw PreconditionFailed("antisymmetric", "phi needs an antisymmetric element of Vec (x) Vec");
  return phi_unchecked(s, x, sp);
}

// Pairs with coefficients kept on the left factor.
inline VecPairs left_pairs(const Tensor& x) {
  VecPairs r;
  for (auto& [I, a] : x.terms()) r.emplace_back(Tensor::basis({I[0]}, a), Tensor::basis({I[1]}));
  return r;
}

// --- theta --------------------------------------------------------------------------

inline const std::vector<std::vector<Tensor>>& need_sigma_E(const ModuleConnection& E) {
  if (!E.sigma_E) throw MissingCapability("sigma_E_required", "module '" + E.name + "' has no sigma_E");
  return *E.sigma_E;
}

// sigma_E^-1(u_x (x) e_a) = sum T e_c (x) u_y with T{c,y} = sigma_E[a][y]{x,c}; keys {c, y}.
inline Tensor sigma_E_inv(const CalculusSpec& s, const ModuleConnection& E, int x, int a) {
  const auto& sg = need_sigma_E(E);
  Tensor r;
  for (int y = 0; y < s.n1; ++y)
    for (auto& [K, t] : sg[static_cast<std::size_t>(a)][static_cast<std::size_t>(y)].terms())
      if (K[0] == x) r.add({K[1], y}, t);
  return r;
}

class ThetaEngine {
 public:
  ThetaEngine(const CalculusSpec& s, const ModuleConnection& E) : s_(s), E_(E), bul_(s) {}

  BulletEngine& bullets() { return bul_; }

  // theta(v (x) e) in E (x) TVec, keys {b, J...}.
  Tensor apply(const DiffOp& v, const Tensor& e) {
    Tensor r;
    for (auto& [I, f] : e.terms()) r += on_basis_module(bul_.product(v, Tensor::scalar(f)), I[0]);
    return r;
  }

  // (id_E (x) .)(t . w) for t in E (x) TVec.
  Tensor right_bullet(const Tensor& t, const DiffOp& w) {
    Tensor r;
    for (auto& [K, c] : t.terms()) {
      Tensor y = bul_.product(Tensor::basis(slice(K, 1, K.size()), c), w);
      r += outer(Tensor::basis({K[0]}), y);
    }
    return r;
  }

 private:
  Tensor on_basis_module(const DiffOp& w, int a) {
    Tensor r;
    for (auto& [I, c] : w.terms()) r += on_basis(I, a).scaled(c);
    return r;
  }

  const Tensor& on_basis(const Idx& I, int a) {
    auto key = std::make_pair(I, a);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Tensor r;
    if (I.empty()) {
      r = Tensor::basis({a});
    } else {
      int c = I[0];
      Idx rest = slice(I, 1, I.size());
      Tensor inner = on_basis(rest, a);
      for (auto& [K, f] : inner.terms()) {
        int b = K[0];
        Tensor y = Tensor::basis(slice(K, 1, K.size()), f);
        Tensor ue = act(s_, E_, vec_field(c), Tensor::basis({b}));
        for (auto& [B, m] : ue.terms()) r += outer(Tensor::basis(B), y.scaled(m));
        Tensor si = sigma_E_inv(s_, E_, c, b);
        for (auto& [C, t] : si.terms())
          r += outer(Tensor::basis({C[0]}), bul_.product(vec_field(C[1], t), y));
      }
      Tensor l = bul_.low(c, Tensor::basis(rest));
      if (!l.is_zero()) r -= on_basis_module(l, a);
    }
    return memo_.emplace(key, std::move(r)).first->second;
  }

  const CalculusSpec& s_;
  const ModuleConnection& E_;
  BulletEngine bul_;
  std::map<std::pair<Idx, int>, Tensor> memo_;
};

inline Tensor theta(const CalculusSpec& s, const ModuleConnection& E, const DiffOp& v, const Tensor& e) {
  ThetaEngine eng(s, E);
  return eng.apply(v, e);
}

// sigma_E on E (x) Omega^2 through a splitting, keys {j, b}:
// (^ (x) id)(id (x) sigma_E)(sigma_E (x) id)(e_a (x) S(omega_k)).
inline Tensor sigma_E_on_pairs(const CalculusSpec& s, const ModuleConnection& E, int a, const Tensor& pairs) {
  const auto& sg = need_sigma_E(E);
  Tensor r;
  for (auto& [P, c] : pairs.terms())
    for (auto& [K1, t1] : sg[static_cast<std::size_t>(a)][static_cast<std::size_t>(P[0])].terms())
      for (auto& [K2, t2] : sg[static_cast<std::size_t>(K1[1])][static_cast<std::size_t>(P[1])].terms())
        for (int j = 0; j < s.n2; ++j) {
          const Scalar& w = s.W[K1[0]][K2[0]][j];
          if (!w.is_zero()) r.add({j, K2[1]}, c * t1 * t2 * aconst(w));
        }
  return r;
}

// sigma_E descends to E (x) Omega^2 when it kills e (x) ker ^.
inline bool sigma_E_descends(const CalculusSpec& s, const ModuleConnection& E) {
  for (auto& k : wedge_kernel(s)) {
    Tensor kt = pair_vec_to_tensor(s, k);
    for (int a = 0; a < E.rank; ++a)
      if (!sigma_E_on_pairs(s, E, a, kt).is_zero()) return false;
  }
  return true;
}

// --- left span membership with bounded coefficient degree ------------------------------

namespace detail {

inline std::vector<Exponent> monomials_upto(std::size_t nvars, int deg) {
  std::vector<Exponent> out{Exponent{}};
  for (std::size_t v = 0; v < nvars; ++v) {
    std::vector<Exponent> next;
    for (auto& e : out) {
      int used = total_degree(e);
      for (int k = 0; used + k <= deg; ++k) {
        Exponent f = e;
        f.resize(nvars, 0);
        f[v] = k;
        trim(f);
        next.push_back(f);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

// Is target in sum_g A_{<=deg} . g, with multipliers of degree at most deg?
inline bool in_left_span(const CalculusSpec& s, const std::vector<Tensor>& gens, const Tensor& target,
                         int deg) {
  if (target.is_zero()) return true;
  auto monos = detail::monomials_upto(s.algebra.coords.size(), deg);
  std::vector<Tensor> cols;
  for (auto& g : gens)
    for (auto& m : monos) cols.push_back(g.scaled(AElem::monomial(m, Scalar(1))));
  std::map<std::pair<Idx, Exponent>, std::size_t> rows;
  auto row_of = [&](const Idx& I, const Exponent& e) {
    auto it = rows.try_emplace({I, e}, rows.size()).first;
    return it->second;
  };
  for (auto& c : cols)
    for (auto& [I, a] : c.terms())
      for (auto& [e, x] : a.terms()) row_of(I, e);
  for (auto& [I, a] : target.terms())
    for (auto& [e, x] : a.terms()) row_of(I, e);
  Matrix m = zero_matrix(rows.size(), cols.size());
  Vec rhs(rows.size(), Scalar(0));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (auto& [I, a] : cols[j].terms())
      for (auto& [e, x] : a.terms()) m[rows.at({I, e})][j] = x;
  for (auto& [I, a] : target.terms())
    for (auto& [e, x] : a.terms()) rhs[rows.at({I, e})] = x;
  return solve(m, rhs, cols.size()).has_value();
}

// --- theta and the relations --------------------------------------------------------

struct ThetaRelationReport {
  bool sigma_descends = false;
  bool prop_identity = false;
  bool ideal_stable = false;
  bool ok() const { return sigma_descends && prop_identity && ideal_stable; }
};

// For flat E: theta(Rhat_k (x) e_a) - Rhat_k |> e_a (x) 1 = sum_m (alpha_k (x) id) sigma_E(e_a (x) omega_m) (x) Rhat_m,
// and theta maps the ideal into E (x) ideal up to grade 3.
inline ThetaRelationReport theta_relation_check(const CalculusSpec& s, const ModuleConnection& E) {
  ThetaRelationReport rep;
  rep.sigma_descends = sigma_E_descends(s, E);
  auto rel = da_relations(s);
  auto split = wedge_splitting(s);
  ThetaEngine eng(s, E);
  auto& bul = eng.bullets();

  rep.prop_identity = true;
  for (int a = 0; a < E.rank; ++a) {
    Tensor ea = Tensor::basis({a});
    std::vector<Tensor> sig;
    for (int m = 0; m < s.n2; ++m) sig.push_back(sigma_E_on_pairs(s, E, a, split.S[static_cast<std::size_t>(m)]));
    for (int k = 0; k < s.n2; ++k) {
      Tensor lhs = eng.apply(rel[static_cast<std::size_t>(k)], ea);
      lhs -= outer(act(s, E, rel[static_cast<std::size_t>(k)], ea), Tensor::scalar(AElem(Scalar(1))));
      Tensor rhs;
      for (int m = 0; m < s.n2; ++m)
        for (auto& [K, c] : sig[static_cast<std::size_t>(m)].terms())
          if (K[0] == k) rhs += outer(Tensor::basis({K[1]}), rel[static_cast<std::size_t>(m)].scaled(c));
      if (lhs != rhs) rep.prop_identity = false;
    }
  }

  std::vector<Tensor> gens;
  std::vector<Tensor> probes;
  for (auto& r : rel) {
    if (r.is_zero()) continue;
    gens.push_back(r);
    probes.push_back(r);
    for (int i = 0; i < s.n1; ++i) {
      gens.push_back(bul.basis_times({i}, r));
      gens.push_back(bul.product(r, vec_field(i)));
    }
    for (std::size_t v = 0; v < s.algebra.coords.size(); ++v)
      gens.push_back(bul.product(r, Tensor::scalar(AElem::var(v))));
  }
  for (int i = 0; i < s.n1; ++i)
    for (auto& r : rel)
      if (!r.is_zero()) {
        probes.push_back(bul.basis_times({i}, r));
        probes.push_back(bul.product(r, vec_field(i)));
      }

  rep.ideal_stable = true;
  for (auto& w : probes)
    for (int a = 0; a < E.rank && rep.ideal_stable; ++a) {
      Tensor t = eng.apply(w, Tensor::basis({a}));
      std::map<int, Tensor> legs;
      int deg = 0;
      for (auto& [K, c] : t.terms()) {
        legs[K[0]].add(slice(K, 1, K.size()), c);
        deg = std::max(deg, c.total_deg());
      }
      for (auto& [b, y] : legs)
        if (!in_left_span(s, gens, y, deg + 1)) {
          rep.ideal_stable = false;
          break;
        }
    }
  return rep;
}

// --- symbols ------------------------------------------------------------------------

inline Tensor symbol(const DiffOp& v) {
  if (v.is_zero()) throw PreconditionFailed("nonzero", "the zero operator has no symbol");
  return v.grade(static_cast<std::size_t>(v.top_grade()));
}

// --- module endomorphisms ---------------------------------------------------------

// Left module map E -> Omega^{(x)n} (x) E: S[a] is the image of e_a, keys {I..., b}.
struct EndoOperator {
  int order = 0;
  std::vector<Tensor> S;
};

// T(e_a) = sum_b T[b][a] e_b.
inline EndoOperator endo_from_matrix(const std::vector<std::vector<AElem>>& T) {
  EndoOperator op;
  op.order = 0;
  std::size_t n = T.size();
  op.S.assign(n, Tensor());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < n; ++a) op.S[a].add({static_cast<int>(b)}, T[b][a]);
  return op;
}

inline Tensor apply_endo(const EndoOperator& op, const Tensor& e) {
  Tensor r;
  for (auto& [I, f] : e.terms()) r += op.S[static_cast<std::size_t>(I[0])].scaled(f);
  return r;
}

// (id^m (x) S) U.
inline EndoOperator endo_compose(const EndoOperator& S, const EndoOperator& U) {
  EndoOperator r;
  r.order = S.order + U.order;
  for (auto& img : U.S) {
    Tensor t;
    for (auto& [K, g] : img.terms())
      t += outer(Tensor::basis(slice(K, 0, K.size() - 1)), S.S[static_cast<std::size_t>(K.back())].scaled(g));
    r.S.push_back(t);
  }
  return r;
}

// nabla_E(S)(e) = (box^<n> (x) id + id (x) nabla_E) S(e) - (sigma^-<n> (x) id)(id (x) S) nabla_E e.
inline Tensor nabla_endo_apply(const CalculusSpec& s, const ModuleConnection& E, const EndoOperator& op,
                               const Tensor& e) {
  Tensor t1 = nabla_iter(s, E, 1, apply_endo(op, e));
  Tensor t2;
  Tensor ne = nabla_module(s, E, e);
  for (auto& [K, g] : ne.terms())
    t2 += outer(Tensor::basis({K[0]}), op.S[static_cast<std::size_t>(K[1])].scaled(g));
  return t1 - sigma_inv_n(s, t2, op.order);
}

inline EndoOperator nabla_of_endo(const CalculusSpec& s, const ModuleConnection& E, const EndoOperator& op) {
  EndoOperator r;
  r.order = op.order + 1;
  for (int a = 0; a < E.rank; ++a) r.S.push_back(nabla_endo_apply(s, E, op, Tensor::basis({a})));
  return r;
}

// K_n(v, S)(e) = (ev^<n> (x) id)(v (x) S(e)).
inline Tensor k_op(const DiffOp& v, const EndoOperator& op, const Tensor& e) {
  if (!v.is_zero() && (v.top_grade() != op.order || v.grade(static_cast<std::size_t>(op.order)) != v))
    throw GradeMismatch("K_n needs a homogeneous vector of grade " + std::to_string(op.order));
  Tensor se = apply_endo(op, e);
  Tensor r;
  for (auto& [I, a] : v.terms()) {
    Idx R = reversed(I);
    for (auto& [K, g] : se.terms())
      if (std::equal(R.begin(), R.end(), K.begin())) r.add({K.back()}, a * g);
  }
  return r;
}

// sigma^-<n> on Vec^{(x)(n+1)}: the ev-adjoint of sigma^-<n> on forms.
inline Tensor sigma_inv_vec(const CalculusSpec& s, const Tensor& x, int n) {
  std::size_t len = static_cast<std::size_t>(n + 1);
  std::map<Idx, Tensor> images;
  Idx K(len, 0);
  while (true) {
    images.emplace(K, sigma_inv_n(s, Tensor::basis(K), n));
    std::size_t p = 0;
    while (p < len && ++K[p] == s.n1) K[p++] = 0;
    if (p == len) break;
  }
  Tensor r;
  for (auto& [I, a] : x.terms()) {
    if (I.size() != len) throw GradeMismatch("sigma^-<n> on Vec needs grade n+1");
    Idx L = reversed(I);
    for (auto& [Kb, img] : images) {
      AElem c = img.at(L);
      if (!c.is_zero()) r.add(reversed(Kb), a * c);
    }
  }
  return r;
}

}  // namespace ncdiff

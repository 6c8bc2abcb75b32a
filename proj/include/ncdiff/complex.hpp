#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "builtins.hpp"
#include "diffop.hpp"

namespace ncdiff {

// --- projections ------------------------------------------------------------------

// Apply P to one slot: xi_i -> sum_j P[i][j] xi_j.
inline Tensor apply_slot(const Tensor& t, std::size_t slot, const Matrix& P) {
  Tensor r;
  for (auto& [I, a] : t.terms()) {
    const Vec& row = P[static_cast<std::size_t>(I[slot])];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j].is_zero()) continue;
      Idx J = I;
      J[slot] = static_cast<int>(j);
      r.add(J, a * aconst(row[j]));
    }
  }
  return r;
}

inline Matrix transpose(const Matrix& m) {
  if (m.empty()) return m;
  Matrix r = zero_matrix(m[0].size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) r[j][i] = m[i][j];
  return r;
}

inline Matrix scaled(Matrix m, const Scalar& c) {
  for (auto& row : m)
    for (auto& x : row) x *= c;
  return m;
}

// Projections use the row convention of J: P(xi_i) = sum_j P[i][j] xi_j.
// On Vec the same projections act by the transpose, since J(v) = v o J.
struct SectorDecomposition {
  Matrix p10, p01;
  Matrix j2;
  std::map<std::pair<int, int>, Matrix> pq;

  const Matrix& on_omega2(int p, int q) const { return pq.at({p, q}); }
  Matrix vec10() const { return transpose(p10); }
  Matrix vec01() const { return transpose(p01); }
};

inline const Matrix& need_j(const CalculusSpec& s) {
  if (!s.J) {
    if (s.n1 % 2)
      throw MissingCapability("J_required", s.name + ": Omega^1 has odd dimension " + std::to_string(s.n1) +
                                                ", so there is no almost complex structure");
    throw MissingCapability("J_required", s.name + " has no almost complex structure");
  }
  return *s.J;
}

// J on Omega^2: omega_k -> ^ (J (x) id + id (x) J) S(omega_k).
inline Matrix induced_j2(const CalculusSpec& s) {
  Matrix wm = wedge_matrix(s);
  std::size_t cols = static_cast<std::size_t>(s.n1 * s.n1);
  Matrix r = zero_matrix(static_cast<std::size_t>(s.n2), static_cast<std::size_t>(s.n2));
  for (int k = 0; k < s.n2; ++k) {
    Vec rhs(static_cast<std::size_t>(s.n2), Scalar(0));
    rhs[static_cast<std::size_t>(k)] = Scalar(1);
    auto x = solve(wm, rhs, cols);
    if (!x) throw SpecError(s.name + ": wedge is not surjective");
    Vec jx = j_pair(s, *x);
    for (int m = 0; m < s.n2; ++m) {
      Scalar acc;
      for (std::size_t c = 0; c < cols; ++c) acc += wm[static_cast<std::size_t>(m)][c] * jx[c];
      r[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] = acc;
    }
  }
  return r;
}

inline SectorDecomposition decompose(const CalculusSpec& s) {
  const Matrix& J = need_j(s);
  check_j(s);
  std::size_t n = static_cast<std::size_t>(s.n1);
  Scalar i = Scalar::imag_unit(), half = Scalar::rational(1, 2);
  SectorDecomposition d;
  d.p10 = scaled(matadd(identity_matrix(n), J, -i), half);
  d.p01 = scaled(matadd(identity_matrix(n), J, i), half);
  d.j2 = induced_j2(s);

  std::size_t m = static_cast<std::size_t>(s.n2);
  Matrix id = identity_matrix(m);
  const std::vector<std::pair<std::pair<int, int>, Scalar>> eig = {
      {{2, 0}, Scalar(2) * i}, {{1, 1}, Scalar(0)}, {{0, 2}, Scalar(-2) * i}};
  Matrix check = id;
  for (auto& [pq, lam] : eig) check = matmul(check, matadd(d.j2, id, -lam));
  if (!is_zero_matrix(check)) throw SpecError(s.name + ": J on Omega^2 has eigenvalues other than 0, +-2i");
  for (auto& [pq, lam] : eig) {
    Matrix p = id;
    for (auto& [other, mu] : eig)
      if (other != pq) p = scaled(matmul(p, matadd(d.j2, id, -mu)), (lam - mu).inverse());
    d.pq[pq] = p;
  }
  return d;
}

// d xi has no (2,0) part for xi in Omega^{0,1}.
inline bool integrable(const CalculusSpec& s) {
  auto d = decompose(s);
  for (int k = 0; k < s.n1; ++k) {
    Tensor xi;
    for (int j = 0; j < s.n1; ++j) xi.add({j}, aconst(d.p01[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]));
    if (!apply_slot(d1(s, xi), 0, d.on_omega2(2, 0)).is_zero()) return false;
  }
  return true;
}

// --- sector bases and the mixed wedge inverses ----------------------------------------

// Index sets of a J-diagonal Omega^1 basis: J xi_k = i xi_k for k in s10, -i xi_k for k in s01.
struct Sectors {
  std::vector<int> s10, s01;
  std::vector<int> side;  // +1 or -1 per basis index

  bool in10(int k) const { return side[static_cast<std::size_t>(k)] > 0; }
  bool in01(int k) const { return side[static_cast<std::size_t>(k)] < 0; }
};

inline Sectors sector_basis(const CalculusSpec& s) {
  const Matrix& J = need_j(s);
  Sectors sec;
  Scalar i = Scalar::imag_unit();
  for (int k = 0; k < s.n1; ++k) {
    for (int j = 0; j < s.n1; ++j)
      if (j != k && !J[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)].is_zero())
        throw SpecError(s.name + ": J must be diagonal on the Omega^1 basis");
    const Scalar& x = J[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    if (x == i) {
      sec.s10.push_back(k);
      sec.side.push_back(1);
    } else if (x == -i) {
      sec.s01.push_back(k);
      sec.side.push_back(-1);
    } else {
      throw SpecError(s.name + ": J must have eigenvalues +-i on the basis");
    }
  }
  return sec;
}

// All indices of every term in the given sector.
inline bool in_sector(const Tensor& t, const Sectors& sec, int side) {
  for (auto& [I, a] : t.terms())
    for (int k : I)
      if (sec.side[static_cast<std::size_t>(k)] != side) return false;
  return true;
}

struct ComplexStructure {
  SectorDecomposition dec;
  Sectors sec;
  // lift[m] = inverse wedge applied to pi^{1,1}(omega_m), keys {a, b}
  std::optional<std::vector<Tensor>> phi;  // Omega^{1,0} (x) Omega^{0,1}
  std::optional<std::vector<Tensor>> psi;  // Omega^{0,1} (x) Omega^{1,0}

  const std::vector<Tensor>& need_phi() const {
    if (!phi) throw PreconditionFailed("a", "^ : Omega^{1,0} (x) Omega^{0,1} -> Omega^{1,1} is not invertible");
    return *phi;
  }
  const std::vector<Tensor>& need_psi() const {
    if (!psi) throw PreconditionFailed("b", "^ : Omega^{0,1} (x) Omega^{1,0} -> Omega^{1,1} is not invertible");
    return *psi;
  }

  static Tensor lift(const std::vector<Tensor>& inv, const Tensor& two_form) {
    Tensor r;
    for (auto& [I, a] : two_form.terms()) r += inv[static_cast<std::size_t>(I[0])].scaled(a);
    return r;
  }
  // phi pi^{1,1} and psi pi^{1,1} on a 2-form {k}.
  Tensor phi11(const Tensor& w) const { return lift(need_phi(), w); }
  Tensor psi11(const Tensor& w) const { return lift(need_psi(), w); }
};

namespace detail {

inline std::optional<std::vector<Tensor>> mixed_inverse(const CalculusSpec& s, const SectorDecomposition& d,
                                                        const std::vector<int>& first,
                                                        const std::vector<int>& second) {
  std::vector<std::pair<int, int>> pairs;
  for (int a : first)
    for (int b : second) pairs.emplace_back(a, b);
  const Matrix& p11 = d.on_omega2(1, 1);
  std::size_t dim11 = rank(p11);
  Matrix m = zero_matrix(static_cast<std::size_t>(s.n2), pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int k = 0; k < s.n2; ++k) m[static_cast<std::size_t>(k)][p] = s.W[pairs[p].first][pairs[p].second][k];
  if (pairs.size() != dim11 || rank(m) != pairs.size()) return std::nullopt;
  std::vector<Tensor> out;
  for (int k = 0; k < s.n2; ++k) {
    auto x = solve(m, p11[static_cast<std::size_t>(k)], pairs.size());
    if (!x) return std::nullopt;
    Tensor t;
    for (std::size_t p = 0; p < pairs.size(); ++p) t.add({pairs[p].first, pairs[p].second}, aconst((*x)[p]));
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline ComplexStructure complex_structure(const CalculusSpec& s) {
  ComplexStructure c;
  c.dec = decompose(s);
  c.sec = sector_basis(s);
  c.phi = detail::mixed_inverse(s, c.dec, c.sec.s10, c.sec.s01);
  c.psi = detail::mixed_inverse(s, c.dec, c.sec.s01, c.sec.s10);
  return c;
}

inline Tensor dbar0(const CalculusSpec& s, const ComplexStructure& c, const AElem& a) {
  return apply_slot(d0(s, a), 0, c.dec.p01);
}

inline Tensor del0(const CalculusSpec& s, const ComplexStructure& c, const AElem& a) {
  return apply_slot(d0(s, a), 0, c.dec.p10);
}

// --- conditions on box ---------------------------------------------------------------

// (J (x) id) box = box J on Omega^1.
inline bool box_commutes_with_j(const CalculusSpec& s) {
  const Matrix& J = need_j(s);
  for (int k = 0; k < s.n1; ++k) {
    Tensor jk;
    for (int j = 0; j < s.n1; ++j) jk.add({j}, aconst(J[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]));
    if (apply_slot(box_form(s, Tensor::basis({k})), 0, J) != box_form(s, jk)) return false;
  }
  return true;
}

// (id (x) J) box = box J on Vec.
inline bool vec_box_commutes_with_j(const CalculusSpec& s) {
  Matrix Jv = transpose(need_j(s));
  for (int c = 0; c < s.n1; ++c) {
    Tensor jc = apply_slot(Tensor::basis({c}), 0, Jv);
    if (apply_slot(box_vec(s, Tensor::basis({c})), 1, Jv) != box_vec(s, jc)) return false;
  }
  return true;
}

// (J (x) id) sigma^-1 = sigma^-1 (id (x) J) on basis pairs.
inline bool sigma_inv_commutes_with_j(const CalculusSpec& s) {
  const Matrix& J = need_j(s);
  for (int x = 0; x < s.n1; ++x)
    for (int y = 0; y < s.n1; ++y) {
      Tensor t = Tensor::basis({x, y});
      if (apply_slot(apply_sigma_inv(s, t, 0), 0, J) != apply_sigma_inv(s, apply_slot(t, 1, J), 0)) return false;
    }
  return true;
}

// pi^{1,1} Tor_R = 0.
inline bool torsion_11_vanishes(const CalculusSpec& s, const ComplexStructure& c) {
  for (int k = 0; k < s.n1; ++k)
    if (!apply_slot(torsion(s, Tensor::basis({k})), 0, c.dec.on_omega2(1, 1)).is_zero()) return false;
  return true;
}

// pi^{1,1} ^ sigma^-1 = -pi^{0,1} ^ pi^{1,0} - pi^{1,0} ^ pi^{0,1} on basis pairs.
inline bool sigma_wedge_condition(const CalculusSpec& s, const ComplexStructure& c) {
  const Matrix& p11 = c.dec.on_omega2(1, 1);
  for (int x = 0; x < s.n1; ++x)
    for (int y = 0; y < s.n1; ++y) {
      Tensor t = Tensor::basis({x, y});
      Tensor lhs = apply_slot(wedge_at(s, apply_sigma_inv(s, t, 0), 0), 0, p11);
      Tensor mixed = apply_slot(apply_slot(t, 0, c.dec.p01), 1, c.dec.p10) +
                     apply_slot(apply_slot(t, 0, c.dec.p10), 1, c.dec.p01);
      Tensor rhs = -apply_slot(wedge_at(s, mixed, 0), 0, p11);
      if (lhs != rhs) return false;
    }
  return true;
}

struct ComplexConditions {
  bool a = false;  // mixed wedge invertible
  bool b = false;  // (J (x) id) box = box J
  bool c = false;  // pi^{1,1} Tor_R = 0
  bool d = false;  // pi^{1,1} ^ sigma^-1 identity (only when requested)
};

inline ComplexConditions complex_conditions(const CalculusSpec& s, const ComplexStructure& c, bool with_d) {
  ComplexConditions r;
  r.a = c.phi.has_value();
  r.b = box_commutes_with_j(s);
  r.c = torsion_11_vanishes(s, c);
  if (with_d) r.d = sigma_wedge_condition(s, c);
  return r;
}

inline void require(const ComplexConditions& k, bool with_d) {
  if (!k.a) throw PreconditionFailed("a", "^ : Omega^{1,0} (x) Omega^{0,1} -> Omega^{1,1} is not invertible");
  if (!k.b) throw PreconditionFailed("b", "(J (x) id) box != box J");
  if (!k.c) throw PreconditionFailed("c", "pi^{1,1} Tor_R does not vanish");
  if (with_d && !k.d) throw PreconditionFailed("d", "pi^{1,1} ^ sigma^-1 != -pi^{0,1}^pi^{1,0} - pi^{1,0}^pi^{0,1}");
}

// --- Newlander-Nirenberg bracket -------------------------------------------------------

// phi(x) of a (1,0)-sector input; true when it lies in Vec^{1,0}.
inline bool nn_bracket_check(const CalculusSpec& s, const VecPairs& x) {
  auto c = complex_structure(s);
  if (!integrable(s)) throw PreconditionFailed("integrable", s.name + " is not integrable");
  for (auto& [u, v] : x)
    if (!in_sector(u, c.sec, 1) || !in_sector(v, c.sec, 1))
      throw PreconditionFailed("sector", "input is not in Vec^{1,0} (x) Vec^{1,0}");
  std::vector<std::pair<int, int>> pairs;
  for (int a : c.sec.s10)
    for (int b : c.sec.s10) pairs.emplace_back(a, b);
  Matrix m = zero_matrix(static_cast<std::size_t>(s.n2), pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int k = 0; k < s.n2; ++k) m[static_cast<std::size_t>(k)][p] = s.W[pairs[p].first][pairs[p].second][k];
  Tensor bal = balance(x);
  for (auto& kv : nullspace(m, pairs.size())) {
    Tensor kt;
    for (std::size_t p = 0; p < pairs.size(); ++p) kt.add({pairs[p].first, pairs[p].second}, aconst(kv[p]));
    if (!ev_n(bal, kt).is_zero())
      throw PreconditionFailed("kernel", "input pairs nontrivially with ker ^ on Omega^{1,0} (x) Omega^{1,0}");
  }
  Tensor f = phi_unchecked(s, x, wedge_splitting(s));
  return apply_slot(f, 0, c.dec.vec01()).is_zero();
}

inline bool nn_bracket_check(const CalculusSpec& s, const Tensor& x) { return nn_bracket_check(s, left_pairs(x)); }

// --- holomorphic vector fields ----------------------------------------------------------

// Coordinates x_v with dbar x_v = 0.
inline std::vector<std::size_t> holomorphic_coords(const CalculusSpec& s, const ComplexStructure& c) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < s.algebra.coords.size(); ++v)
    if (dbar0(s, c, AElem::var(v)).is_zero()) out.push_back(v);
  return out;
}

// Monomials of degree <= deg in the holomorphic coordinates.
inline std::vector<AElem> holomorphic_monomials(const CalculusSpec& s, const ComplexStructure& c, int deg) {
  auto hc = holomorphic_coords(s, c);
  std::vector<AElem> out;
  for (auto& e : detail::monomials_upto(hc.size(), deg)) {
    Exponent full(s.algebra.coords.size(), 0);
    for (std::size_t k = 0; k < e.size(); ++k) full[hc[k]] = e[k];
    trim(full);
    out.push_back(AElem::monomial(full, Scalar(1)));
  }
  return out;
}

// dbar(v |> a) = (pi^{0,1} (x) ev)(box v (x) del a) - (ev (x) id)(v (x) phi pi^{1,1} ^ box dbar a).
inline Tensor dbar_of_action(const CalculusSpec& s, const ComplexStructure& c, const Tensor& v, const AElem& a) {
  Tensor r;
  Tensor bv = apply_slot(square_vec_n(s, v), 0, c.dec.p01);
  Tensor da = del0(s, c, a);
  for (auto& [K, g] : bv.terms()) r.add({K[0]}, g * da.at({K[1]}));
  Tensor lifted = c.phi11(wedge_at(s, box_form(s, dbar0(s, c, a)), 0));
  for (auto& [K, g] : lifted.terms()) r.add({K[1]}, -(g * v.at({K[0]})));
  return r;
}

inline ComplexConditions lemma_conditions(const CalculusSpec& s) {
  return complex_conditions(s, complex_structure(s), false);
}

// (pi^{0,1} (x) id) box v = 0 for v in Vec^{1,0}, after checking (a)-(c). When v is
// holomorphic, dbar(v |> a) = 0 is confirmed on holomorphic monomials up to degree 3.
inline bool holo_vec_check(const CalculusSpec& s, const Tensor& v) {
  auto c = complex_structure(s);
  require(complex_conditions(s, c, false), false);
  if (!in_sector(v, c.sec, 1)) throw PreconditionFailed("sector", "v is not in Vec^{1,0}");
  bool holo = apply_slot(square_vec_n(s, v), 0, c.dec.p01).is_zero();
  if (holo)
    for (auto& a : holomorphic_monomials(s, c, 3))
      if (!dbar0(s, c, directional(s, v, a)).is_zero())
        throw std::logic_error("holomorphic vector field sends a holomorphic function to a non-holomorphic one");
  return holo;
}

// --- the nice connection -----------------------------------------------------------------

// Right bimodule covariant derivative on one sector, on basis elements xi_k of
// that sector: nabla(xi_k) keys {a, j} and sigma^-1(xi_x (x) xi_k) keys {a, j},
// with a in the sector. Missing entries are zero.
struct SectorConnection {
  std::map<int, Tensor> nabla;
  std::map<std::pair<int, int>, Tensor> sigma_inv;
};

struct HoloConnectionPair {
  SectorConnection c10, c01;
};

// nabla = 0 and sigma^-1 = flip inside each sector.
inline HoloConnectionPair flat_flip_pair(const CalculusSpec& s) {
  auto sec = sector_basis(s);
  HoloConnectionPair p;
  for (int x = 0; x < s.n1; ++x) {
    for (int k : sec.s10) p.c10.sigma_inv[{x, k}] = Tensor::basis({k, x});
    for (int k : sec.s01) p.c01.sigma_inv[{x, k}] = Tensor::basis({k, x});
  }
  return p;
}

// Bimodule rule against the right Leibniz rule on a commutative coordinate algebra:
// sigma^-1(dx_v (x) xi_k) = xi_k (x) dx_v.
inline bool sector_bimodule_rule(const CalculusSpec& s, const SectorConnection& c, const std::vector<int>& sector) {
  for (std::size_t v = 0; v < s.algebra.coords.size(); ++v) {
    Tensor dx = d0(s, AElem::var(v));
    for (int k : sector) {
      Tensor lhs;
      for (auto& [I, f] : dx.terms()) {
        auto it = c.sigma_inv.find({I[0], k});
        if (it != c.sigma_inv.end()) lhs += it->second.scaled(f);
      }
      if (lhs != outer(Tensor::basis({k}), dx)) return false;
    }
  }
  return true;
}

// box and sigma^-1 on Omega^1 assembled from the two sector connections; the
// result satisfies (J (x) id) box = box J, pi^{1,1} Tor_R = 0 and the
// pi^{1,1} ^ sigma^-1 identity, which are checked before returning.
inline CalculusSpec nice_connection(CalculusSpec s, const HoloConnectionPair& pr) {
  auto c = complex_structure(s);
  c.need_phi();
  c.need_psi();
  auto check_first = [&](const Tensor& t, int side, const char* what) {
    for (auto& [I, a] : t.terms())
      if (c.sec.side[static_cast<std::size_t>(I[0])] != side)
        throw SpecError(std::string(what) + " leaves its sector");
  };
  auto G = detail::zero_gamma(s.n1);
  std::vector<std::vector<AElem>> S(static_cast<std::size_t>(s.n1 * s.n1),
                                    std::vector<AElem>(static_cast<std::size_t>(s.n1 * s.n1)));
  for (int k = 0; k < s.n1; ++k) {
    bool ten = c.sec.in10(k);
    const SectorConnection& sc = ten ? pr.c10 : pr.c01;
    const Matrix& P = ten ? c.dec.p10 : c.dec.p01;
    auto lift = [&](const Tensor& w) { return ten ? c.phi11(w) : c.psi11(w); };
    Tensor g;
    if (auto it = sc.nabla.find(k); it != sc.nabla.end()) {
      check_first(it->second, c.sec.side[static_cast<std::size_t>(k)], "sector connection");
      g = apply_slot(it->second, 1, P);
    }
    g -= lift(d1(s, Tensor::basis({k})));
    for (auto& [I, a] : g.terms()) G[k][I[0]][I[1]] = a;
    for (int x = 0; x < s.n1; ++x) {
      Tensor t;
      if (auto it = sc.sigma_inv.find({x, k}); it != sc.sigma_inv.end()) {
        check_first(it->second, c.sec.side[static_cast<std::size_t>(k)], "sector sigma^-1");
        t = apply_slot(it->second, 1, P);
      }
      t -= lift(wedge_at(s, Tensor::basis({x, k}), 0));
      for (auto& [I, a] : t.terms()) S[s.pair(x, k)][s.pair(I[0], I[1])] = a;
    }
  }
  s.gamma = G;
  s.sigma_inv = S;
  auto k = complex_conditions(s, complex_structure(s), true);
  if (!k.b || !k.c || !k.d) throw std::logic_error("nice connection: assembled box fails its stated properties");
  return s;
}

// --- sector closure and partial iteration ------------------------------------------------

namespace detail {

inline AElem random_coeff(std::mt19937& rng, const std::vector<std::size_t>& coords, int maxdeg) {
  std::uniform_int_distribution<int> coef(-3, 3);
  std::size_t nc = coords.empty() ? 0 : *std::max_element(coords.begin(), coords.end()) + 1;
  AElem a;
  for (int t = 0; t < 2; ++t) {
    Exponent e(nc, 0);
    int left = maxdeg;
    for (std::size_t v : coords) {
      int x = std::uniform_int_distribution<int>(0, left)(rng);
      e[v] = x;
      left -= x;
    }
    trim(e);
    a.add_term(e, Scalar(coef(rng)));
  }
  if (a.is_zero()) a = AElem(Scalar(1));
  return a;
}

inline DiffOp random_sector_op(std::mt19937& rng, const std::vector<int>& sector,
                               const std::vector<std::size_t>& coords, int maxgrade, int maxdeg) {
  std::uniform_int_distribution<std::size_t> pick(0, sector.size() - 1);
  std::uniform_int_distribution<int> grade(0, maxgrade);
  DiffOp v;
  for (int k = 0; k < 3; ++k) {
    Idx I(static_cast<std::size_t>(grade(rng)));
    for (auto& x : I) x = sector[pick(rng)];
    v.add(I, random_coeff(rng, coords, maxdeg));
  }
  return v;
}

inline std::vector<std::size_t> all_coords(const CalculusSpec& s) {
  std::vector<std::size_t> r;
  for (std::size_t v = 0; v < s.algebra.coords.size(); ++v) r.push_back(v);
  return r;
}

}  // namespace detail

// Random grade <= 2 elements of each sector stay in that sector under bullet.
inline bool sector_bullet_closure(const CalculusSpec& s, int samples = 10, unsigned seed = 1) {
  auto sec = sector_basis(s);
  if (!box_commutes_with_j(s)) throw PreconditionFailed("b", "(J (x) id) box != box J");
  if (!vec_box_commutes_with_j(s)) throw std::logic_error("dual box does not commute with J");
  std::mt19937 rng(seed);
  BulletEngine eng(s);
  auto coords = detail::all_coords(s);
  for (int side : {1, -1}) {
    const auto& idx = side > 0 ? sec.s10 : sec.s01;
    if (idx.empty()) continue;
    for (int k = 0; k < samples; ++k) {
      DiffOp v = detail::random_sector_op(rng, idx, coords, 2, 2);
      DiffOp w = detail::random_sector_op(rng, idx, coords, 2, 2);
      if (!in_sector(eng.product(v, w), sec, side)) return false;
    }
  }
  return true;
}

// Iterate a first-order operator dE : E -> Omega^1 (x) E in the style of nabla^(n):
// step = (id^m (x) P) box^<m> (x) id + id^m (x) dE. Keys are {forms..., module key...}.
inline Tensor iterate_derivative(const CalculusSpec& s, const Matrix& P, int n, const Tensor& e,
                                 const std::function<Tensor(const Tensor&)>& dE) {
  Tensor cur = e;
  for (int m = 0; m < n; ++m) {
    Tensor next;
    std::size_t ms = static_cast<std::size_t>(m);
    for (auto& [I, f] : cur.terms()) {
      Idx forms = slice(I, 0, ms);
      Tensor fe = Tensor::basis(slice(I, ms, I.size()), f);
      if (!forms.empty()) {
        Tensor bx = box_forms_basis(s, forms);
        if (!bx.is_zero()) next += outer(apply_slot(bx, ms, P), fe);
      }
      next += outer(Tensor::basis(forms), dE(fe));
    }
    cur = std::move(next);
  }
  return cur;
}

// del_E^(n) e with del_E = (pi^{1,0} (x) id) nabla_E, keys {i_1..i_n, b}.
inline Tensor partial_iter(const CalculusSpec& s, const ModuleConnection& E, int n, const Tensor& e) {
  auto d = decompose(s);
  if (!box_commutes_with_j(s)) throw PreconditionFailed("b", "(J (x) id) box != box J");
  return iterate_derivative(s, d.p10, n, e,
                            [&](const Tensor& x) { return apply_slot(nabla_module(s, E, x), 0, d.p10); });
}

inline Tensor project_forms(const Tensor& t, int n, const Matrix& P) {
  Tensor r = t;
  for (int k = 0; k < n; ++k) r = apply_slot(r, static_cast<std::size_t>(k), P);
  return r;
}

// Pair the grade-n part of v against the first n slots of iterates of e; keys are the rest.
inline Tensor pair_iterates(const DiffOp& v, const std::function<Tensor(int)>& iterate) {
  Tensor r;
  for (int n = 0; n <= v.top_grade(); ++n) {
    Tensor part = v.grade(static_cast<std::size_t>(n));
    if (part.is_zero()) continue;
    Tensor it = iterate(n);
    for (auto& [I, a] : part.terms()) {
      Idx R = reversed(I);
      for (auto& [K, g] : it.terms())
        if (std::equal(R.begin(), R.end(), K.begin())) r.add(slice(K, R.size(), K.size()), a * g);
    }
  }
  return r;
}

// --- dbar_HD --------------------------------------------------------------------------

// dbar_HD on TVec^{*,0}, values in Omega^{0,1} (x) TVec^{*,0} with keys {j, J...}.
// Every recursion step is computed from two liftings of dbar_HD(v) and in the
// compact form dbar u . v + u |> dbar_HD(v); all three must agree.
class DbarEngine {
 public:
  explicit DbarEngine(const CalculusSpec& s) : s_(s), c_(complex_structure(s)), bul_(s) {
    require(complex_conditions(s, c_, true), true);
  }

  const ComplexStructure& structure() const { return c_; }
  BulletEngine& bullets() { return bul_; }

  Tensor dbar(const AElem& a) const { return dbar0(s_, c_, a); }

  Tensor apply(const DiffOp& v) {
    if (!in_sector(v, c_.sec, 1)) throw PreconditionFailed("sector", "dbar_HD needs an element of TVec^{*,0}");
    Tensor r;
    for (auto& [I, f] : v.terms()) r += on_term(I, f);
    return r;
  }

  // del on Omega^{0,1} (x) TVec^{*,0}: (phi pi^{1,1} d (x) id) + (sigma (x) id)(id (x) del_HD).
  Tensor del(const Tensor& X) {
    Tensor r;
    for (auto& [K, h] : X.terms()) {
      Tensor xi = Tensor::basis({K[0]});
      Tensor w = Tensor::basis(slice(K, 1, K.size()), h);
      r += outer(c_.phi11(d1(s_, xi)), w);
      for (int i : c_.sec.s10)
        r -= outer(c_.phi11(wedge_at(s_, outer(xi, Tensor::basis({i})), 0)), bul_.basis_times({i}, w));
    }
    return r;
  }

  // v |> X = (ev^<n> (x) id)(v (x) del^(n) X).
  Tensor act(const DiffOp& v, const Tensor& X) {
    auto step = [&](const Tensor& x) { return del(x); };
    return pair_iterates(v, [&](int n) { return iterate_derivative(s_, c_.dec.p10, n, X, step); });
  }

  // (id (x) .)(X . w).
  Tensor right_bullet(const Tensor& X, const DiffOp& w) {
    Tensor r;
    for (auto& [K, h] : X.terms())
      r += outer(Tensor::basis({K[0]}), bul_.product(Tensor::basis(slice(K, 1, K.size()), h), w));
    return r;
  }

  // (w |> a) applied to the TVec leg of X.
  Tensor act_on_function(const Tensor& X, const AElem& a) const {
    Tensor r;
    for (auto& [K, h] : X.terms())
      r.add({K[0]}, ncdiff::act(s_, trivial_module(), Tensor::basis(slice(K, 1, K.size()), h), Tensor::basis({0}, a)).at({0}));
    return r;
  }

 private:
  // (ev (x) id)(u (x) t) for t keys {a, b}.
  static Tensor contract_first(const Tensor& u, const Tensor& t) {
    Tensor r;
    for (auto& [K, g] : t.terms()) {
      AElem x = u.at({K[0]});
      if (!x.is_zero()) r.add({K[1]}, x * g);
    }
    return r;
  }

  const Tensor& basis_value(const Idx& I) {
    auto it = memo_.find(I);
    if (it == memo_.end()) it = memo_.emplace(I, on_term(I, AElem(Scalar(1)))).first;
    return it->second;
  }

  Tensor on_term(const Idx& I, const AElem& f) {
    if (I.empty()) return dbar(f);
    int c = I[0];
    Idx rest = slice(I, 1, I.size());
    Tensor u = vec_field(c, f);
    Tensor v = Tensor::basis(rest);

    Tensor t1;
    Tensor bu = apply_slot(square_vec_n(s_, u), 0, c_.dec.p01);
    for (auto& [K, g] : bu.terms())
      t1 += outer(Tensor::basis({K[0]}), bul_.product(vec_field(K[1], g), v));

    Tensor lift1 = t1, lift2 = t1, compact = t1;
    if (!rest.empty()) {
      Tensor X = basis_value(rest);
      for (auto& [K, h] : X.terms()) {
        Idx W = slice(K, 1, K.size());
        lift1 += tail_terms(u, Tensor::basis({K[0]}), Tensor::basis(W, h));
        lift2 += tail_terms(u, Tensor::basis({K[0]}, h), Tensor::basis(W));
      }
      compact += contract_act(u, X);
    }
    if (lift1 != lift2) throw std::logic_error("dbar_HD depends on the lifting of its argument");
    if (lift1 != compact) throw std::logic_error("dbar_HD recursion disagrees with its compact form");

    Tensor r = lift1;
    Tensor l = bul_.low(c, v);
    if (!l.is_zero()) r -= apply(l.scaled(f));
    return r;
  }

  // -(ev (x) id)(u (x) phi(pi^{0,1} ^ pi^{1,0}) box xi) (x) w - (ev (x) id)(u (x) phi(xi ^ eta_i)) (x) eta^i . w
  Tensor tail_terms(const Tensor& u, const Tensor& xi, const Tensor& w) {
    Tensor r;
    Tensor bx = apply_slot(apply_slot(box_form(s_, xi), 0, c_.dec.p01), 1, c_.dec.p10);
    r -= outer(contract_first(u, c_.phi11(wedge_at(s_, bx, 0))), w);
    for (int i : c_.sec.s10) {
      Tensor y = contract_first(u, c_.phi11(wedge_at(s_, outer(xi, Tensor::basis({i})), 0)));
      if (!y.is_zero()) r -= outer(y, bul_.basis_times({i}, w));
    }
    return r;
  }

  // u |> X for a grade-one u.
  Tensor contract_act(const Tensor& u, const Tensor& X) {
    Tensor r;
    Tensor dx = del(X);
    for (auto& [K, g] : dx.terms()) {
      AElem x = u.at({K[0]});
      if (!x.is_zero()) r.add(slice(K, 1, K.size()), x * g);
    }
    return r;
  }

  const CalculusSpec& s_;
  ComplexStructure c_;
  BulletEngine bul_;
  std::map<Idx, Tensor> memo_;
};

inline Tensor dbar_hd(const CalculusSpec& s, const DiffOp& v) {
  DbarEngine eng(s);
  return eng.apply(v);
}

struct HoloOpReport {
  int kernel_samples = 0;
  int pairs = 0;
  bool closure = true;       // dbar_HD(v . w) = 0 for holomorphic v, w
  bool action = true;        // dbar(v |> a) = dbar_HD(v) |> a for holomorphic a
  bool product_rule = true;  // dbar_HD(v . w) = dbar_HD(v) . w + v |> dbar_HD(w)
  bool ok() const { return closure && action && product_rule; }
};

// Samples holomorphic operators (dbar_HD-kernel elements of grade <= 2 with
// holomorphic polynomial coefficients) and checks closure and the action identity;
// the product rule is checked on unrestricted sector elements.
inline HoloOpReport holo_op_tests(const CalculusSpec& s, int pairs = 20, unsigned seed = 3) {
  DbarEngine eng(s);
  const auto& c = eng.structure();
  HoloOpReport rep;
  std::mt19937 rng(seed);
  auto hc = holomorphic_coords(s, c);
  auto all = detail::all_coords(s);
  auto holo_fns = holomorphic_monomials(s, c, 3);
  auto& bul = eng.bullets();

  auto holomorphic_op = [&]() {
    for (int tries = 0; tries < 100; ++tries) {
      DiffOp v = detail::random_sector_op(rng, c.sec.s10, hc, 2, 2);
      if (eng.apply(v).is_zero()) {
        ++rep.kernel_samples;
        return v;
      }
    }
    throw std::logic_error("no holomorphic operators found among samples");
  };
  auto action_ok = [&](const DiffOp& v) {
    Tensor dv = eng.apply(v);
    for (auto& a : holo_fns) {
      AElem va = act(s, trivial_module(), v, Tensor::basis({0}, a)).at({0});
      if (eng.dbar(va) != eng.act_on_function(dv, a)) return false;
    }
    return true;
  };

  for (int k = 0; k < pairs; ++k) {
    DiffOp v = holomorphic_op(), w = holomorphic_op();
    ++rep.pairs;
    if (!eng.apply(bul.product(v, w)).is_zero()) rep.closure = false;
    if (!action_ok(v) || !action_ok(w)) rep.action = false;

    DiffOp x = detail::random_sector_op(rng, c.sec.s10, all, 2, 1);
    DiffOp y = detail::random_sector_op(rng, c.sec.s10, all, 2, 1);
    if (!action_ok(x)) rep.action = false;
    Tensor lhs = eng.apply(bul.product(x, y));
    Tensor rhs = eng.right_bullet(eng.apply(x), y) + eng.act(x, eng.apply(y));
    if (lhs != rhs) rep.product_rule = false;
  }
  return rep;
}

}  // namespace ncdiff

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ncdiff {

// Exponent vector indexed by variable position. Trailing zeros are trimmed so
// that each monomial has exactly one representation.
using Exponent = std::vector<int>;

inline void trim(Exponent& e) {
  while (!e.empty() && e.back() == 0) e.pop_back();
}

inline int total_degree(const Exponent& e) {
  int s = 0;
  for (int x : e) s += x;
  return s;
}

inline int exp_at(const Exponent& e, std::size_t v) { return v < e.size() ? e[v] : 0; }

inline Exponent exp_add(const Exponent& a, const Exponent& b) {
  Exponent r(std::max(a.size(), b.size()), 0);
  for (std::size_t k = 0; k < a.size(); ++k) r[k] += a[k];
  for (std::size_t k = 0; k < b.size(); ++k) r[k] += b[k];
  trim(r);
  return r;
}

// Graded lexicographic order, largest first.
struct GrlexGreater {
  bool operator()(const Exponent& a, const Exponent& b) const {
    int da = total_degree(a), db = total_degree(b);
    if (da != db) return da > db;
    std::size_t n = std::max(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) {
      int x = exp_at(a, k), y = exp_at(b, k);
      if (x != y) return x > y;
    }
    return false;
  }
};

template <class C>
class MultiPoly {
 public:
  using Terms = std::map<Exponent, C, GrlexGreater>;

  MultiPoly() = default;
  MultiPoly(const C& c) {  // NOLINT
    if (!is_zero_coeff(c)) terms_.emplace(Exponent{}, c);
  }

  static MultiPoly var(std::size_t v, int power = 1) {
    Exponent e(v + 1, 0);
    e[v] = power;
    trim(e);
    MultiPoly p;
    p.terms_.emplace(std::move(e), C(1));
    return p;
  }

  static MultiPoly monomial(Exponent e, const C& c) {
    trim(e);
    MultiPoly p;
    if (!is_zero_coeff(c)) p.terms_.emplace(std::move(e), c);
    return p;
  }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
  bool is_monomial() const { return terms_.size() == 1; }
  std::size_t size() const { return terms_.size(); }

  C constant_term() const {
    auto it = terms_.find(Exponent{});
    return it == terms_.end() ? C(0) : it->second;
  }

  const Exponent& leading_exponent() const { return terms_.begin()->first; }
  const C& leading_coeff() const { return terms_.begin()->second; }

  // Number of variable slots actually used.
  std::size_t nvars() const {
    std::size_t n = 0;
    for (auto& [e, c] : terms_) n = std::max(n, e.size());
    return n;
  }

  bool contains_var(std::size_t v) const {
    for (auto& [e, c] : terms_)
      if (exp_at(e, v) > 0) return true;
    return false;
  }

  int degree_in(std::size_t v) const {
    int d = 0;
    for (auto& [e, c] : terms_) d = std::max(d, exp_at(e, v));
    return d;
  }

  int total_deg() const {
    int d = 0;
    for (auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  void add_term(const Exponent& e, const C& c) {
    if (is_zero_coeff(c)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (is_zero_coeff(it->second)) terms_.erase(it);
    }
  }

  MultiPoly operator-() const {
    MultiPoly r;
    for (auto& [e, c] : terms_) r.terms_.emplace_hint(r.terms_.end(), e, -c);
    return r;
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    for (auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  MultiPoly& operator-=(const MultiPoly& o) {
    for (auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  MultiPoly& operator*=(const MultiPoly& o) { return *this = *this * o; }

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    MultiPoly r;
    if (a.is_zero() || b.is_zero()) return r;
    for (auto& [ea, ca] : a.terms_)
      for (auto& [eb, cb] : b.terms_) r.add_term(exp_add(ea, eb), ca * cb);
    return r;
  }

  MultiPoly scaled(const C& s) const {
    MultiPoly r;
    if (is_zero_coeff(s)) return r;
    for (auto& [e, c] : terms_) r.add_term(e, c * s);
    return r;
  }

  MultiPoly shifted(const Exponent& m) const {
    MultiPoly r;
    for (auto& [e, c] : terms_) r.terms_.emplace(exp_add(e, m), c);
    return r;
  }

  MultiPoly pow(int n) const {
    MultiPoly r(C(1)), b = *this;
    while (n > 0) {
      if (n & 1) r = r * b;
      n >>= 1;
      if (n) b = b * b;
    }
    return r;
  }

  MultiPoly diff(std::size_t v) const {
    MultiPoly r;
    for (auto& [e, c] : terms_) {
      int k = exp_at(e, v);
      if (k == 0) continue;
      Exponent f = e;
      f[v] -= 1;
      trim(f);
      r.add_term(f, c * C(static_cast<long>(k)));
    }
    return r;
  }

  // Coefficients with respect to variable v: degree -> polynomial free of v.
  std::map<int, MultiPoly> coeffs_in(std::size_t v) const {
    std::map<int, MultiPoly> out;
    for (auto& [e, c] : terms_) {
      int k = exp_at(e, v);
      Exponent f = e;
      if (v < f.size()) f[v] = 0;
      trim(f);
      out[k].add_term(f, c);
    }
    return out;
  }

  MultiPoly lead_coeff_in(std::size_t v) const { return coeffs_in(v).rbegin()->second; }

  template <class F>
  MultiPoly map_coeffs(F&& f) const {
    MultiPoly r;
    for (auto& [e, c] : terms_) r.add_term(e, f(c));
    return r;
  }

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const MultiPoly& a, const MultiPoly& b) { return !(a == b); }

 private:
  static bool is_zero_coeff(const C& c) { return c.is_zero(); }
  Terms terms_;
};

// --- polynomial arithmetic over a field of coefficients ---------------------

template <class C>
MultiPoly<C> make_monic(const MultiPoly<C>& p) {
  if (p.is_zero()) return p;
  C lc = p.leading_coeff();
  if (lc.is_one()) return p;
  return p.scaled(C(1) / lc);
}

// Exact division; throws if b does not divide a.
template <class C>
MultiPoly<C> divexact(MultiPoly<C> a, const MultiPoly<C>& b) {
  if (b.is_zero()) throw DivisionByZero();
  MultiPoly<C> q;
  if (b.is_constant()) return a.scaled(C(1) / b.leading_coeff());
  const Exponent& lb = b.leading_exponent();
  C inv = C(1) / b.leading_coeff();
  while (!a.is_zero()) {
    const Exponent& la = a.leading_exponent();
    Exponent m(std::max(la.size(), lb.size()), 0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = exp_at(la, k) - exp_at(lb, k);
      if (m[k] < 0) throw std::logic_error("divexact: not divisible");
    }
    trim(m);
    C c = a.leading_coeff() * inv;
    q.add_term(m, c);
    a -= b.shifted(m).scaled(c);
  }
  return q;
}

template <class C>
MultiPoly<C> poly_gcd(const MultiPoly<C>& a, const MultiPoly<C>& b);

namespace detail {

template <class C>
MultiPoly<C> monomial_gcd(const Exponent& m, const MultiPoly<C>& p) {
  Exponent g = m;
  for (auto& [e, c] : p.terms()) {
    g.resize(std::min(g.size(), e.size()));
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::min(g[k], e[k]);
  }
  trim(g);
  return MultiPoly<C>::monomial(g, C(1));
}

template <class C>
MultiPoly<C> content_in(const MultiPoly<C>& p, std::size_t v) {
  MultiPoly<C> g;
  for (auto& [k, c] : p.coeffs_in(v)) {
    g = poly_gcd(g, c);
    if (g.is_constant() && !g.is_zero()) break;
  }
  return g;
}

template <class C>
MultiPoly<C> pseudo_rem(MultiPoly<C> a, const MultiPoly<C>& b, std::size_t v) {
  int db = b.degree_in(v);
  MultiPoly<C> lb = b.lead_coeff_in(v);
  while (!a.is_zero()) {
    int da = a.degree_in(v);
    if (da < db) break;
    MultiPoly<C> la = a.lead_coeff_in(v);
    a = a * lb - la * MultiPoly<C>::var(v, da - db) * b;
  }
  return a;
}

template <class C>
MultiPoly<C> primitive_part(const MultiPoly<C>& p, std::size_t v) {
  if (p.is_zero()) return p;
  return make_monic(divexact(p, content_in(p, v)));
}

// Dense coefficients in v after fixing every other variable to point[k].
template <class C>
std::vector<C> eval_except(const MultiPoly<C>& p, std::size_t v, const std::vector<long>& point) {
  std::vector<C> out(p.degree_in(v) + 1, C(0));
  for (auto& [e, c] : p.terms()) {
    C t = c;
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (k == v || e[k] == 0) continue;
      long x = point[k];
      for (int j = 0; j < e[k]; ++j) t *= C(x);
    }
    out[exp_at(e, v)] += t;
  }
  return out;
}

template <class C>
void dense_trim(std::vector<C>& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

// Degree of the univariate gcd over the coefficient field.
template <class C>
int dense_gcd_degree(std::vector<C> a, std::vector<C> b) {
  dense_trim(a);
  dense_trim(b);
  if (a.size() < b.size()) std::swap(a, b);
  while (!b.empty()) {
    C inv = C(1) / b.back();
    while (a.size() >= b.size()) {
      C f = a.back() * inv;
      std::size_t shift = a.size() - b.size();
      for (std::size_t k = 0; k < b.size(); ++k) a[k + shift] -= f * b[k];
      dense_trim(a);
    }
    std::swap(a, b);
  }
  return static_cast<int>(a.size()) - 1;
}

// One-sided test: true only if gcd(a, b) is certainly constant. A common factor
// involving v survives specialization of the other variables as long as the
// leading coefficient of a in v does not vanish there.
template <class C>
bool coprime_by_evaluation(const MultiPoly<C>& a, const MultiPoly<C>& b) {
  std::size_t nv = std::max(a.nvars(), b.nvars());
  for (std::size_t v = 0; v < nv; ++v) {
    if (!a.contains_var(v) || !b.contains_var(v)) continue;
    MultiPoly<C> lc = a.lead_coeff_in(v);
    bool decided = false;
    for (long attempt = 0; attempt < 4 && !decided; ++attempt) {
      std::vector<long> point(nv);
      for (std::size_t k = 0; k < nv; ++k) point[k] = 3 + 7 * static_cast<long>(k) + 13 * attempt + (k * k) % 5;
      std::vector<C> l = eval_except(lc, v, point);
      if (l.empty() || l[0].is_zero()) continue;
      if (dense_gcd_degree(eval_except(a, v, point), eval_except(b, v, point)) > 0) return false;
      decided = true;
    }
    if (!decided) return false;
  }
  return true;
}

// Monic gcd of two polynomials in the single variable v, by field Euclid.
template <class C>
MultiPoly<C> univariate_gcd(MultiPoly<C> a, MultiPoly<C> b, std::size_t v) {
  if (a.degree_in(v) < b.degree_in(v)) std::swap(a, b);
  while (!b.is_zero()) {
    int db = b.degree_in(v);
    C inv = C(1) / b.leading_coeff();
    while (!a.is_zero() && a.degree_in(v) >= db) {
      C f = a.leading_coeff() * inv;
      a -= (MultiPoly<C>::var(v, a.degree_in(v) - db) * b).scaled(f);
    }
    std::swap(a, b);
  }
  return make_monic(a);
}

inline bool single_var(std::size_t v, std::size_t nv) { return nv == v + 1; }

}  // namespace detail

// Monic gcd by recursive content / primitive-part reduction.
template <class C>
MultiPoly<C> poly_gcd(const MultiPoly<C>& a, const MultiPoly<C>& b) {
  if (a.is_zero()) return make_monic(b);
  if (b.is_zero()) return make_monic(a);
  if (a.is_constant() || b.is_constant()) return MultiPoly<C>(C(1));
  if (a.is_monomial()) return detail::monomial_gcd(a.leading_exponent(), b);
  if (b.is_monomial()) return detail::monomial_gcd(b.leading_exponent(), a);
  if (a == b) return make_monic(a);

  std::size_t nv = std::max(a.nvars(), b.nvars());
  std::size_t v = 0;
  while (v < nv && !a.contains_var(v) && !b.contains_var(v)) ++v;
  bool ina = a.contains_var(v), inb = b.contains_var(v);
  if (!ina) return poly_gcd(a, detail::content_in(b, v));
  if (!inb) return poly_gcd(detail::content_in(a, v), b);
  if (detail::single_var(v, nv)) return detail::univariate_gcd(a, b, v);
  if (detail::coprime_by_evaluation(a, b)) return MultiPoly<C>(C(1));

  MultiPoly<C> ca = detail::content_in(a, v), cb = detail::content_in(b, v);
  MultiPoly<C> g = poly_gcd(ca, cb);
  MultiPoly<C> p = divexact(a, ca), r = divexact(b, cb);
  if (p.degree_in(v) < r.degree_in(v)) std::swap(p, r);
  while (!r.is_zero()) {
    if (r.degree_in(v) == 0) {
      p = MultiPoly<C>(C(1));
      break;
    }
    MultiPoly<C> s = detail::pseudo_rem(p, r, v);
    p = std::move(r);
    r = detail::primitive_part(s, v);
  }
  if (p.degree_in(v) > 0) p = detail::primitive_part(p, v);
  return make_monic(g * p);
}

}  // namespace ncdiff

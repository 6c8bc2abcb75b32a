#pragma once

#include <map>
#include <utility>

#include "gaussian_rational.hpp"
#include "multipoly.hpp"

namespace ncdiff {

using Poly = MultiPoly<GaussianRational>;

// Element of Q(i)(p_1..p_m). Variables are positional; names live with the
// caller (see expression.hpp).
class Scalar {
 public:
  Scalar() : num_(), den_(GaussianRational(1)) {}
  Scalar(long v) : num_(GaussianRational(v)), den_(GaussianRational(1)) {}  // NOLINT
  Scalar(const GaussianRational& g) : num_(g), den_(GaussianRational(1)) {}  // NOLINT
  Scalar(const Poly& p) : num_(p), den_(GaussianRational(1)) {}  // NOLINT
  Scalar(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) { normalize(); }

  static Scalar var(std::size_t v) { return Scalar(Poly::var(v)); }
  static Scalar imag_unit() { return Scalar(GaussianRational::imag_unit()); }
  static Scalar rational(long n, long d) { return Scalar(GaussianRational(mpq_class(n, d))); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_one() const { return den_.is_constant() && num_.is_constant() && num_.constant_term().is_one(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  GaussianRational constant_value() const { return num_.constant_term() / den_.constant_term(); }

  Scalar operator-() const {
    Scalar r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
  Scalar& operator/=(const Scalar& o) { return *this = *this / o; }

  friend Scalar operator+(const Scalar& a, const Scalar& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den_ == b.den_) return Scalar(a.num_ + b.num_, a.den_);
    return Scalar(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }
  friend Scalar operator*(const Scalar& a, const Scalar& b) {
    if (a.is_zero() || b.is_zero()) return Scalar();
    if (a.den_.is_constant() && b.den_.is_constant()) {
      Scalar r;
      r.num_ = a.num_ * b.num_;
      r.den_ = Poly(GaussianRational(1));
      return r;
    }
    // Cross-cancel first to keep intermediate sizes down.
    Poly g1 = poly_gcd(a.num_, b.den_), g2 = poly_gcd(b.num_, a.den_);
    Poly n = divexact(a.num_, g1) * divexact(b.num_, g2);
    Poly d = divexact(a.den_, g2) * divexact(b.den_, g1);
    return Scalar(std::move(n), std::move(d));
  }
  friend Scalar operator/(const Scalar& a, const Scalar& b) {
    if (b.is_zero()) throw DivisionByZero();
    return a * b.inverse();
  }

  Scalar inverse() const {
    if (is_zero()) throw DivisionByZero();
    return Scalar(den_, num_);
  }

  Scalar pow(int n) const {
    if (n < 0) return inverse().pow(-n);
    Scalar r;
    r.num_ = num_.pow(n);
    r.den_ = den_.pow(n);
    r.normalize();
    return r;
  }

  Scalar diff(std::size_t v) const {
    Poly n = num_.diff(v) * den_ - num_ * den_.diff(v);
    return Scalar(std::move(n), den_ * den_);
  }

  bool depends_on(std::size_t v) const { return num_.contains_var(v) || den_.contains_var(v); }

  friend bool operator==(const Scalar& a, const Scalar& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

  // Re-normalizing an already normal value is a no-op.
  void normalize() {
    if (den_.is_zero()) throw DivisionByZero();
    if (num_.is_zero()) {
      den_ = Poly(GaussianRational(1));
      return;
    }
    if (!den_.is_constant()) {
      Poly g = poly_gcd(num_, den_);
      if (!g.is_constant()) {
        num_ = divexact(num_, g);
        den_ = divexact(den_, g);
      }
    }
    GaussianRational lc = den_.leading_coeff();
    if (!lc.is_one()) {
      GaussianRational inv = GaussianRational(1) / lc;
      num_ = num_.scaled(inv);
      den_ = den_.scaled(inv);
    }
  }

 private:
  Poly num_;
  Poly den_;
};

// Evaluate a polynomial with some variables replaced.
inline Scalar evaluate(const Poly& p, const std::map<std::size_t, Scalar>& bindings) {
  Scalar acc;
  std::map<std::pair<std::size_t, int>, Scalar> powers;
  for (auto& [e, c] : p.terms()) {
    Exponent rest = e;
    Scalar t(c);
    for (std::size_t v = 0; v < e.size(); ++v) {
      if (e[v] == 0) continue;
      auto it = bindings.find(v);
      if (it == bindings.end()) continue;
      auto key = std::make_pair(v, e[v]);
      auto pit = powers.find(key);
      if (pit == powers.end()) pit = powers.emplace(key, it->second.pow(e[v])).first;
      t *= pit->second;
      rest[v] = 0;
    }
    trim(rest);
    t *= Scalar(Poly::monomial(rest, GaussianRational(1)));
    acc += t;
  }
  return acc;
}

inline Scalar substitute(const Scalar& s, const std::map<std::size_t, Scalar>& bindings) {
  Scalar n = evaluate(s.num(), bindings);
  Scalar d = evaluate(s.den(), bindings);
  if (d.is_zero()) throw ZeroDenominator("substitution makes a denominator vanish");
  return n / d;
}

}  // namespace ncdiff

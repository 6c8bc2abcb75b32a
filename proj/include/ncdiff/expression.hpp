#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "scalar.hpp"

namespace ncdiff {

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& names) : s_(text), names_(names) {}

  Scalar run() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    Scalar v = expr();
    skip();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return v;
  }

 private:
  enum class AtomKind { Number, Ident, Paren };

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  Scalar expr() {
    Scalar v = term();
    for (;;) {
      if (peek('+')) {
        ++pos_;
        v += term();
      } else if (peek('-')) {
        ++pos_;
        v -= term();
      } else {
        return v;
      }
    }
  }

  Scalar term() {
    Scalar v = unary();
    for (;;) {
      if (peek('*')) {
        ++pos_;
        v *= unary();
      } else if (peek('/')) {
        std::size_t at = pos_++;
        Scalar d = unary();
        if (d.is_zero()) throw ZeroDenominator("division by zero at byte " + std::to_string(at));
        v /= d;
      } else {
        return v;
      }
    }
  }

  Scalar unary() {
    if (peek('-')) {
      ++pos_;
      return -unary();
    }
    if (peek('+')) throw ParseError("unexpected '+'", pos_);
    return power();
  }

  Scalar power() {
    AtomKind kind;
    Scalar base = atom(kind);
    if (!peek('^')) return base;
    std::size_t at = pos_++;
    skip();
    bool neg = false;
    if (pos_ < s_.size() && s_[pos_] == '-') {
      neg = true;
      ++pos_;
      skip();
    }
    std::size_t start = pos_;
    long n = integer();
    if (neg && kind == AtomKind::Number)
      throw ParseError("negative exponent needs an identifier or parenthesized base", start);
    if (peek('^')) throw ParseError("chained exponent", pos_);
    if (neg) {
      if (base.is_zero()) throw ZeroDenominator("zero raised to a negative power at byte " + std::to_string(at));
      return base.pow(-static_cast<int>(n));
    }
    return base.pow(static_cast<int>(n));
  }

  long integer() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected integer", start);
    if (pos_ - start > 6) throw ParseError("exponent too large", start);
    return std::stol(std::string(s_.substr(start, pos_ - start)));
  }

  Scalar atom(AtomKind& kind) {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      kind = AtomKind::Number;
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      mpz_class z(std::string(s_.substr(start, pos_ - start)));
      return Scalar(GaussianRational(mpq_class(z)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      kind = AtomKind::Ident;
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string id(s_.substr(start, pos_ - start));
      if (id == "i") return Scalar::imag_unit();
      for (std::size_t k = 0; k < names_.size(); ++k)
        if (names_[k] == id) return Scalar::var(k);
      throw UnknownIdentifier(id, start);
    }
    if (c == '(') {
      kind = AtomKind::Paren;
      ++pos_;
      Scalar v = expr();
      if (!peek(')')) throw ParseError("expected ')'", pos_);
      ++pos_;
      return v;
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string_view s_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

inline std::string render_monomial(const Exponent& e, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t v = 0; v < e.size(); ++v) {
    if (e[v] == 0) continue;
    if (!out.empty()) out += "*";
    out += v < names.size() ? names[v] : "x" + std::to_string(v);
    if (e[v] != 1) out += "^" + std::to_string(e[v]);
  }
  return out;
}

inline std::string render_term(const GaussianRational& c, const Exponent& e,
                               const std::vector<std::string>& names, bool first) {
  if (e.empty()) return c.str(!first);
  std::string m = render_monomial(e, names);
  if (c.is_one()) return m;
  if (c == GaussianRational(-1)) return "-" + m;
  return c.str(true) + "*" + m;
}

}  // namespace detail

inline Scalar parse_scalar(std::string_view text, const std::vector<std::string>& names) {
  return detail::Parser(text, names).run();
}

inline std::string render_poly(const Poly& p, const std::vector<std::string>& names) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (auto& [e, c] : p.terms()) {
    if (first) {
      out = detail::render_term(c, e, names, p.size() == 1);
      first = false;
    } else if (c.renders_negative()) {
      out += " - " + detail::render_term(-c, e, names, false);
    } else {
      out += " + " + detail::render_term(c, e, names, false);
    }
  }
  return out;
}

inline std::string render(const Scalar& s, const std::vector<std::string>& names) {
  const Poly& n = s.num();
  const Poly& d = s.den();
  if (d.is_constant()) return render_poly(n, names);
  std::string ns;
  if (n.size() > 1)
    ns = "(" + render_poly(n, names) + ")";
  else if (n.is_constant())
    ns = n.leading_coeff().str(true);
  else
    ns = render_poly(n, names);
  std::string ds = render_poly(d, names);
  bool single_power = d.is_monomial() && d.leading_coeff().is_one() &&
                      std::count_if(d.leading_exponent().begin(), d.leading_exponent().end(),
                                    [](int x) { return x != 0; }) == 1;
  if (!single_power) ds = "(" + ds + ")";
  return ns + "/" + ds;
}

}  // namespace ncdiff

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "calculus.hpp"

namespace ncdiff {

using Json = nlohmann::ordered_json;

// Calculus files: JSON documents whose coefficients are expression strings.
//
//   {"name": "...",
//    "field": {"parameters": ["q", ...]},
//    "algebra": {"type": "constants" | "polynomial", "vars": [...], "d": [[v, k, "expr"], ...]},
//    "omega1": {"basis": [...]}, "omega2": {"basis": [...]}, "vec": {"basis": [...]},
//    "wedge": [[i, j, k, "expr"], ...],        xi_i ^ xi_j = sum expr omega_k
//    "d1": [[i, k, "expr"], ...],              d xi_i = sum expr omega_k
//    "connection": {"gamma": [[k, i, j, "expr"], ...],
//                   "sigma_inv": [[i, j, a, b, "expr"], ...]},
//    "complex": {"J": [[i, j, "expr"], ...]}}
//
// Entries not listed are zero. "vec", "connection", "sigma_inv" and "complex" are optional.

namespace detail {

inline std::vector<std::string> names_of(const Json& j, const char* section) {
  if (!j.contains(section) || !j[section].contains("basis")) throw SpecError(std::string("missing ") + section + ".basis");
  return j[section]["basis"].get<std::vector<std::string>>();
}

inline int index_in(const Json& v, int bound, const std::string& what) {
  if (!v.is_number_integer()) throw SpecError(what + ": index is not an integer");
  int x = v.get<int>();
  if (x < 0 || x >= bound) throw SpecError(what + ": index " + std::to_string(x) + " out of range");
  return x;
}

inline Json rows(const Json& j, std::size_t arity, const std::string& what) {
  if (!j.is_array()) throw SpecError(what + " must be an array");
  for (auto& r : j)
    if (!r.is_array() || r.size() != arity || !r.back().is_string())
      throw SpecError(what + ": each entry needs " + std::to_string(arity - 1) + " indices and an expression");
  return j;
}

}  // namespace detail

inline CalculusSpec calculus_from_json(const Json& j) {
  try {
    CalculusSpec s;
    s.name = j.value("name", std::string("calculus"));
    if (j.contains("field")) s.params = j["field"].value("parameters", std::vector<std::string>{});
    const Json& alg = j.at("algebra");
    std::string type = alg.value("type", std::string("constants"));
    if (type == "constants")
      s.algebra.kind = CoeffAlgebra::Kind::constants;
    else if (type == "polynomial")
      s.algebra.kind = CoeffAlgebra::Kind::polynomial;
    else
      throw SpecError("unknown algebra type '" + type + "'");
    s.algebra.coords = alg.value("vars", std::vector<std::string>{});
    s.omega1 = detail::names_of(j, "omega1");
    s.omega2 = detail::names_of(j, "omega2");
    s.n1 = static_cast<int>(s.omega1.size());
    s.n2 = static_cast<int>(s.omega2.size());
    if (j.contains("vec")) {
      s.vec = detail::names_of(j, "vec");
    } else {
      for (int i = 0; i < s.n1; ++i) s.vec.push_back("u" + std::to_string(i));
    }
    int nv = static_cast<int>(s.algebra.coords.size());
    auto sc = [&](const Json& e) { return parse_scalar(e.get<std::string>(), s.params); };
    auto ae = [&](const Json& e) { return parse_aelem(e.get<std::string>(), s); };

    s.algebra.dcoord.assign(nv, std::vector<AElem>(s.n1));
    if (alg.contains("d"))
      for (auto& r : detail::rows(alg["d"], 3, "algebra.d"))
        s.algebra.dcoord[detail::index_in(r[0], nv, "algebra.d")][detail::index_in(r[1], s.n1, "algebra.d")] +=
            ae(r[2]);

    s.W.assign(s.n1, std::vector<std::vector<Scalar>>(s.n1, std::vector<Scalar>(s.n2)));
    for (auto& r : detail::rows(j.value("wedge", Json::array()), 4, "wedge"))
      s.W[detail::index_in(r[0], s.n1, "wedge")][detail::index_in(r[1], s.n1, "wedge")]
         [detail::index_in(r[2], s.n2, "wedge")] += sc(r[3]);

    s.N.assign(s.n1, std::vector<Scalar>(s.n2));
    for (auto& r : detail::rows(j.value("d1", Json::array()), 3, "d1"))
      s.N[detail::index_in(r[0], s.n1, "d1")][detail::index_in(r[1], s.n2, "d1")] += sc(r[2]);

    if (j.contains("connection")) {
      const Json& c = j["connection"];
      if (c.contains("gamma")) {
        std::vector<std::vector<std::vector<AElem>>> G(
            s.n1, std::vector<std::vector<AElem>>(s.n1, std::vector<AElem>(s.n1)));
        for (auto& r : detail::rows(c["gamma"], 4, "connection.gamma"))
          G[detail::index_in(r[0], s.n1, "gamma")][detail::index_in(r[1], s.n1, "gamma")]
           [detail::index_in(r[2], s.n1, "gamma")] += ae(r[3]);
        s.gamma = G;
      }
      if (c.contains("sigma_inv")) {
        int m = s.n1 * s.n1;
        std::vector<std::vector<AElem>> S(m, std::vector<AElem>(m));
        for (auto& r : detail::rows(c["sigma_inv"], 5, "connection.sigma_inv")) {
          int i = detail::index_in(r[0], s.n1, "sigma_inv"), jj = detail::index_in(r[1], s.n1, "sigma_inv");
          int a = detail::index_in(r[2], s.n1, "sigma_inv"), b = detail::index_in(r[3], s.n1, "sigma_inv");
          S[s.pair(i, jj)][s.pair(a, b)] += ae(r[4]);
        }
        s.sigma_inv = S;
      }
    }
    if (j.contains("complex") && j["complex"].contains("J")) {
      Matrix J = zero_matrix(s.n1, s.n1);
      for (auto& r : detail::rows(j["complex"]["J"], 3, "complex.J"))
        J[detail::index_in(r[0], s.n1, "J")][detail::index_in(r[1], s.n1, "J")] += sc(r[2]);
      s.J = J;
    }
    validate(s);
    return s;
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed calculus file: ") + e.what());
  } catch (const ParseError& e) {
    throw SpecError(std::string("bad expression: ") + e.what());
  } catch (const UnknownIdentifier& e) {
    throw SpecError(std::string("bad expression: ") + e.what());
  }
}

inline Json calculus_to_json(const CalculusSpec& s) {
  auto sc = [&](const Scalar& x) { return render_scalar(x, s); };
  auto ae = [&](const AElem& a) { return render_aelem(a, s); };
  Json j;
  j["name"] = s.name;
  j["field"]["parameters"] = s.params;
  Json alg;
  alg["type"] = s.algebra.kind == CoeffAlgebra::Kind::constants ? "constants" : "polynomial";
  alg["vars"] = s.algebra.coords;
  Json d = Json::array();
  for (std::size_t v = 0; v < s.algebra.dcoord.size(); ++v)
    for (int k = 0; k < s.n1; ++k)
      if (!s.algebra.dcoord[v][k].is_zero()) d.push_back({v, k, ae(s.algebra.dcoord[v][k])});
  alg["d"] = d;
  j["algebra"] = alg;
  j["omega1"]["basis"] = s.omega1;
  j["omega2"]["basis"] = s.omega2;
  j["vec"]["basis"] = s.vec;
  Json w = Json::array();
  for (int a = 0; a < s.n1; ++a)
    for (int b = 0; b < s.n1; ++b)
      for (int k = 0; k < s.n2; ++k)
        if (!s.W[a][b][k].is_zero()) w.push_back({a, b, k, sc(s.W[a][b][k])});
  j["wedge"] = w;
  Json n = Json::array();
  for (int a = 0; a < s.n1; ++a)
    for (int k = 0; k < s.n2; ++k)
      if (!s.N[a][k].is_zero()) n.push_back({a, k, sc(s.N[a][k])});
  j["d1"] = n;
  if (s.gamma || s.sigma_inv) {
    Json c = Json::object();
    if (s.gamma) {
      Json g = Json::array();
      for (int k = 0; k < s.n1; ++k)
        for (int a = 0; a < s.n1; ++a)
          for (int b = 0; b < s.n1; ++b)
            if (!(*s.gamma)[k][a][b].is_zero()) g.push_back({k, a, b, ae((*s.gamma)[k][a][b])});
      c["gamma"] = g;
    }
    if (s.sigma_inv) {
      Json g = Json::array();
      for (int a = 0; a < s.n1; ++a)
        for (int b = 0; b < s.n1; ++b)
          for (int x = 0; x < s.n1; ++x)
            for (int y = 0; y < s.n1; ++y) {
              const AElem& e = (*s.sigma_inv)[s.pair(a, b)][s.pair(x, y)];
              if (!e.is_zero()) g.push_back({a, b, x, y, ae(e)});
            }
      c["sigma_inv"] = g;
    }
    j["connection"] = c;
  }
  if (s.J) {
    Json J = Json::array();
    for (int a = 0; a < s.n1; ++a)
      for (int b = 0; b < s.n1; ++b)
        if (!(*s.J)[a][b].is_zero()) J.push_back({a, b, sc((*s.J)[a][b])});
    j["complex"]["J"] = J;
  }
  return j;
}

namespace detail {

// Indented JSON with arrays of primitives kept on one line.
inline void pretty(const Json& j, int indent, std::string& out) {
  auto flat = [](const Json& a) {
    for (auto& x : a)
      if (x.is_structured()) return false;
    return true;
  };
  std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object() && !j.empty()) {
    out += "{\n";
    std::size_t k = 0;
    for (auto& [key, v] : j.items()) {
      out += pad + Json(key).dump() + ": ";
      pretty(v, indent + 2, out);
      out += ++k < j.size() ? ",\n" : "\n";
    }
    out += std::string(static_cast<std::size_t>(indent), ' ') + "}";
  } else if (j.is_array() && !j.empty() && !flat(j)) {
    out += "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      out += pad;
      pretty(j[k], indent + 2, out);
      out += k + 1 < j.size() ? ",\n" : "\n";
    }
    out += std::string(static_cast<std::size_t>(indent), ' ') + "]";
  } else {
    out += j.dump();
  }
}

}  // namespace detail

inline std::string serialize_calculus(const CalculusSpec& s) {
  std::string out;
  detail::pretty(calculus_to_json(s), 0, out);
  return out + "\n";
}

inline CalculusSpec parse_calculus(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw SpecError(std::string("calculus file is not valid JSON: ") + e.what());
  }
  return calculus_from_json(j);
}

inline CalculusSpec load_calculus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_calculus(ss.str());
}

inline bool same_spec(const CalculusSpec& a, const CalculusSpec& b) {
  return a.name == b.name && a.params == b.params && a.algebra.kind == b.algebra.kind &&
         a.algebra.coords == b.algebra.coords && a.algebra.dcoord == b.algebra.dcoord && a.n1 == b.n1 &&
         a.n2 == b.n2 && a.omega1 == b.omega1 && a.omega2 == b.omega2 && a.vec == b.vec && a.W == b.W &&
         a.N == b.N && a.gamma == b.gamma && a.sigma_inv == b.sigma_inv && a.J == b.J;
}

}  // namespace ncdiff

#pragma once

#include <random>
#include <string>
#include <vector>

#include "complex.hpp"
#include "library.hpp"

namespace ncdiff {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  bool informational = false;  // reported, never counted as a failure
};

struct SuiteReport {
  std::string suite;
  std::string calculus;
  std::vector<CheckResult> checks;
  bool ok() const {
    for (auto& c : checks)
      if (!c.informational && !c.passed) return false;
    return true;
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"associativity", "action",  "curvature-op", "relations-annihilate",
                                                 "complex",       "theta",   "symbols",      "su2q-consistency"};
  return names;
}

namespace detail {

inline std::vector<int> all_indices(const CalculusSpec& s) {
  std::vector<int> r;
  for (int i = 0; i < s.n1; ++i) r.push_back(i);
  return r;
}

inline DiffOp random_op(std::mt19937& rng, const CalculusSpec& s, int maxgrade = 2, int maxdeg = 2) {
  return random_sector_op(rng, all_indices(s), all_coords(s), maxgrade, maxdeg);
}

inline Tensor random_module_element(std::mt19937& rng, const CalculusSpec& s, int rank) {
  Tensor e;
  for (int b = 0; b < rank; ++b) e.add({b}, random_coeff(rng, all_coords(s), 2));
  if (e.is_zero()) e.add({0}, AElem(Scalar(1)));
  return e;
}

inline void need_sigma(const CalculusSpec& s, const std::string& why) {
  if (!s.sigma_inv) throw sigma_required("calculus '" + s.name + "' has no sigma^-1; " + why);
}

inline CheckResult check(const std::string& name, bool ok, const std::string& detail = "") {
  return {name, ok, detail, false};
}

}  // namespace detail

// Omega^1 with sigma_E = sigma, the inverse of the calculus sigma^-1.
inline ModuleConnection omega1_with_sigma(const CalculusSpec& s) {
  detail::need_sigma(s, "theta on Omega^1 needs sigma");
  int m = s.n1 * s.n1;
  Matrix S = zero_matrix(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const AElem& x = (*s.sigma_inv)[r][c];
      if (x.total_deg() > 0) throw MissingCapability("sigma_E_required", "sigma^-1 has non-constant entries");
      S[r][c] = x.constant_term();
    }
  auto inv = inverse(S);
  if (!inv) throw MissingCapability("sigma_E_required", "sigma^-1 is not invertible, so Omega1 has no sigma_E");
  ModuleConnection E = omega1_module(s);
  std::vector<std::vector<Tensor>> sg(s.n1, std::vector<Tensor>(s.n1));
  // sigma(xi_a (x) xi_d) = sum S'[(a,d)][(x,y)] xi_x (x) xi_y, form first
  for (int a = 0; a < s.n1; ++a)
    for (int d = 0; d < s.n1; ++d)
      for (int x = 0; x < s.n1; ++x)
        for (int y = 0; y < s.n1; ++y) {
          const Scalar& v = (*inv)[s.pair(a, d)][s.pair(x, y)];
          if (!v.is_zero()) sg[a][d].add({x, y}, AElem(v));
        }
  E.sigma_E = sg;
  return E;
}

inline SuiteReport suite_associativity(const CalculusSpec& s, int samples = 20, unsigned seed = 1) {
  detail::need_sigma(s, "bullet products of grade 2 operators need sigma^-1");
  SuiteReport rep{"associativity", s.name, {}};
  std::mt19937 rng(seed);
  BulletEngine eng(s);
  int bad = 0;
  for (int k = 0; k < samples; ++k) {
    DiffOp u = detail::random_op(rng, s), v = detail::random_op(rng, s), w = detail::random_op(rng, s);
    if (eng.product(eng.product(u, v), w) != eng.product(u, eng.product(v, w))) ++bad;
  }
  rep.checks.push_back(detail::check("(u.v).w = u.(v.w)", bad == 0,
                                     std::to_string(samples - bad) + "/" + std::to_string(samples) + " triples"));
  return rep;
}

inline SuiteReport suite_action(const CalculusSpec& s, int samples = 20, unsigned seed = 2) {
  detail::need_sigma(s, "the action law on grade 2 operators needs sigma^-1");
  SuiteReport rep{"action", s.name, {}};
  std::mt19937 rng(seed);
  BulletEngine eng(s);
  std::vector<ModuleConnection> mods = {trivial_module()};
  if (s.gamma) mods.push_back(omega1_module(s));
  for (auto& E : mods) {
    int bad = 0;
    for (int k = 0; k < samples; ++k) {
      DiffOp v = detail::random_op(rng, s), w = detail::random_op(rng, s);
      Tensor e = detail::random_module_element(rng, s, E.rank);
      if (act(s, E, eng.product(v, w), e) != act(s, E, v, act(s, E, w, e))) ++bad;
    }
    rep.checks.push_back(detail::check("(v.w)|>e = v|>(w|>e) on " + E.name, bad == 0,
                                       std::to_string(samples - bad) + "/" + std::to_string(samples) + " pairs"));
  }
  return rep;
}

inline SuiteReport suite_curvature_op(const CalculusSpec& s, int samples = 10, unsigned seed = 3) {
  SuiteReport rep{"curvature-op", s.name, {}};
  std::mt19937 rng(seed);
  ModuleConnection E = omega1_module(s);
  auto R = curvature_element(s);
  int bad = 0, total = 0;
  auto test = [&](const Tensor& e) {
    Tensor lhs;
    for (int m = 0; m < s.n2; ++m) lhs += outer(Tensor::basis({m}), act(s, E, R.component(m), e));
    ++total;
    if (lhs != module_curvature(s, E, e)) ++bad;
  };
  for (int a = 0; a < s.n1; ++a) test(Tensor::basis({a}));
  for (int k = 0; k < samples; ++k) test(detail::random_module_element(rng, s, E.rank));
  rep.checks.push_back(detail::check("R|>e = R_E(e) on Omega1", bad == 0,
                                     std::to_string(total - bad) + "/" + std::to_string(total) + " elements"));
  rep.checks.push_back({"Omega1 flat", is_flat(s), is_flat(s) ? "flat" : "curved", true});
  return rep;
}

inline SuiteReport suite_relations_annihilate(const CalculusSpec& s, int samples = 10, unsigned seed = 4) {
  SuiteReport rep{"relations-annihilate", s.name, {}};
  std::mt19937 rng(seed);
  auto rel = da_relations(s);
  ModuleConnection A = trivial_module();
  bool ok = true;
  for (int k = 0; k < samples; ++k) {
    Tensor e = detail::random_module_element(rng, s, 1);
    for (auto& r : rel) ok = ok && act(s, A, r, e).is_zero();
  }
  rep.checks.push_back(detail::check("relations annihilate A", ok));
  if (s.gamma) {
    ModuleConnection E = omega1_module(s);
    bool flat = is_flat(s);
    bool annihilated = true;
    for (int a = 0; a < s.n1; ++a)
      for (auto& r : rel) annihilated = annihilated && act(s, E, r, Tensor::basis({a})).is_zero();
    if (flat)
      rep.checks.push_back(detail::check("relations annihilate flat Omega1", annihilated));
    else
      rep.checks.push_back(detail::check("curved Omega1 detected by a relation", !annihilated));
  }
  return rep;
}

inline SuiteReport suite_complex(const CalculusSpec& s) {
  SuiteReport rep{"complex", s.name, {}};
  auto c = complex_structure(s);
  rep.checks.push_back(detail::check("integrable", integrable(s)));
  auto k = complex_conditions(s, c, s.sigma_inv.has_value());
  rep.checks.push_back(detail::check("condition (a)", k.a));
  rep.checks.push_back(detail::check("condition (b)", k.b));
  rep.checks.push_back(detail::check("condition (c)", k.c));
  if (!s.sigma_inv) {
    rep.checks.push_back({"condition (d)", false, "no sigma^-1, dbar_HD checks skipped", true});
    return rep;
  }
  rep.checks.push_back(detail::check("condition (d)", k.d));
  if (!(k.a && k.b && k.c && k.d)) return rep;
  auto h = holo_op_tests(s, 10);
  rep.checks.push_back(detail::check("holomorphic closure", h.closure, std::to_string(h.pairs) + " pairs"));
  rep.checks.push_back(detail::check("action identity", h.action));
  rep.checks.push_back(detail::check("dbar_HD product rule", h.product_rule));
  return rep;
}

inline SuiteReport suite_theta(const CalculusSpec& s, int samples = 20, unsigned seed = 5) {
  SuiteReport rep{"theta", s.name, {}};
  std::mt19937 rng(seed);
  std::vector<ModuleConnection> mods = {with_flip_sigma(trivial_module(), s.n1)};
  if (s.gamma) {
    try {
      mods.push_back(omega1_with_sigma(s));
    } catch (const MissingCapability& e) {
      if (!s.sigma_inv) throw;
      rep.checks.push_back({"Omega1", false, std::string("skipped: ") + e.what(), true});
    }
  }
  for (auto& E : mods) {
    ThetaEngine eng(s, E);
    int bad = 0;
    for (int k = 0; k < samples; ++k) {
      DiffOp v = detail::random_op(rng, s), w = detail::random_op(rng, s);
      Tensor e = detail::random_module_element(rng, s, E.rank);
      Tensor lhs = eng.apply(bullet(s, v, w), e);
      Tensor rhs, tw = eng.apply(w, e);
      for (auto& [K, y] : tw.terms())
        rhs += eng.right_bullet(eng.apply(v, Tensor::basis({K[0]})), Tensor::basis(slice(K, 1, K.size()), y));
      if (lhs != rhs) ++bad;
    }
    rep.checks.push_back(detail::check("theta product law on " + E.name, bad == 0,
                                       std::to_string(samples - bad) + "/" + std::to_string(samples)));
    bool flat = E.name == "A" || is_flat(s);
    if (!flat) continue;
    auto t = theta_relation_check(s, E);
    rep.checks.push_back(detail::check("sigma_E descends on " + E.name, t.sigma_descends));
    rep.checks.push_back(detail::check("theta on relations on " + E.name, t.prop_identity));
    rep.checks.push_back(detail::check("ideal stable to grade 3 on " + E.name, t.ideal_stable));
  }
  return rep;
}

inline SuiteReport suite_symbols(const CalculusSpec& s, int samples = 50, unsigned seed = 6) {
  SuiteReport rep{"symbols", s.name, {}};
  std::mt19937 rng(seed);
  auto rel = da_relations(s);
  bool ok = true;
  for (int k = 0; k < s.n2; ++k) {
    DiffOp expect;
    for (int i = 0; i < s.n1; ++i)
      for (int j = 0; j < s.n1; ++j)
        if (!s.W[i][j][k].is_zero()) expect.add({j, i}, AElem(-s.W[i][j][k]));
    if (expect.is_zero()) continue;
    ok = ok && symbol(rel[k]) == expect;
  }
  rep.checks.push_back(detail::check("symbol of each relation is -sum W u_j (x) u_i", ok));
  int grade = s.sigma_inv ? 2 : 1;
  BulletEngine eng(s);
  int bad = 0, n = 0;
  while (n < samples) {
    DiffOp v = detail::random_op(rng, s, grade), w = detail::random_op(rng, s, grade);
    if (v.is_zero() || w.is_zero()) continue;
    ++n;
    if (symbol(eng.product(v, w)) != outer(symbol(v), symbol(w))) ++bad;
  }
  rep.checks.push_back(detail::check("symbol(v.w) = symbol(v) (x) symbol(w)", bad == 0,
                                     std::to_string(n - bad) + "/" + std::to_string(n) + " pairs, grade <= " +
                                         std::to_string(grade)));
  return rep;
}

inline std::string render_bindings(const Bindings& b) {
  std::string out;
  for (auto& [k, v] : b) out += (out.empty() ? "" : ", ") + k + " = " + render(v, su2q_param_names());
  return out;
}

inline SuiteReport suite_su2q_consistency() {
  SuiteReport rep{"su2q-consistency", "su2q", {}};
  CalculusSpec s = su2q_3d();
  auto unk = su2q_unknowns();
  auto derived = su2q_consistency_equations();
  rep.checks.push_back(detail::check("derived equations = printed seven", same_up_to_scalars(derived, su2q_golden_equations(), unk),
                                     std::to_string(derived.size()) + " derived"));
  auto words = relation_words(s);
  auto rel = da_relations(s);
  bool wok = true;
  for (int k = 0; k < s.n2; ++k) wok = wok && expand_words(s, words[k]) == rel[k];
  rep.checks.push_back(detail::check("relation words expand to the curvature relations", wok));
  auto M = matrix_rep(s);
  ModuleConnection E = omega1_module(s);
  bool mok = true;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) {
      Tensor r = act(s, E, vec_field(i), Tensor::basis({a}));
      for (int b = 0; b < 3; ++b) mok = mok && r.at({b}) == AElem(M[i][b][a]);
    }
  rep.checks.push_back(detail::check("matrices agree with |> on Omega1", mok));
  std::vector<Scalar> coeffs;
  for (auto& c : curvature_coefficients(s)) coeffs.push_back(c.value.constant_term());
  rep.checks.push_back(detail::check("curvature coefficients = equations up to scalars", same_up_to_scalars(coeffs, derived, unk)));
  auto cases = su2q_flat_cases();
  for (std::size_t k = 0; k < 3; ++k) {
    bool z = true;
    for (auto& e : su2q_consistency_equations(cases[k].bindings)) z = z && e.is_zero();
    rep.checks.push_back(detail::check("case (" + cases[k].label + ") solves the equations and is flat",
                                       z && check_flat_case(cases[k]).flat));
  }
  bool dz = true;
  for (auto& e : su2q_consistency_equations(cases[3].bindings)) dz = dz && e.is_zero();
  rep.checks.push_back({"case (d) as printed", dz && check_flat_case(cases[3]).flat,
                        "printed bindings do not zero the curvature", true});
  auto found = search_corrected_case_d();
  bool cz = found.size() == 1;
  if (cz)
    for (auto& e : su2q_consistency_equations(found[0].solved.bindings)) cz = cz && e.is_zero();
  rep.checks.push_back(detail::check("corrected case (d) solves the equations and is flat",
                                     cz && check_flat_case(found.at(0).solved).flat,
                                     found.empty() ? "none found" : render_bindings(found[0].solved.bindings)));
  return rep;
}

inline SuiteReport run_suite(const std::string& name, const CalculusSpec& s) {
  if (name == "associativity") return suite_associativity(s);
  if (name == "action") return suite_action(s);
  if (name == "curvature-op") return suite_curvature_op(s);
  if (name == "relations-annihilate") return suite_relations_annihilate(s);
  if (name == "complex") return suite_complex(s);
  if (name == "theta") return suite_theta(s);
  if (name == "symbols") return suite_symbols(s);
  if (name == "su2q-consistency") {
    if (s.name != "su2q") throw SpecError("suite su2q-consistency applies to the su2q calculus only");
    return suite_su2q_consistency();
  }
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace ncdiff

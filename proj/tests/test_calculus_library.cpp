#include <gtest/gtest.h>

#include <random>

#include "ncdiff/library.hpp"
#include "support.hpp"

using namespace support;

namespace {

Scalar P(const std::string& t) { return parse_scalar(t, su2q_param_names()); }
AElem A(const std::string& t) { return AElem(P(t)); }

Scalar random_rational(std::mt19937& rng) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  int n = 0;
  while (n == 0) n = num(rng);
  return Scalar::rational(n, den(rng));
}

// Random nonzero values for the parameters a case leaves free, and for q.
Bindings instantiate(const FlatCase& c, std::mt19937& rng) {
  CalculusSpec s = su2q_3d();
  std::map<std::size_t, Scalar> vals;
  for (auto& n : c.free) vals[s.param_index(n)] = random_rational(rng);
  Scalar q = random_rational(rng);
  while (q == Scalar(1) || q == Scalar(-1)) q = random_rational(rng);
  vals[0] = q;
  Bindings b;
  for (auto& [k, v] : c.bindings) b[k] = substitute(v, vals);
  for (auto& [k, v] : vals) b[s.params[k]] = v;
  return b;
}

// Curvature of Omega^1 as displayed, written with e^-^e^+ = -q^2 e^+^e^-.
std::vector<Tensor> curvature_oracle() {
  std::vector<Tensor> R(3);
  const int w0 = 0, wp = 1, wm = 2, ep = 0, e0 = 1, em = 2;
  R[ep].add({w0, ep}, A("n_p*q^3 - mu_m*m_p"));
  R[ep].add({wp, e0}, A("m_p*(-q^2*(1+q^-2) + n_p*q^4 - r)"));
  R[em].add({w0, em}, A("n_m*q^3 + q^2*mu_p*m_m"));
  R[em].add({wm, e0}, A("m_m*(q^-2*(1+q^-2) + n_m*q^-4 - r)"));
  R[e0].add({w0, e0}, A("r*q^3 - mu_p*m_m + mu_m*m_p*q^2"));
  R[e0].add({wp, em}, A("mu_p*(-q^2*(1+q^-2) + r*q^4 - n_m)"));
  R[e0].add({wm, ep}, A("mu_m*(q^-2*(1+q^-2) + r*q^-4 - n_p)"));
  return R;
}

}  // namespace

TEST(Builtins, PassValidation) {
  for (auto& n : builtin_names()) EXPECT_NO_THROW(validate(builtin(n))) << n;
  EXPECT_THROW(builtin("nope"), SpecError);
}

TEST(Builtins, ClassicalPlaneRelation) {
  CalculusSpec s = classical_plane();
  auto rel = da_relations(s);
  ASSERT_EQ(rel.size(), 1u);
  Tensor expect = T({1, 0}) - T({0, 1});
  EXPECT_TRUE(rel[0] == expect || rel[0] == -expect);
  EXPECT_TRUE(torsion(s, T({0})).is_zero());
}

TEST(Podles, Structure) {
  CalculusSpec s = podles_sphere();
  EXPECT_EQ(s.name, "podles");
  EXPECT_TRUE(integrable(s));
  ASSERT_TRUE(s.sigma_inv.has_value());
  Tensor t = apply_sigma_inv(s, T({0, 1}), 0);
  EXPECT_EQ(t, T({1, 0}, AElem(parse_scalar("q^-2", s.params))));
  Tensor u = apply_sigma_inv(s, T({1, 0}), 0);
  EXPECT_EQ(u, T({0, 1}, AElem(parse_scalar("q^2", s.params))));
  EXPECT_TRUE(dbar_hd(s, vec_field(0)).is_zero());
}

TEST(Su2q, RelationWordsAsPrinted) {
  CalculusSpec s = su2q_3d();
  auto words = relation_words(s);
  ASSERT_EQ(words.size(), 3u);
  // q^3 u0 = u- . u+ - q^2 u+ . u-
  Tensor w0;
  for (auto& w : words[0]) w0.add(w.word, AElem(w.coeff));
  EXPECT_EQ(w0, T({1}, A("q^3")) - T({2, 0}) + T({0, 2}, A("q^2")));
  // -q^2(1+q^-2) u+ = u0 . u+ - q^4 u+ . u0
  Tensor w1;
  for (auto& w : words[1]) w1.add(w.word, AElem(w.coeff));
  EXPECT_EQ(w1, T({0}, A("-q^2*(1+q^-2)")) - T({1, 0}) + T({0, 1}, A("q^4")));
  Tensor w2;
  for (auto& w : words[2]) w2.add(w.word, AElem(w.coeff));
  EXPECT_EQ(w2, T({2}, A("q^-2*(1+q^-2)")) - T({1, 2}) + T({2, 1}, A("q^-4")));
}

TEST(Su2q, WordsExpandToCurvatureRelations) {
  CalculusSpec s = su2q_3d();
  auto rel = da_relations(s);
  auto words = relation_words(s);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(expand_words(s, words[k]), rel[k]) << k;
}

TEST(Su2q, CurvatureFamiliesAsDisplayed) {
  auto R = omega1_curvature(su2q_3d());
  auto oracle = curvature_oracle();
  for (int a = 0; a < 3; ++a) EXPECT_EQ(R[a], oracle[a]) << a;
}

TEST(Su2q, CurvatureCoefficientsMatchEquations) {
  auto eqs = su2q_consistency_equations();
  auto unk = su2q_unknowns();
  auto coeffs = curvature_coefficients(su2q_3d());
  std::vector<Scalar> cs;
  for (auto& c : coeffs) cs.push_back(c.value.constant_term());
  EXPECT_TRUE(same_up_to_scalars(cs, eqs, unk));
}

TEST(FlatCases, PrintedCasesABC) {
  std::mt19937 rng(11);
  auto cases = su2q_flat_cases();
  ASSERT_EQ(cases.size(), 4u);
  EXPECT_TRUE(is_flat(su2q_case_spec(cases[0])));
  for (int k = 0; k < 3; ++k) {
    EXPECT_TRUE(check_flat_case(cases[k]).flat) << cases[k].label;
    for (int t = 0; t < 5; ++t) EXPECT_TRUE(is_flat(su2q_3d(instantiate(cases[k], rng)))) << cases[k].label;
  }
  EXPECT_EQ(cases[1].free, (std::vector<std::string>{"mu_p", "mu_m"}));
  EXPECT_EQ(cases[2].free, (std::vector<std::string>{"mu_m"}));
}

TEST(FlatCases, PrintedCaseDIsNotFlat) {
  FlatCase d = su2q_flat_cases()[3];
  auto v = check_flat_case(d);
  EXPECT_FALSE(v.flat);
  EXPECT_FALSE(v.surviving.empty());
  // with mu_p = 0 the constraint -1 = -mu_p m_m q^-1 reads -1 = 0
  CalculusSpec s = su2q_3d(d.bindings);
  auto R = omega1_curvature(s);
  EXPECT_EQ(R[2].at({0, 2}), A("-q^3"));
}

TEST(FlatCases, CorrectedCaseD) {
  auto found = search_corrected_case_d();
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].released, "mu_p");
  const FlatCase& c = found[0].solved;
  EXPECT_EQ(c.bindings.at("mu_m"), Scalar(0));
  EXPECT_EQ(c.bindings.at("n_m"), Scalar(-1));
  EXPECT_EQ(c.bindings.at("r"), P("q^-2"));
  EXPECT_TRUE(proportional(c.bindings.count("m_m") ? c.bindings.at("m_m") * P("mu_p")
                                                   : c.bindings.at("mu_p") * P("m_m"),
                           P("q"), {}));
  EXPECT_TRUE(check_flat_case(c).flat);
  std::mt19937 rng(5);
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(is_flat(su2q_3d(instantiate(c, rng))));
}

TEST(FlatCases, PerturbationsOfBCurve) {
  std::mt19937 rng(2024);
  FlatCase b = su2q_flat_cases()[1];
  std::vector<std::string> bound = {"n_m", "m_m", "n_p", "m_p", "r"};
  std::uniform_int_distribution<std::size_t> pick(0, bound.size() - 1);
  for (int t = 0; t < 20; ++t) {
    Bindings v = instantiate(b, rng);
    ASSERT_TRUE(is_flat(su2q_3d(v)));
    v[bound[pick(rng)]] += random_rational(rng);
    EXPECT_FALSE(is_flat(su2q_3d(v))) << t;
  }
}

TEST(MatrixRep, DisplayedMatrices) {
  auto M = su2q_matrix_rep();
  ASSERT_EQ(M.size(), 3u);
  Matrix up = zero_matrix(3, 3), u0 = zero_matrix(3, 3), um = zero_matrix(3, 3);
  up[1][0] = P("m_p");
  up[2][1] = P("mu_p");
  u0[0][0] = P("n_p");
  u0[1][1] = P("r");
  u0[2][2] = P("n_m");
  um[0][1] = P("mu_m");
  um[1][2] = P("m_m");
  EXPECT_EQ(M[0], up);
  EXPECT_EQ(M[1], u0);
  EXPECT_EQ(M[2], um);
  for (int b = 0; b < 3; ++b) EXPECT_TRUE(M[0][b][2].is_zero());
}

TEST(MatrixRep, AgreesWithAction) {
  CalculusSpec s = su2q_3d();
  ModuleConnection E = omega1_module(s);
  auto M = matrix_rep(s);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) {
      Tensor r = act(s, E, vec_field(i), T({a}));
      for (int b = 0; b < 3; ++b) EXPECT_EQ(r.at({b}), AElem(M[i][b][a])) << i << a << b;
    }
}

TEST(MatrixRep, ProductsAgreeWithBulletAction) {
  CalculusSpec s = su2q_3d();
  ModuleConnection E = omega1_module(s);
  auto M = matrix_rep(s);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Matrix MM = matmul(M[i], M[j]);
      DiffOp p = bullet(s, vec_field(i), vec_field(j));
      for (int a = 0; a < 3; ++a) {
        Tensor r = act(s, E, p, T({a}));
        for (int b = 0; b < 3; ++b) EXPECT_EQ(r.at({b}), AElem(MM[b][a]));
      }
    }
}

TEST(Consistency, DerivedEqualsGolden) {
  auto derived = su2q_consistency_equations();
  auto golden = su2q_golden_equations();
  EXPECT_EQ(derived.size(), 7u);
  EXPECT_TRUE(same_up_to_scalars(derived, golden, su2q_unknowns()));
}

TEST(Consistency, ProportionalityIsStrict) {
  auto unk = su2q_unknowns();
  EXPECT_TRUE(proportional(P("q^2*m_p*mu_m"), P("m_p*mu_m"), unk));
  EXPECT_FALSE(proportional(P("r*m_p"), P("m_p"), unk));
  auto golden = su2q_golden_equations();
  auto broken = golden;
  broken[3] = P("m_p*(-1 - q^2 + n_p*q^4 + r)");
  EXPECT_FALSE(same_up_to_scalars(su2q_consistency_equations(), broken, unk));
  broken.pop_back();
  EXPECT_FALSE(same_up_to_scalars(su2q_consistency_equations(), broken, unk));
}

TEST(Consistency, FlatCasesSolveEquations) {
  auto cases = su2q_flat_cases();
  for (int k = 0; k < 3; ++k)
    for (auto& e : su2q_consistency_equations(cases[k].bindings)) EXPECT_TRUE(e.is_zero()) << cases[k].label;
  bool any = false;
  for (auto& e : su2q_consistency_equations(cases[3].bindings)) any = any || !e.is_zero();
  EXPECT_TRUE(any);
  auto d = search_corrected_case_d().at(0).solved;
  for (auto& e : su2q_consistency_equations(d.bindings)) EXPECT_TRUE(e.is_zero());
}

TEST(Consistency, GenericParametersLeaveEquations) {
  std::mt19937 rng(17);
  CalculusSpec s = su2q_3d();
  for (int t = 0; t < 10; ++t) {
    Bindings b;
    for (auto& n : s.params) b[n] = random_rational(rng);
    auto eqs = su2q_consistency_equations(b);
    int nonzero = 0;
    for (auto& e : eqs) nonzero += !e.is_zero();
    EXPECT_GT(nonzero, 0);
    EXPECT_FALSE(is_flat(su2q_3d(b)));
  }
}

TEST(Consistency, ZeroSetsAgreeOnRandomSpecializations) {
  // flat iff every equation vanishes, sampled on the flat families and nearby
  std::mt19937 rng(99);
  auto cases = su2q_flat_cases();
  cases[3] = search_corrected_case_d().at(0).solved;
  for (int t = 0; t < 12; ++t) {
    Bindings b = instantiate(cases[t % 4], rng);
    if (t % 3 == 0) b["r"] += random_rational(rng);
    bool flat = is_flat(su2q_3d(b));
    bool zero = true;
    for (auto& e : su2q_consistency_equations(b)) zero = zero && e.is_zero();
    EXPECT_EQ(flat, zero) << t;
  }
}

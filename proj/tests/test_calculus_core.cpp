#include <gtest/gtest.h>

#include <random>

#include "ncdiff/builtins.hpp"

using namespace ncdiff;

namespace {

Tensor T(const Idx& i, const AElem& c = AElem(Scalar(1))) { return Tensor::basis(i, c); }

AElem X(const CalculusSpec& s, const std::string& e) { return parse_aelem(e, s); }

AElem random_poly(std::mt19937& rng, int ncoords, int maxdeg = 2) {
  std::uniform_int_distribution<int> coef(-3, 3), ex(0, maxdeg);
  AElem a;
  for (int t = 0; t < 3; ++t) {
    Exponent e(ncoords);
    for (auto& x : e) x = ex(rng);
    a.add_term(e, Scalar(coef(rng)));
  }
  return a;
}

Tensor random_tensor(std::mt19937& rng, int len, int n1, int ncoords) {
  std::uniform_int_distribution<int> pick(0, n1 - 1);
  Tensor t;
  for (int k = 0; k < 2; ++k) {
    Idx I(len);
    for (auto& x : I) x = pick(rng);
    t.add(I, random_poly(rng, ncoords));
  }
  return t;
}

// Classical plane with a polynomial, non-flat christoffel table.
CalculusSpec curved_plane() {
  CalculusSpec s = classical_plane();
  (*s.gamma)[0][0][1] = X(s, "x");
  (*s.gamma)[0][1][1] = X(s, "2*y^2 - 1");
  (*s.gamma)[1][0][0] = X(s, "x*y");
  (*s.gamma)[1][1][0] = X(s, "3");
  return s;
}

// Independent oracle for box on Vec: the dual connection is the unique map
// with d(ev(u (x) xi)) = (id (x) ev)(box u (x) xi) + (ev (x) id)(u (x) box xi).
void expect_duality(const CalculusSpec& s, const Tensor& u, const Tensor& xi) {
  Tensor lhs = d0(s, ev_n(u, xi));
  Tensor bu = box_vec(s, u);
  Tensor t1;
  for (auto& [I, a] : bu.terms())
    for (auto& [J, b] : xi.terms())
      if (I[1] == J[0]) t1.add({I[0]}, a * b);
  Tensor bx = box_form(s, xi);
  Tensor t2;
  for (auto& [I, a] : u.terms())
    for (auto& [J, b] : bx.terms())
      if (I[0] == J[0]) t2.add({J[1]}, a * b);
  EXPECT_EQ(lhs, t1 + t2);
}

}  // namespace

TEST(EvN, DualBasis) {
  auto s = su2q_3d();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(ev_n(T({i}), T({j})), AElem(Scalar(i == j ? 1 : 0)));
  // u+ (x) u0 against e0 (x) e+
  EXPECT_EQ(ev_n(T({0, 1}), T({1, 0})), AElem(Scalar(1)));
  EXPECT_TRUE(ev_n(T({0, 1}), T({0, 1})).is_zero());
}

TEST(EvN, ClassicalContraction) {
  auto s = classical_plane();
  // Dx (x) Dy against x dy (x) dx
  EXPECT_EQ(ev_n(T({0, 1}), T({1, 0}, X(s, "x"))), X(s, "x"));
  EXPECT_EQ(ev_n(T({}, X(s, "y")), T({}, X(s, "x"))), X(s, "x*y"));
}

TEST(SquareForms, Examples) {
  auto flat = classical_plane();
  EXPECT_TRUE(square_forms_n(flat, T({0, 1})).is_zero());
  // right Leibniz: box(dy.x) = dy (x) dx
  EXPECT_EQ(square_forms_n(flat, T({1}, X(flat, "x"))), T({1, 0}));
  // n = 0 is d
  EXPECT_EQ(square_forms_n(flat, T({}, X(flat, "x^2*y"))), T({0}, X(flat, "2*x*y")) + T({1}, X(flat, "x^2")));

  auto s = su2q_3d();
  Tensor expect = T({1, 1}, X(s, "r")) + T({0, 2}, X(s, "mu_p")) + T({2, 0}, X(s, "mu_m"));
  EXPECT_EQ(square_forms_n(s, T({1})), expect);
  EXPECT_THROW(square_forms_n(s, T({1, 1})), MissingCapability);
}

TEST(SigmaInvN, FlipCycle) {
  auto s = classical_plane();
  EXPECT_EQ(sigma_inv_n(s, T({0, 1}), 1), T({1, 0}));
  // slot 1 moves to slot 3
  EXPECT_EQ(sigma_inv_n(s, T({0, 1, 1}), 2), T({1, 1, 0}));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) EXPECT_EQ(sigma_inv_n(s, T({a, b, c}), 2), T({b, c, a}));
}

TEST(DualConnection, Su2q) {
  auto s = su2q_3d();
  EXPECT_EQ(box_vec(s, T({2})), T({0, 1}, X(s, "-mu_m")) + T({1, 2}, X(s, "-m_m")));
  EXPECT_EQ(box_vec(s, T({0})), T({1, 0}, X(s, "-m_p")) + T({2, 1}, X(s, "-mu_p")));
  for (int c = 0; c < 3; ++c)
    for (int b = 0; b < 3; ++b) expect_duality(s, T({c}), T({b}));
}

TEST(DualConnection, FlatAndDualityOnPolynomialBackend) {
  auto flat = classical_plane();
  EXPECT_TRUE(box_vec(flat, T({0})).is_zero());
  auto s = curved_plane();
  std::mt19937 rng(5);
  for (int k = 0; k < 30; ++k) expect_duality(s, random_tensor(rng, 1, 2, 2), random_tensor(rng, 1, 2, 2));
}

TEST(SquareVec, Examples) {
  auto flat = classical_plane();
  EXPECT_TRUE(square_vec_n(flat, T({0, 1})).is_zero());
  EXPECT_EQ(square_vec_n(flat, T({0, 1}, X(flat, "x"))), T({0, 0, 1}));
  auto s = su2q_3d();
  EXPECT_EQ(square_vec_n(s, T({2})), box_vec(s, T({2})));
  EXPECT_THROW(square_vec_n(s, T({2, 0})), MissingCapability);
}

TEST(SigmaFromSigmaInv, FlipAndDefiningIdentity) {
  auto s = curved_plane();
  EXPECT_EQ(apply_sigma(s, T({0, 1}), 0), T({1, 0}));
  // (id (x) ev)(sigma (x) id) = (ev (x) id)(id (x) sigma^-1) on u_c (x) xi_d (x) xi_e
  CalculusSpec t = s;
  (*t.sigma_inv)[t.pair(0, 1)][t.pair(0, 1)] = X(t, "x");
  (*t.sigma_inv)[t.pair(1, 1)][t.pair(0, 0)] = X(t, "2");
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d)
      for (int e = 0; e < 2; ++e) {
        Tensor sg = apply_sigma(t, T({c, d}), 0);  // {b, e'}
        Tensor lhs;
        for (auto& [I, a] : sg.terms())
          if (I[1] == e) lhs.add({I[0]}, a);
        Tensor si = apply_sigma_inv(t, T({d, e}), 0);  // {a, b}
        Tensor rhs;
        for (auto& [I, a] : si.terms())
          if (I[0] == c) rhs.add({I[1]}, a);
        EXPECT_EQ(lhs, rhs);
      }
}

TEST(NablaIter, Hessians) {
  auto s = classical_plane();
  auto A = trivial_module();
  EXPECT_EQ(nabla_iter(s, A, 2, T({0}, X(s, "x*y"))), T({0, 1, 0}) + T({1, 0, 0}));
  EXPECT_EQ(nabla_iter(s, A, 2, T({0}, X(s, "x^2"))), T({0, 0, 0}, X(s, "2")));
  Tensor e = T({0}, X(s, "x^3*y"));
  EXPECT_EQ(nabla_iter(s, A, 1, e), nabla_module(s, A, e));
  EXPECT_EQ(nabla_iter(s, A, 0, e), e);
}

TEST(Torsion, Examples) {
  auto flat = classical_plane();
  EXPECT_TRUE(torsion(flat, T({0})).is_zero());
  auto s = su2q_3d();
  EXPECT_EQ(torsion(s, T({1})), T({0}, X(s, "q^3 + mu_p - q^2*mu_m")));
  auto p = podles_sphere_data();
  EXPECT_TRUE(torsion(p, T({0})).is_zero());
}

TEST(Curvature, Su2qCoefficients) {
  auto s = su2q_3d();
  auto E = omega1_module(s);
  Tensor r0 = module_curvature(s, E, T({1}));
  EXPECT_EQ(r0.at({0, 1}), X(s, "r*q^3 - mu_p*m_m + mu_m*m_p*q^2"));
  Tensor rp = module_curvature(s, E, T({0}));
  EXPECT_EQ(rp.at({1, 1}), X(s, "m_p*(-q^2*(1+q^-2) + n_p*q^4 - r)"));
}

TEST(Curvature, FlatOmega1) {
  auto s = classical_plane();
  auto E = omega1_module(s);
  EXPECT_TRUE(module_curvature(s, E, T({0}, X(s, "x*y"))).is_zero());
}

TEST(Properties, RightLeibnizTorsionAndCurvatureLinearity) {
  auto s = curved_plane();
  auto E = omega1_module(s);
  std::mt19937 rng(11);
  for (int k = 0; k < 50; ++k) {
    Tensor xi = random_tensor(rng, 1, 2, 2);
    AElem a = random_poly(rng, 2);
    Tensor lhs = box_form(s, xi.scaled(a)) - box_form(s, xi).scaled(a);
    ASSERT_EQ(lhs, outer(xi, d0(s, a)));
    ASSERT_EQ(torsion(s, xi.scaled(a)), torsion(s, xi).scaled(a));
    Tensor e = random_tensor(rng, 1, 2, 2);
    ASSERT_EQ(module_curvature(s, E, e.scaled(a)), module_curvature(s, E, e).scaled(a));
  }
}

TEST(Properties, DerivationOfD) {
  auto s = classical_plane();
  std::mt19937 rng(3);
  EXPECT_TRUE(d0(s, AElem(Scalar(1))).is_zero());
  for (int k = 0; k < 50; ++k) {
    AElem a = random_poly(rng, 2), b = random_poly(rng, 2);
    ASSERT_EQ(d0(s, a * b), d0(s, a).scaled(b) + d0(s, b).scaled(a));
  }
}

TEST(Validation, JChecks) {
  EXPECT_NO_THROW(validate(classical_complex_plane()));
  EXPECT_NO_THROW(validate(podles_sphere_data()));
  EXPECT_NO_THROW(validate(su2q_3d()));
  auto bad = classical_complex_plane();
  (*bad.J)[0][0] = Scalar(1);
  EXPECT_THROW(validate(bad), SpecError);
  // J swapping dz, dzb squares to -1 only with a sign; this one does not descend
  auto p = podles_sphere_data();
  Matrix J = zero_matrix(2, 2);
  J[0][1] = Scalar(1);
  J[1][0] = Scalar(-1);
  p.J = J;
  EXPECT_THROW(validate(p), SpecError);
  auto wrong = classical_plane();
  wrong.W.pop_back();
  EXPECT_THROW(validate(wrong), SpecError);
}

#include <gtest/gtest.h>

#include <random>

#include "ncdiff/complex.hpp"
#include "support.hpp"

using namespace support;

namespace {

CalculusSpec plane() { return classical_complex_plane(); }

CalculusSpec podles() { return nice_connection(podles_sphere_data(), HoloConnectionPair{}); }

// Complex plane with a christoffel table that keeps (J (x) id) box = box J and
// pi^{1,1} Tor = 0.
CalculusSpec bent_plane() {
  CalculusSpec s = plane();
  (*s.gamma)[0][0][0] = X(s, "z*zb + 1");
  (*s.gamma)[1][1][1] = X(s, "z^2");
  return s;
}

// Polynomials in z1, z2, w1, w2 (w = conjugate coordinates), forms dz1, dz2, dw1, dw2.
CalculusSpec plane2() {
  CalculusSpec s;
  s.name = "c2";
  s.algebra.kind = CoeffAlgebra::Kind::polynomial;
  s.algebra.coords = {"z1", "z2", "w1", "w2"};
  s.n1 = 4;
  s.n2 = 6;
  s.algebra.dcoord.assign(4, std::vector<AElem>(4));
  for (int k = 0; k < 4; ++k) s.algebra.dcoord[k][k] = one();
  s.omega1 = {"dz1", "dz2", "dw1", "dw2"};
  s.vec = {"Dz1", "Dz2", "Dw1", "Dw2"};
  s.W.assign(4, std::vector<std::vector<Scalar>>(4, std::vector<Scalar>(6, Scalar(0))));
  int k = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j, ++k) {
      s.omega2.push_back(s.omega1[i] + "^" + s.omega1[j]);
      s.W[i][j][k] = Scalar(1);
      s.W[j][i][k] = Scalar(-1);
    }
  s.N.assign(4, Vec(6, Scalar(0)));
  s.gamma = detail::zero_gamma(4);
  s.sigma_inv = detail::flip_sigma(4);
  Matrix J = zero_matrix(4, 4);
  for (int i = 0; i < 4; ++i) J[i][i] = i < 2 ? Scalar::imag_unit() : -Scalar::imag_unit();
  s.J = J;
  validate(s);
  return s;
}

Tensor pair_phi(const CalculusSpec& s, const VecPairs& x) { return phi_unchecked(s, x, wedge_splitting(s)); }

AElem dzb(const AElem& a) { return a.diff(1); }

}  // namespace

TEST(Decompose, ComplexPlane) {
  auto s = plane();
  auto d = decompose(s);
  Matrix p10 = zero_matrix(2, 2);
  p10[0][0] = Scalar(1);
  EXPECT_EQ(d.p10, p10);
  EXPECT_EQ(d.on_omega2(1, 1), identity_matrix(1));
  EXPECT_TRUE(is_zero_matrix(d.on_omega2(2, 0)));
  EXPECT_TRUE(integrable(s));
}

TEST(Decompose, ProjectionIdentities) {
  // plane2, plus the real plane with J dx = dy, J dy = -dx
  auto real = classical_plane();
  Matrix J = zero_matrix(2, 2);
  J[0][1] = Scalar(1);
  J[1][0] = Scalar(-1);
  real.J = J;
  for (auto& s : {plane2(), real, plane(), podles()}) {
    auto d = decompose(s);
    std::size_t n = static_cast<std::size_t>(s.n1), m = static_cast<std::size_t>(s.n2);
    EXPECT_EQ(matadd(d.p10, d.p01), identity_matrix(n));
    EXPECT_TRUE(is_zero_matrix(matmul(d.p10, d.p01)));
    EXPECT_EQ(matmul(d.p10, d.p10), d.p10);
    EXPECT_EQ(matmul(d.p10, *s.J), scaled(d.p10, Scalar::imag_unit()));
    EXPECT_EQ(matmul(d.p01, *s.J), scaled(d.p01, -Scalar::imag_unit()));
    Matrix sum = zero_matrix(m, m);
    for (auto& [pq, P] : d.pq) {
      sum = matadd(sum, P);
      EXPECT_EQ(matmul(P, P), P);
      Scalar lam = Scalar::imag_unit() * Scalar(pq.first - pq.second);
      EXPECT_EQ(matmul(P, d.j2), scaled(P, lam));
    }
    EXPECT_EQ(sum, identity_matrix(m));
  }
  auto d = decompose(plane2());
  // dz1^dz2 is (2,0), dw1^dw2 is (0,2), the four mixed ones are (1,1)
  EXPECT_EQ(d.on_omega2(2, 0)[0][0], Scalar(1));
  EXPECT_EQ(d.on_omega2(0, 2)[5][5], Scalar(1));
  EXPECT_EQ(rank(d.on_omega2(1, 1)), 4u);
  // for the real plane p10(dx) = (dx - i dy)/2
  auto dr = decompose(real);
  EXPECT_EQ(dr.p10[0][1], -Scalar::imag_unit() * Scalar::rational(1, 2));
}

TEST(Decompose, Errors) {
  EXPECT_THROW(decompose(su2q_3d()), MissingCapability);
  auto s = plane();
  (*s.J)[1][1] = Scalar(1);
  EXPECT_THROW(decompose(s), SpecError);
  // J = i on both forms is a valid structure with Omega^{1,1} = 0
  auto t = plane();
  (*t.J)[1][1] = Scalar::imag_unit();
  EXPECT_TRUE(is_zero_matrix(decompose(t).on_omega2(1, 1)));
}

TEST(Integrable, PodlesAndFailure) {
  EXPECT_TRUE(integrable(podles_sphere_data()));
  EXPECT_TRUE(integrable(plane2()));
  auto s = plane2();
  s.N[2][0] = Scalar(1);  // d(dw1) = dz1^dz2
  EXPECT_FALSE(integrable(s));
}

TEST(NNBracket, Examples) {
  auto s = plane();
  AElem z = X(s, "z");
  VecPairs x = {{vec_field(0), vec_field(0, z)}, {vec_field(0, -z), vec_field(0)}};
  EXPECT_EQ(pair_phi(s, x), vec_field(0));
  EXPECT_TRUE(nn_bracket_check(s, x));
  EXPECT_TRUE(nn_bracket_check(s, VecPairs{}));
  VecPairs bad = {{vec_field(1), vec_field(0)}};
  try {
    nn_bracket_check(s, bad);
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "sector");
  }

  auto p = podles();
  // ker ^ on Omega^{1,0} (x) Omega^{1,0} is all of it; only inputs balancing to zero qualify
  VecPairs vv = {{vec_field(0), vec_field(0)}, {vec_field(0, AElem(Scalar(-1))), vec_field(0)}};
  EXPECT_TRUE(nn_bracket_check(p, vv));
  try {
    nn_bracket_check(p, VecPairs{{vec_field(0), vec_field(0)}});
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "kernel");
  }
}

TEST(NNBracket, RandomAntisymmetricInputs) {
  auto s = plane();
  std::mt19937 rng(17);
  for (int k = 0; k < 20; ++k) {
    VecPairs x;
    AElem expect;
    for (int p = 0; p < 2; ++p) {
      AElem f = random_poly(rng, 2), g = random_poly(rng, 2);
      x.push_back({vec_field(0, f), vec_field(0, g)});
      x.push_back({vec_field(0, -g), vec_field(0, f)});
      expect += f * g.diff(0) - g * f.diff(0);
    }
    ASSERT_EQ(pair_phi(s, x), vec_field(0, expect));
    ASSERT_TRUE(nn_bracket_check(s, x));
  }
}

TEST(HoloVec, Examples) {
  auto s = plane();
  auto c = complex_structure(s);
  EXPECT_TRUE(holo_vec_check(s, vec_field(0, X(s, "z"))));
  EXPECT_EQ(directional(s, vec_field(0, X(s, "z")), X(s, "z^2")), X(s, "2*z^2"));
  EXPECT_TRUE(dbar0(s, c, X(s, "2*z^2")).is_zero());
  Tensor v = vec_field(0, X(s, "zb"));
  EXPECT_FALSE(holo_vec_check(s, v));
  EXPECT_EQ(apply_slot(square_vec_n(s, v), 0, c.dec.p01), T({1, 0}));
  EXPECT_TRUE(holo_vec_check(podles(), vec_field(0)));
}

TEST(HoloVec, ClassicalOracle) {
  auto s = plane();
  std::mt19937 rng(23);
  for (int k = 0; k < 20; ++k) {
    AElem f = random_poly(rng, 1, 3);
    if (k % 2) f += random_poly(rng, 2, 2);
    ASSERT_EQ(holo_vec_check(s, vec_field(0, f)), dzb(f).is_zero());
  }
}

TEST(HoloVec, LemmaConditionsReported) {
  auto ok = lemma_conditions(bent_plane());
  EXPECT_TRUE(ok.a && ok.b && ok.c);
  auto s = plane();
  (*s.gamma)[0][1][0] = one();
  auto r = lemma_conditions(s);
  EXPECT_TRUE(r.a);
  EXPECT_FALSE(r.b);
  try {
    holo_vec_check(s, vec_field(0));
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "b");
  }
  auto t = plane();
  (*t.gamma)[0][0][1] = one();
  auto rt = lemma_conditions(t);
  EXPECT_TRUE(rt.b);
  EXPECT_FALSE(rt.c);
}

TEST(HoloVec, LemmaIdentity) {
  std::mt19937 rng(29);
  for (auto& s : {plane(), bent_plane()}) {
    auto c = complex_structure(s);
    for (int k = 0; k < 20; ++k) {
      Tensor v = vec_field(0, random_poly(rng, 2));
      AElem a = random_poly(rng, 2, 3);
      ASSERT_EQ(dbar0(s, c, directional(s, v, a)), dbar_of_action(s, c, v, a));
    }
  }
}

TEST(NiceConnection, ComplexPlane) {
  auto base = plane();
  auto s = nice_connection(base, flat_flip_pair(base));
  for (auto& a : *s.gamma)
    for (auto& b : a)
      for (auto& x : b) EXPECT_TRUE(x.is_zero());
  EXPECT_EQ(*s.sigma_inv, *base.sigma_inv);
  auto c = complex_structure(s);
  EXPECT_TRUE(box_commutes_with_j(s));
  EXPECT_TRUE(torsion_11_vanishes(s, c));
  EXPECT_TRUE(sigma_wedge_condition(s, c));
  EXPECT_TRUE(sector_bimodule_rule(base, flat_flip_pair(base).c10, c.sec.s10));
  EXPECT_FALSE(sector_bimodule_rule(base, SectorConnection{}, c.sec.s10));
}

TEST(NiceConnection, NontrivialSectorConnection) {
  auto base = plane();
  auto pr = flat_flip_pair(base);
  pr.c10.nabla[0] = T({0, 0}, X(base, "z")) + T({0, 1}, X(base, "zb"));
  pr.c01.nabla[1] = T({1, 1}, X(base, "z*zb"));
  auto s = nice_connection(base, pr);
  EXPECT_EQ((*s.gamma)[0][0][0], X(base, "z"));
  EXPECT_TRUE((*s.gamma)[0][0][1].is_zero());
  EXPECT_EQ((*s.gamma)[1][1][1], X(base, "z*zb"));
  EXPECT_TRUE(vec_box_commutes_with_j(s));
  EXPECT_TRUE(sigma_inv_commutes_with_j(s));
  pr.c10.nabla[0] = T({1, 0}, one());
  EXPECT_THROW(nice_connection(base, pr), SpecError);
}

TEST(NiceConnection, Podles) {
  auto s = podles();
  auto q = X(s, "q");
  for (auto& a : *s.gamma)
    for (auto& b : a)
      for (auto& x : b) EXPECT_TRUE(x.is_zero());
  const auto& S = *s.sigma_inv;
  EXPECT_EQ(S[s.pair(0, 1)][s.pair(1, 0)], X(s, "q^-2"));
  EXPECT_EQ(S[s.pair(1, 0)][s.pair(0, 1)], X(s, "q^2"));
  EXPECT_EQ(apply_sigma_inv(s, T({0, 1}), 0), T({1, 0}, X(s, "q^-2")));
  EXPECT_TRUE(apply_sigma_inv(s, T({0, 0}) + T({1, 1}), 0).is_zero());
  auto c = complex_structure(s);
  EXPECT_TRUE(box_commutes_with_j(s));
  EXPECT_TRUE(torsion_11_vanishes(s, c));
  EXPECT_TRUE(sigma_wedge_condition(s, c));
  EXPECT_TRUE(sigma_inv_commutes_with_j(s));
  EXPECT_TRUE(integrable(s));
  (void)q;
}

TEST(NiceConnection, RejectsNonInvertibleMixedWedge) {
  // Omega^2 spanned by dz^dz only: Omega^{1,1} = 0 but there is one mixed pair
  auto s = plane();
  s.W[0][1][0] = Scalar(0);
  s.W[1][0][0] = Scalar(0);
  s.W[0][0][0] = Scalar(1);
  try {
    nice_connection(s, flat_flip_pair(s));
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "a");
  }
}

TEST(SectorClosure, Examples) {
  auto s = plane();
  DiffOp p = bullet(s, vec_field(0), vec_field(0, X(s, "z")));
  EXPECT_EQ(p, T({0, 0}, X(s, "z")) + T({0}));
  EXPECT_TRUE(sector_bullet_closure(s));
  EXPECT_TRUE(sector_bullet_closure(bent_plane()));
  auto pd = podles();
  EXPECT_EQ(bullet(pd, vec_field(0), vec_field(0)), T({0, 0}));
  EXPECT_TRUE(sector_bullet_closure(pd));
  EXPECT_TRUE(sector_bullet_closure(plane2()));
  auto bad = plane();
  (*bad.gamma)[0][1][0] = one();
  EXPECT_THROW(sector_bullet_closure(bad), PreconditionFailed);
}

TEST(PartialIter, Examples) {
  auto s = plane();
  auto A = trivial_module();
  EXPECT_EQ(partial_iter(s, A, 2, T({0}, X(s, "z^2*zb"))), T({0, 0, 0}, X(s, "2*zb")));
  EXPECT_EQ(partial_iter(s, A, 1, T({0}, X(s, "z^2*zb"))), T({0, 0}, X(s, "2*z*zb")));
  EXPECT_EQ(partial_iter(s, A, 2, T({0}, X(s, "z^3"))), T({0, 0, 0}, X(s, "6*z")));
}

TEST(PartialIter, Factorization) {
  std::mt19937 rng(31);
  for (auto& s : {plane(), bent_plane()}) {
    auto d = decompose(s);
    ModuleConnection rank2;
    rank2.name = "rank2";
    rank2.rank = 2;
    rank2.nabla = {T({0, 1}, X(s, "zb")) + T({1, 0}, X(s, "z")), T({1, 1}, X(s, "z*zb"))};
    for (auto& E : {trivial_module(), omega1_module(s), rank2})
      for (int n = 1; n <= 3; ++n)
        for (int k = 0; k < 3; ++k) {
          Tensor e = random_element(rng, s, E.rank);
          ASSERT_EQ(partial_iter(s, E, n, e), project_forms(nabla_iter(s, E, n, e), n, d.p10));
        }
  }
}

TEST(DbarHD, Examples) {
  auto s = plane();
  EXPECT_TRUE(dbar_hd(s, T({0, 0})).is_zero());
  EXPECT_EQ(dbar_hd(s, vec_field(0, X(s, "zb"))), T({1, 0}));
  EXPECT_EQ(dbar_hd(s, Tensor::scalar(X(s, "z*zb^2"))), T({1}, X(s, "2*z*zb")));
  auto p = podles();
  EXPECT_TRUE(dbar_hd(p, vec_field(0)).is_zero());
  EXPECT_TRUE(dbar_hd(p, T({0, 0}) + T({0, 0, 0})).is_zero());
  EXPECT_THROW(dbar_hd(s, vec_field(1)), PreconditionFailed);
}

TEST(DbarHD, FlatPlaneOracle) {
  // on the flat plane dbar_HD(f u_I) = d f/d zb dzb (x) u_I
  auto s = plane();
  std::mt19937 rng(37);
  DbarEngine eng(s);
  for (int k = 0; k < 20; ++k) {
    DiffOp v = detail::random_sector_op(rng, {0}, {0, 1}, 3, 3);
    Tensor expect;
    for (auto& [I, f] : v.terms()) expect += outer(T({1}), Tensor::basis(I, dzb(f)));
    ASSERT_EQ(eng.apply(v), expect);
  }
}

TEST(DbarHD, LeibnizRule) {
  std::mt19937 rng(41);
  for (auto& s : {plane(), bent_plane()}) {
    DbarEngine eng(s);
    for (int k = 0; k < 15; ++k) {
      DiffOp v = detail::random_sector_op(rng, {0}, {0, 1}, 2, 2);
      AElem a = random_poly(rng, 2);
      Tensor lhs = eng.apply(v.scaled(a));
      Tensor rhs = outer(eng.dbar(a), v) + eng.apply(v).scaled(a);
      ASSERT_EQ(lhs, rhs);
    }
  }
}

TEST(DbarHD, ConditionFailuresAreNamed) {
  auto s = plane();
  // sigma^-1 = identity breaks the pi^{1,1} ^ sigma^-1 condition
  auto& S = *s.sigma_inv;
  for (auto& row : S)
    for (auto& x : row) x = AElem();
  for (int k = 0; k < 4; ++k) S[k][k] = one();
  try {
    dbar_hd(s, vec_field(0));
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "d");
  }
  auto t = plane();
  (*t.gamma)[0][0][1] = one();
  try {
    dbar_hd(t, vec_field(0));
    FAIL();
  } catch (const PreconditionFailed& e) {
    EXPECT_EQ(e.condition, "c");
  }
}

TEST(HoloOps, Examples) {
  auto s = plane();
  DbarEngine eng(s);
  DiffOp v = vec_field(0, X(s, "z")), w = T({0, 0});
  EXPECT_TRUE(eng.apply(bullet(s, v, w)).is_zero());
  AElem a = X(s, "z^3");
  AElem va = act(s, trivial_module(), v, Tensor::basis({0}, a)).at({0});
  EXPECT_EQ(va, X(s, "3*z^3"));
  EXPECT_TRUE(eng.dbar(va).is_zero());
  EXPECT_TRUE(eng.act_on_function(eng.apply(v), a).is_zero());
  DiffOp unit = Tensor::scalar(one());
  EXPECT_TRUE(eng.apply(unit).is_zero());
  EXPECT_TRUE(eng.apply(bullet(s, unit, w)).is_zero());
}

TEST(HoloOps, ReportsOnBuiltins) {
  for (auto& s : {plane(), bent_plane(), podles()}) {
    auto rep = holo_op_tests(s, 20);
    EXPECT_EQ(rep.pairs, 20) << s.name;
    EXPECT_TRUE(rep.closure) << s.name;
    EXPECT_TRUE(rep.action) << s.name;
    EXPECT_TRUE(rep.product_rule) << s.name;
  }
}

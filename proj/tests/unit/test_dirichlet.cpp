#include <gtest/gtest.h>

#include <cmath>

#include "matconc/dirichlet.hpp"
#include "matconc/errors.hpp"
#include "support.hpp"

using namespace matconc;
using mt::dist;
using mt::two_state_generator;
using mt::uniform;

namespace {

MatrixFunction zero_then(const HermitianMatrix& a) { return MatrixFunction({HermitianMatrix::zero(a.dim()), a}); }

}  // namespace

TEST(Variance, ConstantIsZero) {
  const auto f = MatrixFunction::constant(3, random_hermitian(2, 1.0, 1));
  EXPECT_LE(variance(uniform(3), f).op_norm(), 1e-15);
}

TEST(Variance, TwoStateHandValue) {
  const HermitianMatrix a = random_hermitian(3, 1.0, 2);
  EXPECT_LE(dist(variance(uniform(2), zero_then(a)), a.square() * 0.25), 1e-14);
}

TEST(Variance, PointMassIsZero) {
  const auto mu = FiniteMeasure::point_mass(StateSpace::indexed(2), 0);
  EXPECT_LE(variance(mu, zero_then(random_hermitian(2, 1.0, 3))).op_norm(), 1e-15);
}

TEST(CarreDuChamp, ConstantIsZero) {
  Rng rng(4);
  const auto chain = random_reversible_chain(4, rng);
  const auto out = carre_du_champ(chain.q, MatrixFunction::constant(4, random_hermitian(2, 1.0, rng)));
  for (const auto& v : out.values()) {
    EXPECT_LE(v.op_norm(), 1e-14);
  }
}

TEST(CarreDuChamp, TwoStateHandValue) {
  RMatrix q(2, 2);
  q << -1.0, 1.0, 1.0, -1.0;
  const Generator gen(StateSpace::indexed(2), q);
  const auto g = carre_du_champ(gen, zero_then(HermitianMatrix::identity(2)));
  EXPECT_LE(dist(g[0], HermitianMatrix::identity(2) * 0.5), 1e-15);
}

TEST(CarreDuChamp, Homogeneity) {
  Rng rng(5);
  const auto chain = random_reversible_chain(4, rng);
  const auto f = random_matrix_function(4, 2, 1.0, rng);
  const auto g1 = carre_du_champ(chain.q, f);
  const auto g3 = carre_du_champ(chain.q, f.scaled(3.0));
  for (int x = 0; x < 4; ++x) EXPECT_LE(dist(g3[x], g1[x] * 9.0), 1e-12);
  EXPECT_NEAR(gamma_sup_norm(chain.q, f.scaled(3.0)), 9.0 * gamma_sup_norm(chain.q, f), 1e-12);
}

TEST(CarreDuChamp, AgreesWithAlgebraicFormAndIsPsd) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(derive_seed(1, 0, seed));
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng, rng.uniform(0.2, 3.0));
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const auto a = carre_du_champ(chain.q, f);
    const auto b = carre_du_champ_algebraic(chain.q, f);
    for (int x = 0; x < f.size(); ++x) {
      ASSERT_LE(dist(a[x], b[x]), 1e-10 * (1.0 + f.sup_norm() * f.sup_norm())) << seed;
      ASSERT_GE(lambda_min(a[x]), -1e-10) << seed;
    }
  }
}

TEST(CarreDuChamp, LimitForm) {
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), 2, 1.0, rng);
    const auto gamma = carre_du_champ(chain.q, f);
    const double t = 1e-5;
    for (int x = 0; x < f.size(); ++x) {
      std::vector<HermitianMatrix> h;
      for (int y = 0; y < f.size(); ++y) h.push_back((f[y] - f[x]).square());
      const auto ph = semigroup_apply(chain.q, chain.mu, t, MatrixFunction(h));
      const HermitianMatrix limit = ph[x] * (1.0 / (2.0 * t));
      EXPECT_LE(dist(limit, gamma[x]), 1e-4 * gamma[x].op_norm());
    }
  }
}

TEST(DirichletForm, ConstantIsZero) {
  EXPECT_LE(dirichlet_form(two_state_generator(), uniform(2), MatrixFunction::constant(2, HermitianMatrix::identity(2)))
                .op_norm(),
            1e-15);
}

TEST(DirichletForm, TwoStateHandValue) {
  const HermitianMatrix a = random_hermitian(2, 1.0, 7);
  EXPECT_LE(dist(dirichlet_form(two_state_generator(), uniform(2), zero_then(a)), a.square() * 0.5), 1e-14);
}

TEST(DirichletForm, ShiftInvariant) {
  Rng rng(8);
  const auto chain = random_reversible_chain(4, rng);
  const auto f = random_matrix_function(4, 3, 1.0, rng);
  const HermitianMatrix c = random_hermitian(3, 5.0, rng);
  EXPECT_LE(dist(dirichlet_form(chain.q, chain.mu, f), dirichlet_form(chain.q, chain.mu, f.shifted(c))), 1e-12);
}

TEST(DirichletForm, RejectsNonReversible) {
  EXPECT_THROW(dirichlet_form(two_state_generator(1.0, 2.0), uniform(2), zero_then(HermitianMatrix::identity(1))),
               ValidationError);
}

TEST(DirichletForm, TwoDefinitionsAgree) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(derive_seed(2, 0, seed));
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const double s = f.sup_norm();
    EXPECT_LE(dist(dirichlet_form(chain.q, chain.mu, f), dirichlet_form_generator(chain.q, chain.mu, f)),
              1e-9 * (1.0 + s * s));
  }
}

TEST(GammaSupNorm, Examples) {
  EXPECT_EQ(gamma_sup_norm(two_state_generator(), MatrixFunction::constant(2, HermitianMatrix::identity(2))), 0.0);
  EXPECT_NEAR(gamma_sup_norm(two_state_generator(), zero_then(HermitianMatrix::identity(2))), 0.5, 1e-15);
}

TEST(SpectralGap, TwoState) {
  const auto c = spectral_gap(two_state_generator(), uniform(2));
  EXPECT_NEAR(*c.gap, 2.0, 1e-12);
  EXPECT_NEAR(c.alpha, 0.5, 1e-12);
  EXPECT_EQ(c.source, PoincareCertificate::Source::spectral_gap);
  EXPECT_NEAR(c.alpha * *c.gap, 1.0, 1e-12);
}

TEST(SpectralGap, CompleteGraph) {
  for (int m = 2; m <= 7; ++m) {
    RMatrix q = RMatrix::Constant(m, m, 1.0 / (m - 1));
    q.diagonal().setConstant(-1.0);
    const auto c = spectral_gap(Generator(StateSpace::indexed(m), q), uniform(m));
    EXPECT_NEAR(*c.gap, m / (m - 1.0), 1e-12) << m;
  }
}

TEST(SpectralGap, ReducibleChainRejected) {
  RMatrix q = RMatrix::Zero(4, 4);
  q << -1, 1, 0, 0, 1, -1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1;
  try {
    spectral_gap(Generator(StateSpace::indexed(4), q), uniform(4));
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("no spectral gap"), std::string::npos);
  }
}

TEST(PoincareCheck, ConstantPasses) {
  const auto r = poincare_check(two_state_generator(), uniform(2), MatrixFunction::constant(2, HermitianMatrix::identity(2)), 3.0);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(std::abs(r.margin), 1e-15);
}

TEST(PoincareCheck, TwoStateEquality) {
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_matrix_function(2, rng.uniform_int(1, 4), 1.0, rng);
    const auto r = poincare_check(two_state_generator(), uniform(2), f, 0.5);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(std::abs(r.margin), 1e-12);
  }
}

TEST(PoincareCheck, TooSmallAlphaFails) {
  const auto r = poincare_check(two_state_generator(), uniform(2), zero_then(random_hermitian(2, 1.0, 10)), 0.4);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.margin, 0.0);
}

TEST(PoincareCheck, SpectralGapConstantOnCorpus) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(derive_seed(3, 0, seed));
    const auto chain = random_reversible_chain(rng.uniform_int(2, 6), rng, rng.uniform(0.1, 3.0));
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    ASSERT_TRUE(poincare_check(chain.q, chain.mu, f, alpha).pass) << seed;
  }
}

TEST(VarianceIdentity, ConstantBothZero) {
  const auto r = variance_integral_identity(two_state_generator(), uniform(2),
                                            MatrixFunction::constant(2, HermitianMatrix::identity(2)), 5.0, 16);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.witness["discrepancy"].get<double>(), 1e-15);
}

TEST(VarianceIdentity, TwoStateIndicator) {
  const MatrixFunction f({HermitianMatrix::zero(1), HermitianMatrix::identity(1)});
  const auto r = variance_integral_identity(two_state_generator(), uniform(2), f, 10.0, 64);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.witness["discrepancy"].get<double>(), 1e-8);
}

TEST(VarianceIdentity, RandomChains) {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), 2, 1.0, rng);
    const double gap = *spectral_gap(chain.q, chain.mu).gap;
    EXPECT_TRUE(variance_integral_identity(chain.q, chain.mu, f, 12.0 / gap, 96).pass);
  }
}

TEST(VarianceIdentity, ReducibleRejected) {
  RMatrix q = RMatrix::Zero(4, 4);
  q << -1, 1, 0, 0, 1, -1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1;
  EXPECT_THROW(variance_integral_identity(Generator(StateSpace::indexed(4), q), uniform(4),
                                          MatrixFunction::constant(4, HermitianMatrix::identity(1)), 1.0, 8),
               DomainError);
}

TEST(VarianceDerivative, AtZeroAndPositiveTime) {
  Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), 2, 1.0, rng);
    EXPECT_TRUE(variance_derivative_check(chain.q, chain.mu, f, 0.0).pass);
    EXPECT_TRUE(variance_derivative_check(chain.q, chain.mu, f, 0.8).pass);
  }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto rule = gauss_legendre(5, 0.0, 2.0);
  for (int k = 0; k <= 9; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
    EXPECT_NEAR(s, std::pow(2.0, k + 1) / (k + 1), 1e-12 * std::pow(2.0, k + 1));
  }
}

TEST(EmpiricalSearch, LowerBoundsCertifiedAlpha) {
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto cert = spectral_gap(chain.q, chain.mu);
    const auto emp = empirical_poincare_search(chain.q, chain.mu, 2, 20, rng);
    EXPECT_EQ(emp.source, PoincareCertificate::Source::empirical_search);
    EXPECT_LE(emp.alpha, cert.alpha * (1.0 + 1e-9));
    EXPECT_GT(emp.alpha, 0.0);
  }
}

TEST(EmpiricalSearch, TwoStateIsSharp) {
  Rng rng(14);
  const auto emp = empirical_poincare_search(two_state_generator(), uniform(2), 2, 5, rng);
  EXPECT_NEAR(emp.alpha, 0.5, 1e-9);
}

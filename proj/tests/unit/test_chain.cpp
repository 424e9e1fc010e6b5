#include <gtest/gtest.h>

#include <cmath>

#include "matconc/chain.hpp"
#include "matconc/errors.hpp"
#include "support.hpp"

using namespace matconc;
using mt::dist;
using mt::two_state_generator;
using mt::uniform;

namespace {

MatrixFunction two_values(const HermitianMatrix& a, const HermitianMatrix& b) { return MatrixFunction({a, b}); }

}  // namespace

TEST(StateSpace, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(StateSpace({"a", "a"}), ValidationError);
  EXPECT_THROW(StateSpace(std::vector<std::string>{}), ValidationError);
  const StateSpace s({"x", "y"});
  EXPECT_EQ(s.index_of("y"), 1);
}

TEST(FiniteMeasure, Validation) {
  EXPECT_THROW(FiniteMeasure(StateSpace::indexed(2), {0.5, 0.6}), ValidationError);
  EXPECT_THROW(FiniteMeasure(StateSpace::indexed(2), {1.5, -0.5}), ValidationError);
  EXPECT_NO_THROW(FiniteMeasure(StateSpace::indexed(2), {0.25, 0.75}));
}

TEST(Generator, RowSumValidation) {
  RMatrix q(2, 2);
  q << -1.0, 1.1, 1.0, -1.0;
  EXPECT_THROW(Generator(StateSpace::indexed(2), q), ValidationError);
  q << -1.0, 1.0, -1.0, 1.0;
  EXPECT_THROW(Generator(StateSpace::indexed(2), q), ValidationError);
}

TEST(ValidateGenerator, SymmetricTwoStatePasses) {
  EXPECT_TRUE(validate_generator(two_state_generator(), uniform(2)).pass);
}

TEST(ValidateGenerator, DetailedBalanceFailure) {
  const auto r = validate_generator(two_state_generator(1.0, 2.0), uniform(2));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.margin, -0.5, 1e-15);
  EXPECT_EQ(r.witness["kind"], "detailed_balance");
  EXPECT_EQ(r.witness["x"], "0");
  EXPECT_EQ(r.witness["y"], "1");
}

TEST(ValidateGenerator, ZeroGeneratorPasses) {
  const FiniteMeasure mu(StateSpace::indexed(3), {0.2, 0.3, 0.5});
  EXPECT_TRUE(validate_generator(Generator::zero(StateSpace::indexed(3)), mu).pass);
}

TEST(ApplyGenerator, ConstantToZero) {
  Rng rng(1);
  const auto chain = random_reversible_chain(4, rng);
  const auto f = MatrixFunction::constant(4, random_hermitian(2, 1.0, rng));
  const auto out = apply_generator(chain.q, f);
  for (const auto& v : out.values()) EXPECT_LE(v.op_norm(), 1e-14);
}

TEST(ApplyGenerator, TwoStateHandValue) {
  const HermitianMatrix m = random_hermitian(2, 1.0, 3);
  const auto lf = apply_generator(two_state_generator(), two_values(HermitianMatrix::zero(2), m));
  EXPECT_LE(dist(lf[0], m), 1e-15);
  EXPECT_LE(dist(lf[1], m * -1.0), 1e-15);
}

TEST(ApplyGenerator, ZeroGenerator) {
  const auto f = two_values(random_hermitian(2, 1.0, 1), random_hermitian(2, 1.0, 2));
  const auto out = apply_generator(Generator::zero(StateSpace::indexed(2)), f);
  for (const auto& v : out.values()) {
    EXPECT_EQ(v.max_abs(), 0.0);
  }
}

TEST(Semigroup, TimeZeroIsIdentity) {
  Rng rng(2);
  const auto chain = random_reversible_chain(5, rng);
  const auto f = random_matrix_function(5, 3, 1.0, rng);
  const auto p0 = semigroup_apply(chain.q, chain.mu, 0.0, f);
  for (int x = 0; x < 5; ++x) EXPECT_LE(dist(p0[x], f[x]), 1e-12);
}

TEST(Semigroup, ErgodicLimit) {
  const auto f = two_values(random_hermitian(2, 1.0, 4), random_hermitian(2, 1.0, 5));
  const auto mean = expectation(uniform(2), f);
  const auto p = semigroup_apply(two_state_generator(), 50.0, f);
  EXPECT_LE(dist(p[0], mean), 1e-9);
  EXPECT_LE(dist(p[1], mean), 1e-9);
}

TEST(Semigroup, ConstantFixed) {
  Rng rng(6);
  const auto chain = random_reversible_chain(4, rng);
  const HermitianMatrix c = random_hermitian(3, 1.0, rng);
  const auto out = semigroup_apply(chain.q, chain.mu, 2.5, MatrixFunction::constant(4, c));
  for (const auto& v : out.values()) {
    EXPECT_LE(dist(v, c), 1e-12);
  }
}

TEST(Semigroup, NegativeTimeRejected) {
  EXPECT_THROW(semigroup_apply(two_state_generator(), -1.0, MatrixFunction::constant(2, HermitianMatrix::identity(1))),
               ValidationError);
}

TEST(Semigroup, RowsAreProbabilityVectors) {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 6), rng, 2.0);
    const RMatrix p = transition_matrix(chain.q, rng.uniform(0.0, 4.0), &chain.mu);
    for (Eigen::Index x = 0; x < p.rows(); ++x) {
      EXPECT_NEAR(p.row(x).sum(), 1.0, 1e-9);
      EXPECT_GE(p.row(x).minCoeff(), -1e-12);
    }
  }
}

TEST(Semigroup, ReversibleAndFallbackPathsAgree) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 6), rng, 1.5);
    const double t = rng.uniform(0.0, 5.0);
    const RMatrix a = transition_matrix(chain.q, t, &chain.mu);
    const RMatrix b = transition_matrix(chain.q, t);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Semigroup, NonReversibleFallback) {
  // Cyclic walk on three states; its exponential is a circulant matrix.
  RMatrix q(3, 3);
  q << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  const Generator gen(StateSpace::indexed(3), q);
  const RMatrix p = transition_matrix(gen, 1.0);
  const double t = 1.0;
  const double w = std::sqrt(3.0) / 2.0 * t;
  const double e = std::exp(-1.5 * t) / 3.0;
  const double a0 = 1.0 / 3.0 + 2.0 * e * std::cos(w);
  const double a1 = 1.0 / 3.0 + e * (-std::cos(w) + std::sqrt(3.0) * std::sin(w));
  const double a2 = 1.0 / 3.0 + e * (-std::cos(w) - std::sqrt(3.0) * std::sin(w));
  EXPECT_NEAR(p(0, 0), a0, 1e-12);
  EXPECT_NEAR(p(0, 1), a1, 1e-12);
  EXPECT_NEAR(p(0, 2), a2, 1e-12);
  EXPECT_NEAR(p(1, 2), a1, 1e-12);
}

TEST(Semigroup, SemigroupLaw) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), 2, 1.0, rng);
    const double s = rng.uniform(0.0, 3.0);
    const double t = rng.uniform(0.0, 3.0);
    const auto lhs = semigroup_apply(chain.q, chain.mu, s + t, f);
    const auto rhs = semigroup_apply(chain.q, chain.mu, s, semigroup_apply(chain.q, chain.mu, t, f));
    for (int x = 0; x < f.size(); ++x) EXPECT_LE(dist(lhs[x], rhs[x]), 1e-8 * (1.0 + f.sup_norm()));
  }
}

TEST(Semigroup, Stationarity) {
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), 3, 1.0, rng);
    const auto pf = semigroup_apply(chain.q, chain.mu, rng.uniform(0.0, 3.0), f);
    EXPECT_LE(dist(expectation(chain.mu, pf), expectation(chain.mu, f)), 1e-9);
  }
}

TEST(Expectation, Examples) {
  const HermitianMatrix m = random_hermitian(2, 1.0, 12);
  EXPECT_LE(dist(expectation(uniform(3), MatrixFunction::constant(3, m)), m), 1e-15);
  EXPECT_LE(dist(expectation(uniform(2), two_values(HermitianMatrix::zero(2), m * 2.0)), m), 1e-15);
  const auto point = FiniteMeasure::point_mass(StateSpace::indexed(2), 1);
  EXPECT_LE(dist(expectation(point, two_values(HermitianMatrix::zero(2), m)), m), 1e-15);
}

TEST(SemigroupProperties, ConstantFunctionEqualities) {
  Rng rng(13);
  const auto chain = random_reversible_chain(4, rng);
  const auto f = MatrixFunction::constant(4, random_hermitian(2, 1.0, rng));
  for (const auto& r : check_semigroup_properties(chain.q, chain.mu, f, 0.7)) {
    EXPECT_TRUE(r.pass) << r.name;
    EXPECT_GE(r.margin, -1e-10) << r.name;
    if (r.name == "square_jensen" || r.name == "trace_jensen") {
      EXPECT_LE(std::abs(r.margin), 1e-10) << r.name;
    }
  }
}

TEST(SemigroupProperties, TwoStateFuzz) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const double a = rng.uniform(0.1, 2.0);
    const double b = rng.uniform(0.1, 2.0);
    const FiniteMeasure mu(StateSpace::indexed(2), {b / (a + b), a / (a + b)});
    const auto f = random_matrix_function(2, rng.uniform_int(1, 3), 1.0, rng);
    for (const auto& r : check_semigroup_properties(two_state_generator(a, b), mu, f, rng.uniform(0.0, 3.0))) {
      EXPECT_TRUE(r.pass) << r.name << " seed " << seed;
    }
  }
}

TEST(SemigroupProperties, TimeZeroSquareEquality) {
  Rng rng(14);
  const auto chain = random_reversible_chain(3, rng);
  const auto f = random_matrix_function(3, 2, 1.0, rng);
  const auto results = check_semigroup_properties(chain.q, chain.mu, f, 0.0);
  for (const auto& r : results) {
    if (r.name == "square_jensen") EXPECT_LE(std::abs(r.margin), 1e-12);
  }
  EXPECT_EQ(results.size(), 6u);
}

TEST(SemigroupProperties, ExpJensenOnCorpus) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(derive_seed(77, 0, seed));
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const double t = rng.uniform(0.0, 3.0);
    const auto pf = semigroup_apply(chain.q, chain.mu, t, f);
    const auto pexp = semigroup_apply(chain.q, chain.mu, t, f.map([](double v) { return std::exp(v); }));
    const auto pf2 = semigroup_apply(chain.q, chain.mu, t, f.square());
    for (int x = 0; x < f.size(); ++x) {
      EXPECT_LE(mat_exp(pf[x]).trace(), pexp[x].trace() + 1e-8);
      EXPECT_GE(lambda_min(pf2[x] - pf[x].square()), -1e-9);
    }
  }
}

TEST(RandomChain, ReversibleAndNormalized) {
  Rng rng(15);
  for (int i = 0; i < 30; ++i) {
    const int n = rng.uniform_int(1, 6);
    const auto chain = random_reversible_chain(n, rng, 1.0);
    EXPECT_TRUE(is_reversible(chain.q, chain.mu));
    double worst = 0.0;
    for (int x = 0; x < n; ++x) worst = std::max(worst, chain.q.exit_rate(x));
    if (n > 1) EXPECT_NEAR(worst, 1.0, 1e-12);
  }
}

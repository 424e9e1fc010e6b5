#include <gtest/gtest.h>

#include <cmath>

#include "matconc/concentration.hpp"
#include "matconc/errors.hpp"
#include "matconc/product.hpp"
#include "matconc/scp.hpp"
#include "support.hpp"

using namespace matconc;
using mt::two_state_generator;
using mt::uniform;

namespace {

// Centered g rescaled so that alpha * v_g = target.
MatrixFunction centered_scaled(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f,
                               double alpha, double target) {
  const MatrixFunction c = f.shifted(expectation(mu, f) * -1.0);
  const double v = gamma_sup_norm(q, c);
  return c.scaled(std::sqrt(target / (alpha * v)));
}

}  // namespace

TEST(TailBound, Shape) {
  const TailBoundSpec spec{3, 1.0, 0.5};
  EXPECT_DOUBLE_EQ(spec(0.0), 3.0);
  EXPECT_DOUBLE_EQ(spec.clipped(0.0), 1.0);
  EXPECT_THROW(spec(-0.1), ValidationError);
  double prev = spec(0.0);
  for (double t = 0.1; t < 10.0; t += 0.1) {
    const double b = spec(t);
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_NEAR(spec(1.0), 3.0 * std::exp(-1.0 / 2.0), 1e-15);
}

TEST(TailBound, ZeroVarianceIsZeroAboveZero) {
  const TailBoundSpec spec{2, 1.0, 0.0};
  EXPECT_EQ(spec(0.5), 0.0);
}

TEST(TailBound, SpecializationsMatchDisplayedForms) {
  for (double vf : {0.1, 1.0, 4.0}) {
    for (double t : {0.0, 0.3, 2.0, 7.0}) {
      EXPECT_NEAR(product_bound_spec(2, vf)(t), product_tail_display(2, vf, t), 1e-14);
      EXPECT_NEAR(gaussian_bound_spec(2, vf)(t), poincare_tail_bound({2, 1.0, vf}, t), 1e-14);
    }
  }
  for (int k : {1, 2, 3}) {
    for (double t : {0.0, 1.0, 5.0}) EXPECT_NEAR(scp_lipschitz_bound_spec(3, k)(t), scp_tail_display(3, k, t), 1e-14);
  }
}

TEST(Chernoff, DeltaInsideLimit) {
  for (double av : {0.1, 1.0, 10.0}) {
    for (double t : {0.01, 1.0, 100.0}) {
      const double delta = chernoff_delta(1.0, av, t);
      EXPECT_GT(delta, 0.0);
      EXPECT_LT(delta, laplace_delta_limit(1.0, av));
    }
  }
  const auto grid = laplace_delta_grid(1.0, 2.0, 20);
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_GT(grid.front(), 0.0);
  EXPECT_LT(grid.back(), laplace_delta_limit(1.0, 2.0));
}

TEST(Laplace, SidesAtZero) {
  const MatrixFunction f({HermitianMatrix::identity(3), HermitianMatrix::identity(3) * -1.0});
  EXPECT_NEAR(laplace_lhs(uniform(2), f, 0.0), 3.0, 1e-15);
  EXPECT_NEAR(laplace_rhs(3, 1.0, 1.0, 0.0), 3.0, 1e-15);
}

TEST(Laplace, ConstantFunction) {
  const auto r = laplace_bound_check(two_state_generator(), uniform(2), MatrixFunction::constant(2, HermitianMatrix::identity(2)),
                                     0.5, {0.5, 1.0, 5.0});
  EXPECT_TRUE(r.pass);
}

TEST(Laplace, RandomChainsWithCertifiedAlpha) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(8, 0, seed));
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    const double v = gamma_sup_norm(chain.q, f);
    const auto r = laplace_bound_check(chain.q, chain.mu, f, alpha, laplace_delta_grid(alpha, v, 20), Tolerance{0.0, 1e-8});
    ASSERT_TRUE(r.pass) << seed;
  }
}

TEST(Laplace, DeltaOutsideRangeRejected) {
  const MatrixFunction f({HermitianMatrix::zero(1), HermitianMatrix::identity(1)});
  const double v = gamma_sup_norm(two_state_generator(), f);
  const double limit = laplace_delta_limit(0.5, v);
  EXPECT_THROW(laplace_bound_check(two_state_generator(), uniform(2), f, 0.5, {limit}), ValidationError);
}

TEST(Recursion, Preconditions) {
  const auto q = two_state_generator();
  const MatrixFunction off({HermitianMatrix::identity(1), HermitianMatrix::identity(1) * 2.0});
  EXPECT_THROW(recursion_step_check(q, uniform(2), off, 1, 0.5), ValidationError);
  const MatrixFunction big({HermitianMatrix::identity(1) * -5.0, HermitianMatrix::identity(1) * 5.0});
  EXPECT_THROW(recursion_step_check(q, uniform(2), big, 1, 0.5), ValidationError);
  const MatrixFunction ok({HermitianMatrix::identity(1) * -0.1, HermitianMatrix::identity(1) * 0.1});
  EXPECT_THROW(recursion_step_check(q, uniform(2), ok, 0, 0.5), ValidationError);
}

TEST(Recursion, FirstPowerMatchesVarianceRoute) {
  // p = 1: Tr E e^{2g} - Tr (E e^g)^2 = Tr Var(e^g) <= alpha Tr E(e^g) <= alpha v_g Tr E e^{2g}.
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    const auto f = random_matrix_function(chain.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
    const auto g = centered_scaled(chain.q, chain.mu, f, alpha, 0.5);
    const auto eg = g.map([](double s) { return std::exp(s); });
    const double var_trace = variance(chain.mu, eg).trace();
    const double energy_trace = dirichlet_form(chain.q, chain.mu, eg).trace();
    const double e2 = expectation(chain.mu, g.map([](double s) { return std::exp(2.0 * s); })).trace();
    EXPECT_LE(var_trace, alpha * energy_trace * (1.0 + 1e-10) + 1e-12);
    EXPECT_LE(energy_trace, gamma_sup_norm(chain.q, g) * e2 * (1.0 + 1e-10) + 1e-12);

    const auto r = recursion_step_check(chain.q, chain.mu, g, 1, alpha, Tolerance{0.0, 1e-8});
    ASSERT_TRUE(r.pass);
    EXPECT_NEAR(r.witness["lhs"].get<double>() - r.witness["rhs_power_term"].get<double>(), var_trace,
                1e-10 * (1.0 + e2));
  }
}

TEST(Recursion, HigherPowers) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const auto chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    const auto f = random_matrix_function(chain.mu.size(), 2, 1.0, rng);
    const auto g = centered_scaled(chain.q, chain.mu, f, alpha, rng.uniform(0.1, 0.9));
    for (int p : {2, 4}) ASSERT_TRUE(recursion_step_check(chain.q, chain.mu, g, p, alpha, Tolerance{0.0, 1e-8}).pass);
  }
}

TEST(ExactTail, TwoPointScalar) {
  const MatrixFunction f({HermitianMatrix::identity(1) * -1.0, HermitianMatrix::identity(1)});
  const auto est = exact_tail(uniform(2), f, {0.0, 0.5, 1.0, 1.5});
  EXPECT_EQ(est.method, TailEstimate::Method::exact);
  EXPECT_DOUBLE_EQ(est.probabilities[0], 0.5);
  EXPECT_DOUBLE_EQ(est.probabilities[1], 0.5);
  EXPECT_DOUBLE_EQ(est.probabilities[2], 0.5);
  EXPECT_DOUBLE_EQ(est.probabilities[3], 0.0);
}

TEST(ExactTail, ConstantFunctionAtZero) {
  const auto est = exact_tail(uniform(3), MatrixFunction::constant(3, HermitianMatrix::identity(2)), {0.0, 0.1});
  EXPECT_DOUBLE_EQ(est.probabilities[0], 1.0);
  EXPECT_DOUBLE_EQ(est.probabilities[1], 0.0);
}

TEST(Dominance, ExactViolationFails) {
  const TailEstimate est{TailEstimate::Method::exact, {0.0, 1.0}, {1.0, 0.9}, {0.0, 0.0}, 0};
  std::vector<TailRow> rows;
  const auto r = dominance_report({1, 1.0, 0.01}, est, &rows);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].pass);
  EXPECT_FALSE(rows[1].pass);
}

TEST(Dominance, MonteCarloBand) {
  const TailEstimate est{TailEstimate::Method::monte_carlo, {1.0}, {0.2}, {0.05}, 1000};
  const TailBoundSpec spec{1, 1.0, 0.05};
  std::vector<TailRow> rows;
  const double b = spec.clipped(1.0);
  ASSERT_LT(b, 0.2);
  ASSERT_GT(b, 0.2 - 0.15);
  EXPECT_TRUE(dominance_report(spec, est, &rows).pass);
  EXPECT_TRUE(rows[0].inconclusive);
}

TEST(Wilson, HalfWidthShrinksAsSquareRoot) {
  const double h1 = wilson_half_width(1000, 10000);
  const double h4 = wilson_half_width(4000, 40000);
  EXPECT_NEAR(h4 / h1, 0.5, 0.01);
  EXPECT_GT(wilson_half_width(0, 100), 0.0);
}

TEST(McTail, QuadruplingHalvesHalfWidth) {
  const TailSampler sampler = [](Rng& rng) { return rng.normal(); };
  const auto a = mc_tail(sampler, {1.0}, 100000, 3);
  const auto b = mc_tail(sampler, {1.0}, 400000, 3);
  EXPECT_NEAR(b.half_widths[0] / a.half_widths[0], 0.5, 0.02);
  const double truth = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(b.probabilities[0], truth, 3.0 * b.half_widths[0]);
}

TEST(McTail, IndependentOfThreads) {
  const TailSampler sampler = [](Rng& rng) { return rng.normal(); };
  const auto a = mc_tail(sampler, {0.0, 1.0, 2.0}, 200000, 4, 1);
  const auto b = mc_tail(sampler, {0.0, 1.0, 2.0}, 200000, 4, 3);
  EXPECT_EQ(a.probabilities, b.probabilities);
  EXPECT_EQ(a.half_widths, b.half_widths);
}

TEST(TailDominance, ProductCorpus) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(derive_seed(11, 0, seed));
    const auto s = random_product_space(rng.uniform_int(1, 3), 3, rng);
    const auto f = random_matrix_function(s.joint_size(), 2, 1.0, rng);
    const auto spec = product_bound_spec(2, product_vf(s, f));
    const auto est = exact_tail(s.joint_measure(), f, linear_grid(3.0 * std::sqrt(spec.alpha * spec.v_gamma), 100));
    ASSERT_TRUE(dominance_report(spec, est).pass) << seed;
  }
}

TEST(TailDominance, ScpLipschitz) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 5, 2);
  Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_lipschitz_function(mu, 2, rng);
    const auto spec = scp_lipschitz_bound_spec(2, 2);
    const auto est = exact_tail(mu.measure(), f, linear_grid(3.0 * std::sqrt(spec.alpha * spec.v_gamma), 100));
    ASSERT_TRUE(dominance_report(spec, est).pass);
  }
}

TEST(TailRows, Csv) {
  const std::vector<TailRow> rows{{0.0, 1.0, 1.0, 0.0, true, false}};
  const std::string csv = tail_rows_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,bound,estimate,half_width,pass");
}

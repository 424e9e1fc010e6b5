#include <gtest/gtest.h>

#include <cmath>

#include "matconc/errors.hpp"
#include "matconc/scp.hpp"
#include "support.hpp"

using namespace matconc;
using mt::dist;

namespace {

// Two antipodal configurations: 1100 and 0011. Conditioning on nothing and
// pivoting on coordinate 0 leaves 011 against 100, which share no covering pair.
CubeMeasure antipodal() { return CubeMeasure(4, 2, {{parse_config("1100"), 0.5}, {parse_config("0011"), 0.5}}); }

struct Case {
  MeasureFamily family;
  int n;
  int k;
};

std::vector<double> ramp(int n) {
  std::vector<double> p;
  for (int i = 0; i < n; ++i) p.push_back((i + 1.0) / (n + 1.0));
  return p;
}

CubeMeasure make(const Case& c) {
  return builtin_measure(c.family, c.n, c.k,
                         c.family == MeasureFamily::conditioned_bernoulli ? ramp(c.n) : std::vector<double>{});
}

const std::vector<Case>& shipped() {
  static const std::vector<Case> cases = {
      {MeasureFamily::uniform_k_subsets, 4, 2},     {MeasureFamily::uniform_k_subsets, 5, 2},
      {MeasureFamily::uniform_k_subsets, 6, 3},     {MeasureFamily::conditioned_bernoulli, 4, 2},
      {MeasureFamily::conditioned_bernoulli, 5, 2}, {MeasureFamily::conditioned_bernoulli, 6, 3}};
  return cases;
}

}  // namespace

TEST(Config, LabelRoundTrip) {
  EXPECT_EQ(config_label(0b01, 2), "10");
  EXPECT_EQ(parse_config("10"), 0b01u);
  EXPECT_EQ(parse_config("0011"), 0b1100u);
  for (Config x = 0; x < 64; ++x) EXPECT_EQ(parse_config(config_label(x, 6)), x);
  EXPECT_EQ(popcount(0b1011), 3);
}

TEST(CubeMeasure, Validation) {
  EXPECT_THROW(CubeMeasure(3, 1, {{parse_config("110"), 1.0}}), ValidationError);
  EXPECT_THROW(CubeMeasure(3, 1, {{parse_config("100"), 0.5}}), ValidationError);
  EXPECT_THROW(CubeMeasure(3, 1, {{parse_config("100"), 1.5}, {parse_config("010"), -0.5}}), ValidationError);
  EXPECT_NO_THROW(CubeMeasure(3, 1, {{parse_config("100"), 1.0}}));
}

TEST(CubeMeasure, SupportSortedByLabel) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 2, 1);
  ASSERT_EQ(mu.support().size(), 2u);
  EXPECT_EQ(mu.state_space().labels(), (std::vector<std::string>{"01", "10"}));
  EXPECT_EQ(mu.index_of(parse_config("10")), 1);
  EXPECT_EQ(mu.index_of(parse_config("11")), -1);
}

TEST(BuiltinMeasure, UniformWeights) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 4, 2);
  EXPECT_EQ(mu.support().size(), 6u);
  for (Config x : mu.support()) EXPECT_NEAR(mu.weight(x), 1.0 / 6.0, 1e-15);
}

TEST(BuiltinMeasure, ConditionedBernoulliWeights) {
  const std::vector<double> p{0.2, 0.5, 0.7};
  const auto mu = builtin_measure(MeasureFamily::conditioned_bernoulli, 3, 1, p);
  const double w0 = 0.2 * 0.5 * 0.3, w1 = 0.8 * 0.5 * 0.3, w2 = 0.8 * 0.5 * 0.7;
  const double z = w0 + w1 + w2;
  EXPECT_NEAR(mu.weight(parse_config("100")), w0 / z, 1e-14);
  EXPECT_NEAR(mu.weight(parse_config("001")), w2 / z, 1e-14);
  EXPECT_THROW(builtin_measure(MeasureFamily::conditioned_bernoulli, 3, 1, {0.2, 0.5}), ValidationError);
  EXPECT_THROW(builtin_measure(MeasureFamily::conditioned_bernoulli, 3, 1, {0.2, 1.0, 0.5}), ValidationError);
}

TEST(Condition, UniformConditional) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 4, 2);
  const auto c = condition(mu, 0b0001, 0b0001);
  EXPECT_NEAR(c.mass, 0.5, 1e-15);
  ASSERT_EQ(c.configs.size(), 3u);
  for (double p : c.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(condition(antipodal(), 0b0011, 0b0001), ValidationError);
  EXPECT_EQ(conditional_measure(mu, 0b0001, 0b0001).size(), 3);
}

TEST(BuildCoupling, PointMassPair) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 2, 1);
  const auto c = build_coupling(mu, 0, 0, 0);
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_EQ(c.entries[0].u, 0b10u);
  EXPECT_EQ(c.entries[0].v, 0u);
  EXPECT_NEAR(c.entries[0].mass, 1.0, 1e-15);
  EXPECT_NEAR(c.p0, 0.5, 1e-15);
  EXPECT_NEAR(c.p1, 0.5, 1e-15);
}

TEST(BuildCoupling, MarginalsAndSupportOnFamilies) {
  for (const auto& cs : shipped()) {
    const auto mu = make(cs);
    for (FlowOrder order : {FlowOrder::lexicographic, FlowOrder::reverse}) {
      for (int s = 0; s < mu.n(); ++s) {
        const auto c = build_coupling(mu, 0, 0, s, order);
        const auto audit = audit_coupling(mu, c);
        EXPECT_LE(audit.marginal_error, 1e-12);
        EXPECT_TRUE(audit.covering_support);
      }
    }
  }
}

TEST(BuildCoupling, HallViolationHasWitness) {
  try {
    build_coupling(antipodal(), 0, 0, 0);
    FAIL() << "expected ScpViolation";
  } catch (const ScpViolation& e) {
    EXPECT_NE(std::string(e.what()).find("SCP violated at"), std::string::npos);
    EXPECT_FALSE(e.witness["deficient_set"].empty());
    EXPECT_LT(e.witness["flow"].get<double>(), 1.0 - 1e-10);
  }
}

TEST(ScpCheck, FamiliesPassCraftedFails) {
  for (const auto& cs : shipped()) EXPECT_TRUE(scp_check(make(cs)).pass);
  const auto r = scp_check(antipodal());
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.witness.contains("deficient_set"));
}

TEST(ScpGenerator, HandValueTwoCoordinates) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 2, 1);
  const auto g = scp_generator(mu);
  const int x = mu.index_of(parse_config("10"));
  const int y = mu.index_of(parse_config("01"));
  EXPECT_NEAR(g.q(x, y), 0.25, 1e-12);
  EXPECT_NEAR(g.q(y, x), 0.25, 1e-12);
}

TEST(ScpGenerator, ShippedFamilies) {
  Rng rng(1);
  for (const auto& cs : shipped()) {
    const auto mu = make(cs);
    const auto g = scp_generator(mu);
    EXPECT_TRUE(validate_generator(g.q, g.mu, Tolerance{1e-10, 0.0}).pass);
    EXPECT_LE(reversibility_residual(g.q, g.mu), 1e-10);
    const auto norm = normalization_check(mu, g);
    EXPECT_TRUE(norm.pass);
    EXPECT_LE(norm.witness["max_exit_rate"].get<double>(), (cs.n - 1.0) / cs.n + 1e-10);
    EXPECT_GE(*spectral_gap(g.q, g.mu).gap, 1.0 / (2.0 * cs.k) - 1e-9);
    for (int i = 0; i < 50; ++i) {
      const auto f = random_matrix_function(g.mu.size(), rng.uniform_int(1, 3), 1.0, rng);
      ASSERT_TRUE(scp_poincare_check(mu, g, f, Tolerance{1e-9, 0.0}).pass);
    }
  }
}

TEST(ScpGenerator, IndependentOfThreadCount) {
  const auto mu = make(shipped()[5]);
  const auto a = scp_generator(mu, FlowOrder::lexicographic, 1);
  const auto b = scp_generator(mu, FlowOrder::lexicographic, 4);
  EXPECT_EQ(a.q.rates(), b.q.rates());
}

TEST(ScpGenerator, ReverseFlowOrderStillValid) {
  for (const auto& cs : shipped()) {
    const auto mu = make(cs);
    const auto g = scp_generator(mu, FlowOrder::reverse);
    EXPECT_LE(reversibility_residual(g.q, g.mu), 1e-10);
    EXPECT_TRUE(normalization_check(mu, g).pass);
  }
}

TEST(ScpGenerator, RejectsNonScp) { EXPECT_THROW(scp_generator(antipodal()), ScpViolation); }

TEST(TwoStateIdentity, Holds) {
  const FiniteMeasure pi(StateSpace::indexed(2), {0.25, 0.75});
  RMatrix q(2, 2);
  q << -3.0, 3.0, 1.0, -1.0;
  const Generator gen(StateSpace::indexed(2), q);
  const MatrixFunction f({random_hermitian(2, 1.0, 3), random_hermitian(2, 1.0, 4)});
  EXPECT_TRUE(two_state_identity(pi, gen, f).pass);
}

TEST(Lipschitz, ScanAndRandomFunction) {
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, 4, 2);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_lipschitz_function(mu, 2, rng);
    EXPECT_NEAR(lipschitz_scan(mu, f).constant, 1.0, 1e-12);
  }
  std::vector<HermitianMatrix> v;
  for (Config x : mu.support()) v.push_back(HermitianMatrix::identity(1) * static_cast<double>(x & 1u));
  const auto scan = lipschitz_scan(mu, MatrixFunction(v));
  EXPECT_NEAR(scan.constant, 0.5, 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "matconc/json_io.hpp"
#include "support.hpp"

using namespace matconc;
using mt::dist;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const JsonError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(DumpStable, SortedKeysAndNumbers) {
  const Json j = {{"b", 1}, {"a", 0.1}, {"c", std::numeric_limits<double>::infinity()}, {"d", {true, "x"}}};
  EXPECT_EQ(dump_stable(j), R"({"a":0.10000000000000001,"b":1,"c":null,"d":[true,"x"]})");
  EXPECT_EQ(dump_stable(Json::array()), "[]");
}

TEST(DumpStable, RoundTripsDoubles) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform_int(-8, 8));
    EXPECT_EQ(Json::parse(dump_stable(Json(x))).get<double>(), x);
  }
}

TEST(MatrixJson, RoundTrip) {
  const HermitianMatrix a = random_hermitian(3, 1.0, 2);
  const Json j = matrix_to_json(a);
  EXPECT_TRUE(j.contains("im"));
  EXPECT_EQ(matrix_from_json(j, "/f").mat(), a.mat());
  const Json real = matrix_to_json(HermitianMatrix::identity(2));
  EXPECT_FALSE(real.contains("im"));
}

TEST(MatrixJson, Errors) {
  EXPECT_NE(error_of([] { matrix_from_json(Json{{"d", 2}, {"re", {{1, 2}, {3, 4}}}}, "/A"); }).find("/A"),
            std::string::npos);
  EXPECT_NE(error_of([] { matrix_from_json(Json{{"d", 2}, {"re", {{1, 0}}}}, "/A"); }).find("/A"), std::string::npos);
}

TEST(ChainJson, RoundTrip) {
  Rng rng(3);
  const auto chain = random_reversible_chain(3, rng);
  const auto f = random_matrix_function(3, 2, 1.0, rng);
  const auto back = chain_from_json(chain_to_json(chain.q, chain.mu, f), "");
  EXPECT_EQ(back.q.rates(), chain.q.rates());
  for (int x = 0; x < 3; ++x) {
    EXPECT_EQ(back.mu[x], chain.mu[x]);
    EXPECT_EQ(back.f[x].mat(), f[x].mat());
  }
}

TEST(ChainJson, RowSumErrorNamesPointer) {
  const Json doc = Json::parse(R"({"mu":[0.5,0.5],"Q":[[-1,1.1],[1,-1]],
    "f":{"d":1,"values":[{"d":1,"re":[[0]]},{"d":1,"re":[[1]]}]}})");
  const std::string msg = error_of([&] { chain_from_json(doc, ""); });
  EXPECT_EQ(msg.rfind("/Q/0", 0), 0u) << msg;
  EXPECT_NE(msg.find("row sums to"), std::string::npos);
}

TEST(ChainJson, NegativeRateNamesEntry) {
  const Json doc = Json::parse(R"({"mu":[0.5,0.5],"Q":[[1,-1],[1,-1]],
    "f":{"d":1,"values":[{"d":1,"re":[[0]]},{"d":1,"re":[[1]]}]}})");
  EXPECT_EQ(error_of([&] { chain_from_json(doc, ""); }).rfind("/Q/0/1", 0), 0u);
}

TEST(ProductJson, RoundTrip) {
  Rng rng(4);
  const auto s = random_product_space(3, 3, rng);
  const auto back = product_from_json(product_to_json(s), "/product");
  ASSERT_EQ(back.n(), s.n());
  for (int i = 0; i < s.n(); ++i) {
    for (int z = 0; z < s.factor(i).size(); ++z) EXPECT_EQ(back.factor(i)[z], s.factor(i)[z]);
  }
}

TEST(PolynomialJson, RoundTrip) {
  Rng rng(5);
  const auto p = random_matrix_polynomial(2, 3, 2, 1.0, rng);
  const auto back = polynomial_from_json(polynomial_to_json(p), "/f");
  ASSERT_EQ(back.terms().size(), p.terms().size());
  for (const auto& [e, c] : p.terms()) EXPECT_EQ(back.terms().at(e).mat(), c.mat());
  EXPECT_FALSE(error_of([] {
                 polynomial_from_json(Json::parse(R"({"n":1,"d":1,"terms":[{"exponents":[-1],"coeff":{"d":1,"re":[[1]]}}]})"),
                                      "/f");
               }).empty());
}

TEST(CubeJson, BuiltinAndWeights) {
  const auto mu = cube_from_json(Json::parse(R"({"builtin":{"kind":"uniform","n":4,"k":2}})"), "/measure");
  EXPECT_EQ(mu.support().size(), 6u);
  const auto back = cube_from_json(cube_to_json(mu), "/measure");
  EXPECT_EQ(back.weights(), mu.weights());
  const auto bern = cube_from_json(
      Json::parse(R"({"builtin":{"kind":"bernoulli","n":3,"k":1,"params":[0.2,0.5,0.7]}})"), "/measure");
  EXPECT_EQ(bern.n(), 3);
  EXPECT_FALSE(error_of([] { cube_from_json(Json::parse(R"({"builtin":{"kind":"dpp","n":3,"k":1}})"), "/measure"); }).empty());
}

TEST(FuzzConfigJson, RoundTripAndDefaults) {
  const FuzzConfig c = FuzzConfig::defaults();
  const FuzzConfig back = fuzz_config_from_json(fuzz_config_to_json(c), "");
  EXPECT_EQ(back.inequalities, c.inequalities);
  EXPECT_EQ(back.trials, 1000);
  EXPECT_TRUE(fuzz_config_from_json(Json::object(), "").inequalities.empty());
  EXPECT_FALSE(error_of([] { fuzz_config_from_json(Json{{"trials", "many"}}, ""); }).empty());
}

TEST(CheckJson, Shape) {
  const auto r = CheckResult::from_margin("x", 0.5, 1.0, Tolerance{}, {{"k", 1}});
  const Json j = check_to_json(r);
  for (const char* key : {"name", "pass", "margin", "scale", "tolerance", "witness"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(FunctionJson, SizeCheck) {
  const auto f = MatrixFunction::constant(3, HermitianMatrix::identity(1));
  EXPECT_NO_THROW(function_from_json(function_to_json(f), "/f", 3));
  EXPECT_THROW(function_from_json(function_to_json(f), "/f", 2), JsonError);
}

TEST(DumpStable, NegativeZeroPrintsAsZero) { EXPECT_EQ(dump_stable(Json(-0.0)), "0"); }

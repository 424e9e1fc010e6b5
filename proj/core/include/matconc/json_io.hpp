#pragma once

// JSON encodings of the library's values and a byte-stable writer.
//
// Parse errors are reported as JsonError carrying the JSON pointer of the
// offending field, e.g. "/Q/0: row sums to 0.1, expected 0".

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matconc/concentration.hpp"
#include "matconc/errors.hpp"
#include "matconc/gaussian.hpp"
#include "matconc/product.hpp"
#include "matconc/scp.hpp"
#include "matconc/traceineq.hpp"

namespace matconc {

using Json = nlohmann::json;

class JsonError : public ValidationError {
 public:
  JsonError(std::string pointer, const std::string& message)
      : ValidationError((pointer.empty() ? std::string("/") : pointer) + ": " + message),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// Compact JSON with keys sorted, floating point numbers written with 17
/// significant digits and non-finite numbers written as null.
std::string dump_stable(const Json& j);

Json tolerance_to_json(const Tolerance& t);
Tolerance tolerance_from_json(const Json& j, const std::string& at);

/// {"d": int, "re": [[...]], "im": [[...]]}; "im" may be omitted.
Json matrix_to_json(const HermitianMatrix& m);
HermitianMatrix matrix_from_json(const Json& j, const std::string& at);

Json check_to_json(const CheckResult& r);

/// {"d": int, "values": [matrix...]}
Json function_to_json(const MatrixFunction& f);
MatrixFunction function_from_json(const Json& j, const std::string& at, int expected_size = -1);

struct ChainScenario {
  Generator q;
  FiniteMeasure mu;
  MatrixFunction f;
};

/// {"states": [labels], "mu": [w...], "Q": [[...]], "f": {...}}
Json chain_to_json(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f);
ChainScenario chain_from_json(const Json& j, const std::string& at);

/// {"factors": [{"weights": [...], "labels": [...]?}...]}
Json product_to_json(const ProductSpace& space);
ProductSpace product_from_json(const Json& j, const std::string& at);

/// {"n": int, "d": int, "terms": [{"exponents": [...], "coeff": matrix}]}
Json polynomial_to_json(const MatrixPolynomial& p);
MatrixPolynomial polynomial_from_json(const Json& j, const std::string& at);

/// {"n", "k", "weights": {"0110": w}} or {"builtin": {"kind", "n", "k", "params"}}
Json cube_to_json(const CubeMeasure& mu);
CubeMeasure cube_from_json(const Json& j, const std::string& at);
MeasureFamily parse_family(const std::string& s, const std::string& at);

Json coupling_to_json(const Coupling& c, int n);

/// {"inequalities": [...], "trials", "d_range": [lo, hi], "seed", "tolerance", "inject_bug"}
FuzzConfig fuzz_config_from_json(const Json& j, const std::string& at);
Json fuzz_config_to_json(const FuzzConfig& c);
Json fuzz_report_to_json(const FuzzReport& r);

Json tail_estimate_to_json(const TailEstimate& e);

}  // namespace matconc

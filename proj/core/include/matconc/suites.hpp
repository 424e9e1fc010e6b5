#pragma once

// Built-in verification suites over seeded random corpora. Every suite is a
// pure function of its options: reports carry no timings and do not depend on
// the worker count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matconc/matcore.hpp"

namespace matconc {

struct SuiteOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  /// Corpus size; 0 selects the suite default.
  int trials = 0;
  /// Monte Carlo sample count; 0 selects the suite default.
  long long samples = 0;
  /// Replaces every check tolerance of the suite when set.
  std::optional<Tolerance> tol;
};

struct SuiteResult {
  std::string name;
  bool pass = true;
  int checks = 0;
  int failures = 0;
  /// Smallest margin seen; compare against the recorded tolerances.
  double worst_margin = 0.0;
  nlohmann::json detail = nlohmann::json::object();
};

nlohmann::json suite_to_json(const SuiteResult& r);

/// two_state, product, gaussian_poincare, scp, tail_dominance, gaussian_mc,
/// laplace_recursion, trace_fuzz, semigroup
const std::vector<std::string>& suite_names();

/// Throws ValidationError for unknown names.
SuiteResult run_suite(const std::string& name, const SuiteOptions& options);
std::vector<SuiteResult> run_all_suites(const SuiteOptions& options);

SuiteResult suite_two_state(const SuiteOptions& options);
SuiteResult suite_product(const SuiteOptions& options);
SuiteResult suite_gaussian_poincare(const SuiteOptions& options);
SuiteResult suite_scp(const SuiteOptions& options);
SuiteResult suite_tail_dominance(const SuiteOptions& options);
SuiteResult suite_gaussian_mc(const SuiteOptions& options);
SuiteResult suite_laplace_recursion(const SuiteOptions& options);
SuiteResult suite_trace_fuzz(const SuiteOptions& options);
SuiteResult suite_semigroup(const SuiteOptions& options);

}  // namespace matconc

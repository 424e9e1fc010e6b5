// Runs every built-in suite once per criterion and prints one line each:
//   AC<n> PASS|FAIL <suite> checks=<c> failures=<f> time=<s>s [limit=<s>s]
// AC10 reruns every suite with 8 workers and compares the serialized reports
// byte for byte against the single-worker run.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "matconc/json_io.hpp"
#include "matconc/suites.hpp"

namespace {

struct Criterion {
  const char* id;
  const char* suite;
  double limit_seconds;  // 0 = none
};

const std::vector<Criterion> kCriteria = {
    {"AC1", "two_state", 1.0},          {"AC2", "product", 30.0},       {"AC3", "gaussian_poincare", 30.0},
    {"AC4", "scp", 300.0},              {"AC5", "tail_dominance", 0.0}, {"AC6", "gaussian_mc", 120.0},
    {"AC7", "laplace_recursion", 0.0},  {"AC8", "trace_fuzz", 120.0},   {"AC9", "semigroup", 0.0},
};

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = 20240501;
  if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);

  matconc::SuiteOptions serial;
  serial.seed = seed;
  serial.threads = 1;

  bool all = true;
  std::vector<std::string> reports;
  for (const auto& c : kCriteria) {
    const auto t0 = std::chrono::steady_clock::now();
    const matconc::SuiteResult r = matconc::run_suite(c.suite, serial);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(matconc::dump_stable(matconc::suite_to_json(r)));
    const bool in_time = c.limit_seconds <= 0.0 || secs < c.limit_seconds;
    const bool ok = r.pass && in_time;
    all = all && ok;
    std::printf("%s %s %s checks=%d failures=%d worst_margin=%.3g time=%.2fs", c.id, ok ? "PASS" : "FAIL", c.suite,
                r.checks, r.failures, r.worst_margin == 0.0 ? 0.0 : r.worst_margin, secs);
    if (c.limit_seconds > 0.0) std::printf(" limit=%.0fs", c.limit_seconds);
    std::printf("\n");
    if (!r.pass) std::printf("  detail: %s\n", matconc::dump_stable(r.detail).c_str());
    std::fflush(stdout);
  }

  matconc::SuiteOptions wide = serial;
  wide.threads = 8;
  std::vector<std::string> mismatched;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    const std::string again = matconc::dump_stable(matconc::suite_to_json(matconc::run_suite(kCriteria[i].suite, wide)));
    if (again != reports[i]) mismatched.emplace_back(kCriteria[i].suite);
  }
  const bool det = mismatched.empty();
  all = all && det;
  std::printf("AC10 %s determinism suites=%zu threads=1,8", det ? "PASS" : "FAIL", kCriteria.size());
  for (const auto& m : mismatched) std::printf(" mismatch=%s", m.c_str());
  std::printf("\n");

  return all ? 0 : 1;
}

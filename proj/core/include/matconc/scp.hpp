#pragma once

// k-homogeneous measures on {0,1}^n with the stochastic covering property:
// conditional measures, covering couplings by max-flow, the coupling-built
// generator on the support, and its normalization/Poincare checks.
//
// Configurations are bitmasks: bit i is coordinate i (0-based), and the
// label of a configuration is the string whose i-th character is bit i.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "matconc/dirichlet.hpp"

namespace matconc {

using Config = std::uint32_t;

/// Largest n accepted by the exhaustive routines.
inline constexpr int kMaxCubeDim = 12;

std::string config_label(Config x, int n);
Config parse_config(const std::string& label);
int popcount(Config x);

class CubeMeasure {
 public:
  /// Weights must be positive, on configurations with exactly k ones, and sum to 1 within 1e-12.
  CubeMeasure(int n, int k, std::map<Config, double> weights);

  int n() const { return n_; }
  int k() const { return k_; }
  const std::map<Config, double>& weights() const { return weights_; }
  double weight(Config x) const;
  /// Support in ascending label order.
  const std::vector<Config>& support() const { return support_; }

  StateSpace state_space() const;
  FiniteMeasure measure() const;
  /// Index of x in support(), or -1.
  int index_of(Config x) const;

 private:
  int n_;
  int k_;
  std::map<Config, double> weights_;
  std::vector<Config> support_;
};

enum class MeasureFamily { uniform_k_subsets, conditioned_bernoulli };

/// uniform_k_subsets ignores params; conditioned_bernoulli needs n success
/// probabilities in (0, 1).
CubeMeasure builtin_measure(MeasureFamily kind, int n, int k, const std::vector<double>& params = {});

/// Joint configurations z with z & s_mask == xs and their conditional weights.
struct Conditional {
  Config s_mask = 0;
  Config xs = 0;
  double mass = 0.0;  ///< P(xi_S = x_S)
  std::vector<Config> configs;
  std::vector<double> probs;
};

/// mu(. | xi_S = x_S); throws ValidationError naming (S, x_S) on zero mass.
Conditional condition(const CubeMeasure& mu, Config s_mask, Config xs);
/// The same conditional as a FiniteMeasure over configurations on S^c,
/// labelled by the bits of S^c in increasing coordinate order.
FiniteMeasure conditional_measure(const CubeMeasure& mu, Config s_mask, Config xs);

enum class FlowOrder { lexicographic, reverse };

struct CouplingEntry {
  Config u = 0;  ///< configuration on the free coordinates with xi_s = 0
  Config v = 0;  ///< configuration on the free coordinates with xi_s = 1; u covers v
  double mass = 0.0;
};

/// Coupling of mu(.|x_S, xi_s=0) and mu(.|x_S, xi_s=1) on the free
/// coordinates (S u {s})^c, supported on covering pairs.
struct Coupling {
  Config s_mask = 0;
  Config xs = 0;
  int s = 0;
  Config free_mask = 0;
  double condition_mass = 0.0;  ///< P(xi_S = x_S)
  double p0 = 0.0;  ///< P(xi_s = 0 | x_S)
  double p1 = 0.0;  ///< P(xi_s = 1 | x_S)
  std::vector<CouplingEntry> entries;  ///< sorted by (u, v)

  double mass(Config u, Config v) const;
};

/// Thrown by build_coupling when no covering coupling exists. `witness` is a
/// Hall-deficient set of xi_s = 0 configurations with its neighbourhood.
class ScpViolation : public std::runtime_error {
 public:
  ScpViolation(const std::string& what, nlohmann::json witness)
      : std::runtime_error(what), witness(std::move(witness)) {}
  nlohmann::json witness;
};

/// Max-flow coupling; throws ScpViolation when the flow is below 1 - 1e-10.
Coupling build_coupling(const CubeMeasure& mu, Config s_mask, Config xs, int s,
                        FlowOrder order = FlowOrder::lexicographic);

/// Largest marginal error and whether every entry is a covering pair.
struct CouplingAudit {
  double marginal_error = 0.0;
  bool covering_support = true;
};
CouplingAudit audit_coupling(const CubeMeasure& mu, const Coupling& c);

/// Builds a coupling for every (S, x_S, s) with both conditionals defined.
/// Fails on the first violation, with its witness.
CheckResult scp_check(const CubeMeasure& mu, FlowOrder order = FlowOrder::lexicographic);

struct ScpGenerator {
  Generator q;
  FiniteMeasure mu;
  /// Every coupling the construction used, ordered by (S, x_S, s).
  std::vector<Coupling> couplings;
  double worst_marginal_error = 0.0;
};

/// The coupling-built generator on the support of mu. Throws ScpViolation when
/// scp_check fails. Pair rows are evaluated on `threads` workers; the result
/// does not depend on the worker count.
ScpGenerator scp_generator(const CubeMeasure& mu, FlowOrder order = FlowOrder::lexicographic,
                           int threads = 1);

/// max_x -Q(x,x) <= 1 (+1e-10). Witness reports the max, argmax and the
/// sharper (n-1)/n threshold.
CheckResult normalization_check(const CubeMeasure& mu, const ScpGenerator& g);

/// lambda_min(2k E(f) - Var(f)) >= -tol on the support of mu.
CheckResult scp_poincare_check(const CubeMeasure& mu, const ScpGenerator& g,
                               const MatrixFunction& f, Tolerance tol = {});

/// Two-state identity Var_pi(f) = E(f) / (Q(0,1) + Q(1,0)), within 1e-10 (1 + scale).
CheckResult two_state_identity(const FiniteMeasure& pi, const Generator& qt, const MatrixFunction& f);

/// max over distinct support pairs of ||f(x) - f(y)|| / ||x - y||_1.
struct LipschitzScan {
  double constant = 0.0;
  Config x = 0;
  Config y = 0;
};
LipschitzScan lipschitz_scan(const CubeMeasure& mu, const MatrixFunction& f);

/// Random f on the support rescaled to Lipschitz constant exactly 1.
MatrixFunction random_lipschitz_function(const CubeMeasure& mu, int d, Rng& rng);

}  // namespace matconc

#pragma once

// Numerical checkers for four matrix trace inequalities and a seeded fuzzing
// harness with counterexample shrinking.

#include <string>
#include <variant>
#include <vector>

#include "matconc/chain.hpp"

namespace matconc {

/// Finitely supported law of a random Hermitian matrix.
class MatrixDistribution {
 public:
  struct Atom {
    double prob;
    HermitianMatrix value;
  };

  explicit MatrixDistribution(std::vector<Atom> atoms);
  static MatrixDistribution point_mass(const HermitianMatrix& m);

  int dim() const { return atoms_.front().value.dim(); }
  int size() const { return static_cast<int>(atoms_.size()); }
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
};

/// Tr[(E(e^A - e^B)^2)^p] <= c Tr[(E[(A-B) e^{2B} (A-B)])^p] + c Tr[(e^A E[(A-B)^2] e^A)^p]
/// with c = 1/2. `inject_bug` replaces c by 1/4 to exercise the harness.
CheckResult check_mean_value_trace(const HermitianMatrix& a, const MatrixDistribution& b, int p,
                                   Tolerance tol = {}, bool inject_bug = false);

struct JointAtom {
  double prob;
  HermitianMatrix k;
  HermitianMatrix z;  ///< PSD
};

/// E[KZK] <= (E[K Z^p K])^{1/p} when E[K^2] <= I (K is rescaled by
/// 1/sqrt(lambda_max(E K^2)) when that exceeds 1 + 1e-12), together with the
/// trace form Tr[(E KZK)^p] <= E Tr[K Z^p K]. Margin is the operator-order
/// slack; the trace slack is in the witness and must also pass.
CheckResult check_contraction_power(std::vector<JointAtom> joint, double p, Tolerance tol = {});

/// Tr[(A+B)^p] <= (g/(g-1))^{p-1} Tr A^p + g^{p-1} Tr B^p for g > 1.
CheckResult check_weighted_convexity(const HermitianMatrix& a, const HermitianMatrix& b, double gamma,
                                     int p, Tolerance tol = {});

/// Tr[(E(e^g))^p] <= sup||Gamma(g)||^p Tr E[e^{2pg}] on a reversible chain.
CheckResult check_dirichlet_laplace(const Generator& q, const FiniteMeasure& mu,
                                    const MatrixFunction& g, int p, Tolerance tol = {});

enum class Inequality { mean_value_trace, contraction_power, weighted_convexity, dirichlet_laplace };

const char* to_string(Inequality id);
/// Throws ValidationError for unknown ids.
Inequality parse_inequality(const std::string& id);
std::vector<Inequality> all_inequalities();

struct MeanValueInstance {
  HermitianMatrix a;
  MatrixDistribution b;
  int p;
};
struct ContractionInstance {
  std::vector<JointAtom> joint;
  double p;
};
struct ConvexityInstance {
  HermitianMatrix a;
  HermitianMatrix b;
  double gamma;
  int p;
};
struct DirichletLaplaceInstance {
  Generator q;
  FiniteMeasure mu;
  MatrixFunction g;
  int p;
};
using FuzzInstance =
    std::variant<MeanValueInstance, ContractionInstance, ConvexityInstance, DirichletLaplaceInstance>;

int instance_dim(const FuzzInstance& inst);
int instance_atoms(const FuzzInstance& inst);
CheckResult evaluate_instance(const FuzzInstance& inst, Tolerance tol, bool inject_bug);
/// Deterministic draw for (id, seed) with d uniform in [d_lo, d_hi].
FuzzInstance generate_instance(Inequality id, std::uint64_t seed, int d_lo, int d_hi);

struct ShrinkResult {
  FuzzInstance instance;
  CheckResult result;
  int steps = 0;
};

/// Greedy shrinking: drop atoms, drop the last row/column (down to d_floor),
/// halve all matrix norms. A step is kept only if the instance still violates
/// and its relative margin margin/scale stays at or below that of the input
/// instance (+1e-12).
ShrinkResult shrink_instance(const FuzzInstance& inst, Tolerance tol, bool inject_bug, int d_floor);

struct FuzzConfig {
  std::vector<std::string> inequalities;
  int trials = 1000;
  int d_lo = 2;
  int d_hi = 3;
  std::uint64_t seed = 0;
  Tolerance tol{1e-8, 1e-8};
  bool inject_bug = false;

  /// All four inequalities, 1000 trials, d in [2, 3].
  static FuzzConfig defaults();
};

struct FuzzViolation {
  int trial = 0;
  std::uint64_t seed = 0;
  double margin = 0.0;
  double scale = 0.0;
  nlohmann::json original;
  nlohmann::json shrunk;
  double shrunk_margin = 0.0;
  double shrunk_scale = 0.0;
  int shrunk_d = 0;
  int shrunk_atoms = 0;
  int shrink_steps = 0;
};

struct FuzzReport {
  std::string inequality;
  int trials = 0;
  std::vector<FuzzViolation> violations;
  double worst_margin = 0.0;
  /// min over trials of margin / (1 + scale)
  double worst_normalized_margin = 0.0;
};

/// One report per configured inequality, in configuration order. Trial i of
/// inequality `id` uses derive_seed(master_seed, id + 1, i); results do not
/// depend on `threads`.
std::vector<FuzzReport> fuzz_campaign(const FuzzConfig& config, std::uint64_t master_seed,
                                      int threads = 1);

nlohmann::json instance_to_json(const FuzzInstance& inst);

}  // namespace matconc

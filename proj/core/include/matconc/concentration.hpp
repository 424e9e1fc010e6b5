#pragma once

// Tail bounds d exp(-t^2 / (2 alpha v + t sqrt(2 alpha v))) and their
// specializations, the Laplace-transform bound, the single recursion step,
// and exact / Monte Carlo tail estimates with dominance reports.

#include <functional>
#include <string>
#include <vector>

#include "matconc/dirichlet.hpp"

namespace matconc {

struct TailBoundSpec {
  int d = 1;
  double alpha = 1.0;
  double v_gamma = 0.0;

  /// Unclipped b(t); throws ValidationError for t < 0.
  double operator()(double t) const;
  /// min(1, b(t)).
  double clipped(double t) const;
};

double poincare_tail_bound(const TailBoundSpec& spec, double t);

/// Product measures: alpha = 1, v_gamma = v_f / 2 with v_f the product-measure quantity.
TailBoundSpec product_bound_spec(int d, double v_f);
/// Gaussian measure: alpha = 1, v_gamma = sup || sum_i (d_i f)^2 ||.
TailBoundSpec gaussian_bound_spec(int d, double v_f);
/// 1-Lipschitz f under a k-homogeneous SCP measure: alpha = 2k, v_gamma = 2.
TailBoundSpec scp_lipschitz_bound_spec(int d, int k);

/// The displayed product-measure form d exp(-t^2 / (v_f + t sqrt(v_f))).
double product_tail_display(int d, double v_f, double t);
/// The displayed SCP form d exp(-t^2 / (8k + 2t sqrt(2k))).
double scp_tail_display(int d, int k, double t);

/// delta = t / (alpha v + t sqrt(alpha v / 2)).
double chernoff_delta(double alpha, double v, double t);
/// sqrt(2 / (alpha v)): the Laplace bound holds for delta strictly below it.
double laplace_delta_limit(double alpha, double v);
/// `points` deltas evenly spaced strictly inside (0, limit).
std::vector<double> laplace_delta_grid(double alpha, double v, int points);

/// E_mu Tr exp(delta (f - E f)).
double laplace_lhs(const FiniteMeasure& mu, const MatrixFunction& f, double delta);
/// 2d / (2 - alpha v delta^2).
double laplace_rhs(int d, double alpha, double v, double delta);

/// E Tr e^{delta(f - Ef)} <= 2d/(2 - alpha v_f delta^2) at every grid delta, with
/// v_f = sup ||Gamma(f)||. Throws ValidationError for a delta outside the range.
CheckResult laplace_bound_check(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f,
                                double alpha, const std::vector<double>& delta_grid,
                                Tolerance tol = {});

/// Tr[(E e^{2g})^p] <= (1 - alpha v_g)^{-(p-1)} Tr[(E e^g)^{2p}] + alpha v_g Tr E e^{2pg}
/// for centered g with alpha v_g < 1.
CheckResult recursion_step_check(const Generator& q, const FiniteMeasure& mu,
                                 const MatrixFunction& g, int p, double alpha, Tolerance tol = {});

struct TailEstimate {
  enum class Method { exact, monte_carlo };

  Method method = Method::exact;
  std::vector<double> t_grid;
  std::vector<double> probabilities;
  std::vector<double> half_widths;  ///< zero for exact estimates
  long long sample_count = 0;
};

const char* to_string(TailEstimate::Method m);

/// `points` evenly spaced values on [0, t_max].
std::vector<double> linear_grid(double t_max, int points);

/// mu(lambda_max(f - E f) >= t) by enumeration. A state counts when
/// lambda_max >= t - 1e-12 (1 + ||f||), which can only overstate the tail.
TailEstimate exact_tail(const FiniteMeasure& mu, const MatrixFunction& f,
                        const std::vector<double>& t_grid);

/// Draws one sample with the supplied generator and returns lambda_max(f(X) - E f).
using TailSampler = std::function<double(Rng&)>;

/// Batch size for Monte Carlo; batch b draws from Rng(derive_seed(seed, 0, b)).
inline constexpr long long kMcBatch = 1 << 16;
/// Two-sided 99% normal quantile used for the Wilson intervals.
inline constexpr double kWilsonZ99 = 2.5758293035489004;

/// Empirical frequencies with Wilson 99% half-widths. The result depends only
/// on (sampler, grid, samples, seed), not on the worker count.
TailEstimate mc_tail(const TailSampler& sampler, const std::vector<double>& t_grid, long long samples,
                     std::uint64_t seed, int threads = 1);

/// Wilson score half-width for `hits` successes in `n` trials.
double wilson_half_width(long long hits, long long n, double z = kWilsonZ99);

struct TailRow {
  double t = 0.0;
  double bound = 0.0;  ///< clipped at 1
  double estimate = 0.0;
  double half_width = 0.0;
  bool pass = true;
  bool inconclusive = false;
};

/// At every t: estimate - k half_width <= min(1, b(t)) with k = 3 for Monte
/// Carlo and 0 for exact. Monte Carlo points whose raw estimate exceeds the
/// bound but fall inside the band are flagged inconclusive, not failed.
CheckResult dominance_report(const TailBoundSpec& bound, const TailEstimate& estimate,
                             std::vector<TailRow>* rows = nullptr);

std::string tail_rows_csv(const std::vector<TailRow>& rows);

}  // namespace matconc

#pragma once

// Matrix polynomials on R^n under the standard Gaussian measure: symbolic
// derivatives, the Ornstein-Uhlenbeck carre du champ sum_i (d_i f)^2,
// Gauss-Hermite expectations and the Gaussian Poincare check.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "matconc/matcore.hpp"

namespace matconc {

/// sum_a x^a C_a with Hermitian coefficients. Zero coefficients are dropped.
class MatrixPolynomial {
 public:
  using Exponents = std::vector<int>;

  MatrixPolynomial(int n_vars, int dim);
  static MatrixPolynomial constant(int n_vars, const HermitianMatrix& c);
  /// sum_i x_i A_i.
  static MatrixPolynomial linear(const std::vector<HermitianMatrix>& coeffs);

  int n_vars() const { return n_; }
  int dim() const { return d_; }
  const std::map<Exponents, HermitianMatrix>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int total_degree() const;
  bool is_constant() const;

  /// Adds c x^e, merging with an existing term.
  void add_term(const Exponents& e, const HermitianMatrix& c);

  HermitianMatrix evaluate(std::span<const double> x) const;

  MatrixPolynomial& operator+=(const MatrixPolynomial& o);
  MatrixPolynomial& operator-=(const MatrixPolynomial& o);
  friend MatrixPolynomial operator+(MatrixPolynomial a, const MatrixPolynomial& b) { return a += b; }
  friend MatrixPolynomial operator-(MatrixPolynomial a, const MatrixPolynomial& b) { return a -= b; }
  MatrixPolynomial scaled(double a) const;

  /// f^2.
  MatrixPolynomial square() const;
  /// f g + g f.
  MatrixPolynomial jordan(const MatrixPolynomial& g) const;

 private:
  int n_;
  int d_;
  std::map<Exponents, HermitianMatrix> terms_;
};

/// d f / d x_i with 0-based i.
MatrixPolynomial mpoly_partial(const MatrixPolynomial& f, int i);
/// sum_i (d_i f)^2.
MatrixPolynomial ou_gamma(const MatrixPolynomial& f);
/// L f = sum_i (-x_i d_i f + d_i^2 f).
MatrixPolynomial ou_generator(const MatrixPolynomial& f);

/// One-dimensional Gauss-Hermite rule for the standard normal weight,
/// applied coordinatewise.
struct QuadratureRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  static QuadratureRule gauss_hermite(int order);
  /// sum_j w_j x_j^k.
  double moment(int k) const;
  /// Highest total degree integrated exactly.
  int exactness_degree() const { return 2 * order - 1; }
};

/// Smallest rule order that integrates degree-`degree` polynomials exactly.
int required_order(int degree);

/// E_gamma[f]; throws ValidationError stating the required order if the rule
/// is not exact for f.
HermitianMatrix gauss_expect(const MatrixPolynomial& f, const QuadratureRule& rule);
HermitianMatrix gauss_variance(const MatrixPolynomial& f, const QuadratureRule& rule);

/// lambda_min(E[sum_i (d_i f)^2] - Var(f)) >= -tol. The rule must be exact for f^2.
CheckResult gaussian_poincare_check(const MatrixPolynomial& f, const QuadratureRule& rule,
                                    Tolerance tol = {});

struct Box {
  double lo = -1.0;
  double hi = 1.0;
};

struct VfEstimate {
  double value = 0.0;
  /// True when Gamma(f) is constant and the value is the exact supremum;
  /// false for a grid maximum (a lower bound of the supremum).
  bool exact = false;
};

/// sup_x || sum_i (d_i f)^2 (x) ||. Throws DomainError when Gamma(f) is not
/// constant and no box is given.
VfEstimate gaussian_vf(const MatrixPolynomial& f, std::optional<Box> box = std::nullopt,
                       int grid = 101);

/// Deterministic stream of standard normal vectors in R^n.
class GaussianStream {
 public:
  GaussianStream(int n, std::uint64_t seed);
  int n() const { return n_; }
  void next(std::span<double> out);
  std::vector<double> next();

 private:
  int n_;
  Rng rng_;
};

/// The first N points of GaussianStream(n, seed), row-major.
std::vector<std::vector<double>> gaussian_mc_sample(int n, long long count, std::uint64_t seed);

/// Random polynomial with total degree <= max_degree, d x d coefficients of scale `scale`.
MatrixPolynomial random_matrix_polynomial(int n_vars, int max_degree, int d, double scale,
                                          Rng& rng);

}  // namespace matconc

#pragma once

// Finite state spaces, probability measures, rate matrices and the matrix
// semigroup P_t = e^{tQ} acting entrywise on matrix-valued functions.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "matconc/matcore.hpp"

namespace matconc {

class StateSpace {
 public:
  /// Labels must be non-empty and pairwise distinct.
  explicit StateSpace(std::vector<std::string> labels);
  /// States labelled "0", "1", ..., "n-1".
  static StateSpace indexed(int n);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
  /// -1 when absent.
  int index_of(const std::string& label) const;

  friend bool operator==(const StateSpace&, const StateSpace&) = default;

 private:
  std::vector<std::string> labels_;
};

/// Probability vector on a StateSpace; weights >= 0 summing to 1 within 1e-12.
class FiniteMeasure {
 public:
  FiniteMeasure(StateSpace space, std::vector<double> weights);
  static FiniteMeasure uniform(StateSpace space);
  static FiniteMeasure point_mass(StateSpace space, int state);

  const StateSpace& space() const { return space_; }
  int size() const { return space_.size(); }
  std::span<const double> weights() const { return weights_; }
  double operator[](int i) const { return weights_[static_cast<std::size_t>(i)]; }

 private:
  StateSpace space_;
  std::vector<double> weights_;
};

/// Rate matrix Q: off-diagonal entries >= 0 and rows summing to zero.
class Generator {
 public:
  /// Throws ValidationError naming the offending row on structural violations.
  Generator(StateSpace space, RMatrix rates);
  static Generator zero(StateSpace space);

  const StateSpace& space() const { return space_; }
  int size() const { return space_.size(); }
  const RMatrix& rates() const { return rates_; }
  double operator()(int x, int y) const { return rates_(x, y); }
  double exit_rate(int x) const { return -rates_(x, x); }

 private:
  StateSpace space_;
  RMatrix rates_;
};

/// Table of Hermitian values f(x), one per state, all of the same dimension.
class MatrixFunction {
 public:
  explicit MatrixFunction(std::vector<HermitianMatrix> values);
  static MatrixFunction constant(int n_states, const HermitianMatrix& value);

  int size() const { return static_cast<int>(values_.size()); }
  int dim() const { return values_.front().dim(); }
  const HermitianMatrix& operator[](int x) const { return values_[static_cast<std::size_t>(x)]; }
  const std::vector<HermitianMatrix>& values() const { return values_; }

  /// x -> fn(f(x)) through the spectral calculus.
  MatrixFunction map(const std::function<double(double)>& fn) const;
  MatrixFunction square() const;
  MatrixFunction scaled(double a) const;
  MatrixFunction shifted(const HermitianMatrix& c) const;
  /// sup_x ||f(x)||.
  double sup_norm() const;

 private:
  std::vector<HermitianMatrix> values_;
};

/// Detailed balance residual tolerance used by `is_reversible`.
inline constexpr double kReversibilityTol = 1e-12;

/// Row sums, off-diagonal signs and detailed balance mu(x)Q(x,y) = mu(y)Q(y,x).
/// Margin is the negated worst violation; witness names the offending pair.
CheckResult validate_generator(const Generator& q, const FiniteMeasure& mu, Tolerance tol = {});

/// Worst detailed-balance residual max |mu(x)Q(x,y) - mu(y)Q(y,x)|.
double reversibility_residual(const Generator& q, const FiniteMeasure& mu);
bool is_reversible(const Generator& q, const FiniteMeasure& mu, double tol = kReversibilityTol);

/// (Lf)(x) = sum_y Q(x,y) f(y).
MatrixFunction apply_generator(const Generator& q, const MatrixFunction& f);

/// e^{tQ}. With a measure for which Q is reversible and strictly positive,
/// uses the symmetrization D^{1/2} Q D^{-1/2} and a symmetric eigensolve;
/// otherwise a Taylor scaling-and-squaring exponential.
RMatrix transition_matrix(const Generator& q, double t, const FiniteMeasure* mu = nullptr);

/// (P_t f)(x) = sum_y e^{tQ}(x,y) f(y). Throws ValidationError for t < 0.
MatrixFunction semigroup_apply(const Generator& q, double t, const MatrixFunction& f);
MatrixFunction semigroup_apply(const Generator& q, const FiniteMeasure& mu, double t,
                               const MatrixFunction& f);
/// Applies a precomputed transition matrix.
MatrixFunction apply_kernel(const RMatrix& kernel, const MatrixFunction& f);

HermitianMatrix expectation(const FiniteMeasure& mu, const MatrixFunction& f);
/// E_mu[f g] for a general (non-Hermitian) product.
CMatrix expectation_product(const FiniteMeasure& mu, const MatrixFunction& f,
                            const MatrixFunction& g);

/// The six elementary semigroup/generator properties on one instance:
/// commutation, reversible symmetry (with g = f^2), E[Lf] = 0, positivity
/// preservation (on f shifted to be PSD), (P_t f)^2 <= P_t f^2, and the
/// trace Jensen inequality for phi in {exp, |.|, square}.
std::vector<CheckResult> check_semigroup_properties(const Generator& q, const FiniteMeasure& mu,
                                                    const MatrixFunction& f, double t,
                                                    Tolerance tol = {});

struct ReversibleChain {
  FiniteMeasure mu;
  Generator q;
};

/// Random irreducible reversible chain: random positive measure, symmetric
/// conductances c(x,y) on a random graph containing a spanning path, and
/// Q(x,y) = c(x,y)/mu(x) rescaled so the largest exit rate equals max_rate.
ReversibleChain random_reversible_chain(int n_states, Rng& rng, double max_rate = 1.0);

MatrixFunction random_matrix_function(int n_states, int d, double scale, Rng& rng);

}  // namespace matconc

#pragma once

// Hermitian matrix arithmetic, spectral functional calculus and PSD-order
// comparison. Every matrix function goes through an eigendecomposition;
// matrices in this library are small (d up to ~16).

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "matconc/rng.hpp"

namespace matconc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// Absolute/relative tolerance pair. A quantity q passes a ">= 0" check at
/// scale s iff q >= -(abs + rel * s).
struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;

  double allowance(double scale) const { return abs + rel * scale; }
  Tolerance scaled(double factor) const { return {abs * factor, rel * factor}; }
};

/// Absolute per-entry tolerance on A - A^* accepted by the validating constructor.
inline constexpr double kHermitianEntryTol = 1e-12;

/// Dense d x d complex Hermitian matrix. Stored exactly Hermitian: the
/// validating constructor replaces its input by (M + M^*)/2.
class HermitianMatrix {
 public:
  /// Throws ValidationError if M is not square, is empty, or deviates from
  /// Hermitian by more than kHermitianEntryTol in any entry.
  explicit HermitianMatrix(const CMatrix& m);

  /// Hermitian part (M + M^*)/2 without checking. For internal results that
  /// are Hermitian in exact arithmetic.
  static HermitianMatrix hermitian_part(const CMatrix& m);

  static HermitianMatrix zero(int d);
  static HermitianMatrix identity(int d);
  static HermitianMatrix diagonal(std::span<const double> values);
  static HermitianMatrix from_real(const RMatrix& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& mat() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

  HermitianMatrix& operator+=(const HermitianMatrix& o);
  HermitianMatrix& operator-=(const HermitianMatrix& o);
  HermitianMatrix& operator*=(double a);

  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  HermitianMatrix operator-() const { return *this * -1.0; }

  /// A^2.
  HermitianMatrix square() const;
  /// A B A.
  HermitianMatrix sandwich(const HermitianMatrix& b) const;
  /// Jordan product A B + B A.
  HermitianMatrix jordan(const HermitianMatrix& b) const;

  double trace() const { return m_.trace().real(); }
  /// Operator (spectral) norm.
  double op_norm() const;
  /// Largest |entry|, used for cheap scale estimates.
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  struct NoCheck {};
  HermitianMatrix(CMatrix m, NoCheck) : m_(std::move(m)) {}

  CMatrix m_;
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  ///< ascending
  CMatrix eigenvectors;         ///< unitary, columns are eigenvectors

  HermitianMatrix reconstruct() const;
};

SpectralDecomposition spectral(const HermitianMatrix& a);

Eigen::VectorXd eigenvalues(const HermitianMatrix& a);
double lambda_max(const HermitianMatrix& a);
double lambda_min(const HermitianMatrix& a);

/// f(A) = sum_i f(lambda_i) v_i v_i^*. Throws DomainError naming the
/// eigenvalue if fn returns a non-finite value there.
HermitianMatrix herm_fn(const HermitianMatrix& a, const std::function<double(double)>& fn);

HermitianMatrix mat_exp(const HermitianMatrix& a);
/// A^p for PSD A; eigenvalues in [-1e-12 * (1 + ||A||), 0) are clamped to zero,
/// more negative ones raise DomainError.
HermitianMatrix psd_pow(const HermitianMatrix& a, double p);
/// Integer power by repeated multiplication (no spectral calculus).
HermitianMatrix int_pow(const HermitianMatrix& a, int p);

/// Outcome of an order or inequality check. `margin` is signed slack
/// (negative means violated) and `scale` is the magnitude the relative
/// tolerance is applied to.
struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  double scale = 0.0;
  Tolerance tolerance{};
  nlohmann::json witness = nlohmann::json::object();

  static CheckResult from_margin(std::string name, double margin, double scale, Tolerance tol,
                                 nlohmann::json witness = nlohmann::json::object());
};

/// A <= B in the PSD order: pass iff lambda_min(B - A) >= -(abs + rel ||B - A||).
/// Witness holds the minimizing eigenvector.
CheckResult psd_leq(const HermitianMatrix& a, const HermitianMatrix& b, Tolerance tol = {});

/// GUE-style draw: off-diagonal entries complex Gaussian with E|z|^2 = scale^2,
/// real Gaussian diagonal with standard deviation scale.
HermitianMatrix random_hermitian(int d, double scale, Rng& rng);
HermitianMatrix random_hermitian(int d, double scale, std::uint64_t seed);
/// W W^* / d with W complex Gaussian, rescaled to operator norm `norm`.
HermitianMatrix random_psd(int d, double norm, Rng& rng);
/// Random Hermitian with operator norm exactly `norm` (zero if norm == 0).
HermitianMatrix random_hermitian_with_norm(int d, double norm, Rng& rng);

}  // namespace matconc

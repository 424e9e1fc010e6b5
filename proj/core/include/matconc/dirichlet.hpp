#pragma once

// Matrix variance, carre du champ, Dirichlet form and Poincare certification
// on finite reversible chains.

#include <optional>

#include "matconc/chain.hpp"

namespace matconc {

struct PoincareCertificate {
  enum class Source { spectral_gap, user_supplied, empirical_search };

  double alpha = 0.0;
  Source source = Source::user_supplied;
  std::optional<double> gap;

  static PoincareCertificate user(double alpha);
};

const char* to_string(PoincareCertificate::Source s);

/// E[f^2] - (E f)^2.
HermitianMatrix variance(const FiniteMeasure& mu, const MatrixFunction& f);

/// Gamma(f)(x) = 1/2 sum_y Q(x,y) (f(y) - f(x))^2.
MatrixFunction carre_du_champ(const Generator& q, const MatrixFunction& f);
/// Gamma(f) = 1/2 (L(f^2) - f Lf - (Lf) f), evaluated from the generator.
MatrixFunction carre_du_champ_algebraic(const Generator& q, const MatrixFunction& f);

/// E_mu[Gamma(f)]. Throws ValidationError unless Q is reversible w.r.t. mu.
HermitianMatrix dirichlet_form(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f);
/// -E_mu[f Lf] (Hermitian part); the second route to the same form.
HermitianMatrix dirichlet_form_generator(const Generator& q, const FiniteMeasure& mu,
                                         const MatrixFunction& f);

/// max_x ||Gamma(f)(x)||.
double gamma_sup_norm(const Generator& q, const MatrixFunction& f);

/// Gap below which a chain is treated as reducible.
inline constexpr double kMinSpectralGap = 1e-12;

/// Second-smallest eigenvalue of -D^{1/2} Q D^{-1/2}; alpha = 1/gap.
/// Throws DomainError("no spectral gap") for reducible chains and
/// ValidationError for non-reversible pairs or zero-mass states.
PoincareCertificate spectral_gap(const Generator& q, const FiniteMeasure& mu);

/// lambda_min(alpha E(f) - Var(f)) >= -tol.
CheckResult poincare_check(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f,
                           double alpha, Tolerance tol = {});

/// Var(f) against 2 int_0^{t_max} E(P_t f) dt (Gauss-Legendre, n_nodes) plus
/// the tail estimate e^{-2 gap t_max} ||Var||. Passes iff the operator-norm
/// discrepancy is at most tail + 1e-6.
CheckResult variance_integral_identity(const Generator& q, const FiniteMeasure& mu,
                                       const MatrixFunction& f, double t_max, int n_nodes);

/// Central difference of t -> Var(P_t f) at t against -2 E(P_t f). Uses the
/// spectral form of the reversible semigroup, so t - h may be negative.
/// Passes iff the relative error is at most rel_tol.
CheckResult variance_derivative_check(const Generator& q, const FiniteMeasure& mu,
                                      const MatrixFunction& f, double t, double h = 1e-4,
                                      double rel_tol = 1e-5);

/// Diagnostic lower bound on the optimal matrix Poincare constant: the largest
/// alpha, over `trials` random f of dimension d, for which Var(f) <= alpha E(f)
/// is tight, located by bisection. Not a certificate.
PoincareCertificate empirical_poincare_search(const Generator& q, const FiniteMeasure& mu, int d,
                                              int trials, Rng& rng);

/// Gauss-Legendre nodes and weights on [a, b] (Golub-Welsch).
struct LegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
LegendreRule gauss_legendre(int n, double a, double b);

}  // namespace matconc

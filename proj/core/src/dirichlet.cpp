#include "matconc/dirichlet.hpp"

#include <cmath>
#include <limits>

#include "matconc/errors.hpp"

namespace matconc {

PoincareCertificate PoincareCertificate::user(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
  return {alpha, Source::user_supplied, std::nullopt};
}

const char* to_string(PoincareCertificate::Source s) {
  switch (s) {
    case PoincareCertificate::Source::spectral_gap: return "spectral_gap";
    case PoincareCertificate::Source::user_supplied: return "user_supplied";
    case PoincareCertificate::Source::empirical_search: return "empirical_search";
  }
  return "unknown";
}

HermitianMatrix variance(const FiniteMeasure& mu, const MatrixFunction& f) {
  const HermitianMatrix m = expectation(mu, f);
  return expectation(mu, f.square()) - m.square();
}

MatrixFunction carre_du_champ(const Generator& q, const MatrixFunction& f) {
  if (f.size() != q.size()) throw ValidationError("matrix function does not match the generator");
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(f.size()));
  for (int x = 0; x < q.size(); ++x) {
    CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
    for (int y = 0; y < q.size(); ++y) {
      if (y == x || q(x, y) == 0.0) continue;
      const CMatrix diff = f[y].mat() - f[x].mat();
      acc += (0.5 * q(x, y)) * (diff * diff);
    }
    out.push_back(HermitianMatrix::hermitian_part(acc));
  }
  return MatrixFunction(std::move(out));
}

MatrixFunction carre_du_champ_algebraic(const Generator& q, const MatrixFunction& f) {
  const MatrixFunction lf2 = apply_generator(q, f.square());
  const MatrixFunction lf = apply_generator(q, f);
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(f.size()));
  for (int x = 0; x < f.size(); ++x) {
    out.push_back((lf2[x] - f[x].jordan(lf[x])) * 0.5);
  }
  return MatrixFunction(std::move(out));
}

namespace {

void require_reversible(const Generator& q, const FiniteMeasure& mu) {
  if (q.size() != mu.size()) throw ValidationError("generator and measure sizes differ");
  if (!is_reversible(q, mu)) {
    throw ValidationError("generator is not reversible with respect to the measure");
  }
}

// Eigendecomposition of the symmetrized generator D^{1/2} Q D^{-1/2}.
struct SymmetricSpectrum {
  Eigen::VectorXd sq;
  Eigen::VectorXd inv_sq;
  Eigen::VectorXd evals;  // ascending, of the symmetrized Q (so <= 0)
  RMatrix vecs;

  SymmetricSpectrum(const Generator& q, const FiniteMeasure& mu) {
    require_reversible(q, mu);
    const Eigen::Index n = q.size();
    sq.resize(n);
    inv_sq.resize(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      const double w = mu[static_cast<int>(x)];
      if (!(w > 0.0)) throw ValidationError("measure has a zero-mass state");
      sq(x) = std::sqrt(w);
      inv_sq(x) = 1.0 / sq(x);
    }
    RMatrix sym = sq.asDiagonal() * q.rates() * inv_sq.asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(sym);
    evals = solver.eigenvalues();
    vecs = solver.eigenvectors();
  }

  // e^{tQ} for any real t.
  RMatrix kernel(double t) const {
    const Eigen::VectorXd ex = (evals * t).array().exp();
    return inv_sq.asDiagonal() * (vecs * ex.asDiagonal() * vecs.transpose()) * sq.asDiagonal();
  }
};

}  // namespace

HermitianMatrix dirichlet_form(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f) {
  require_reversible(q, mu);
  return expectation(mu, carre_du_champ(q, f));
}

HermitianMatrix dirichlet_form_generator(const Generator& q, const FiniteMeasure& mu,
                                         const MatrixFunction& f) {
  require_reversible(q, mu);
  const CMatrix e = -expectation_product(mu, f, apply_generator(q, f));
  return HermitianMatrix::hermitian_part(e);
}

double gamma_sup_norm(const Generator& q, const MatrixFunction& f) {
  return carre_du_champ(q, f).sup_norm();
}

PoincareCertificate spectral_gap(const Generator& q, const FiniteMeasure& mu) {
  if (q.size() < 2) throw DomainError("no spectral gap: single-state space");
  const SymmetricSpectrum sp(q, mu);
  // evals of Q are <= 0 ascending; the gap is minus the second largest.
  const double gap = -sp.evals(sp.evals.size() - 2);
  if (!(gap > kMinSpectralGap)) throw DomainError("no spectral gap: chain is reducible");
  return {1.0 / gap, PoincareCertificate::Source::spectral_gap, gap};
}

CheckResult poincare_check(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f,
                           double alpha, Tolerance tol) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  const HermitianMatrix var = variance(mu, f);
  const HermitianMatrix e = dirichlet_form(q, mu, f);
  CheckResult r = psd_leq(var, e * alpha, tol);
  r.name = "poincare";
  r.witness["alpha"] = alpha;
  r.witness["variance_norm"] = var.op_norm();
  r.witness["dirichlet_norm"] = e.op_norm();
  return r;
}

LegendreRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ValidationError("Gauss-Legendre rule needs at least one node");
  RMatrix j = RMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    j(k - 1, k) = beta;
    j(k, k - 1) = beta;
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(j);
  LegendreRule rule;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    const double v = solver.eigenvectors()(0, i);
    rule.nodes.push_back(mid + half * solver.eigenvalues()(i));
    rule.weights.push_back(2.0 * v * v * half);
  }
  return rule;
}

CheckResult variance_integral_identity(const Generator& q, const FiniteMeasure& mu,
                                       const MatrixFunction& f, double t_max, int n_nodes) {
  if (!(t_max > 0.0)) throw ValidationError("t_max must be positive");
  const PoincareCertificate cert = spectral_gap(q, mu);
  const SymmetricSpectrum sp(q, mu);
  const LegendreRule rule = gauss_legendre(n_nodes, 0.0, t_max);

  const HermitianMatrix var = variance(mu, f);
  HermitianMatrix integral = HermitianMatrix::zero(f.dim());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const MatrixFunction pt = apply_kernel(sp.kernel(rule.nodes[i]), f);
    integral += dirichlet_form(q, mu, pt) * (2.0 * rule.weights[i]);
  }
  const double tail = std::exp(-2.0 * *cert.gap * t_max) * var.op_norm();
  const double discrepancy = (var - integral).op_norm();
  const double allowed = tail + 1e-6;
  return CheckResult::from_margin("variance_integral_identity", allowed - discrepancy,
                                  var.op_norm(), Tolerance{0.0, 0.0},
                                  {{"discrepancy", discrepancy},
                                   {"tail_bound", tail},
                                   {"t_max", t_max},
                                   {"nodes", n_nodes},
                                   {"gap", *cert.gap}});
}

CheckResult variance_derivative_check(const Generator& q, const FiniteMeasure& mu,
                                      const MatrixFunction& f, double t, double h,
                                      double rel_tol) {
  if (!(h > 0.0)) throw ValidationError("step h must be positive");
  const SymmetricSpectrum sp(q, mu);
  const HermitianMatrix vp = variance(mu, apply_kernel(sp.kernel(t + h), f));
  const HermitianMatrix vm = variance(mu, apply_kernel(sp.kernel(t - h), f));
  const HermitianMatrix fd = (vp - vm) * (1.0 / (2.0 * h));
  const HermitianMatrix exact = dirichlet_form(q, mu, apply_kernel(sp.kernel(t), f)) * -2.0;
  const double scale = exact.op_norm();
  const double err = (fd - exact).op_norm();
  const double rel = scale > 1e-300 ? err / scale : err;
  return CheckResult::from_margin("variance_derivative", rel_tol - rel, scale, Tolerance{0.0, 0.0},
                                  {{"relative_error", rel}, {"t", t}, {"h", h}});
}

PoincareCertificate empirical_poincare_search(const Generator& q, const FiniteMeasure& mu, int d,
                                              int trials, Rng& rng) {
  if (trials < 1) throw ValidationError("empirical search needs at least one trial");
  double best = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const MatrixFunction f = random_matrix_function(q.size(), d, 1.0, rng);
    const HermitianMatrix var = variance(mu, f);
    const HermitianMatrix e = dirichlet_form(q, mu, f);
    if (e.op_norm() <= 1e-14) continue;
    const double slack = 1e-12 * (1.0 + var.op_norm());
    const auto holds = [&](double a) { return lambda_min(e * a - var) >= -slack; };
    double hi = 1.0;
    while (!holds(hi) && hi < 1e12) hi *= 2.0;
    if (!holds(hi)) continue;
    double lo = 0.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (holds(mid) ? hi : lo) = mid;
    }
    best = std::max(best, hi);
  }
  if (!(best > 0.0)) throw DomainError("empirical search found no informative function");
  return {best, PoincareCertificate::Source::empirical_search, std::nullopt};
}

}  // namespace matconc

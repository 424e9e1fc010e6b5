#include "matconc/matcore.hpp"

#include <cmath>
#include <sstream>

#include "matconc/errors.hpp"

namespace matconc {

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ValidationError("Hermitian matrix must be square with dimension >= 1");
  }
  if (!m.allFinite()) throw ValidationError("Hermitian matrix has non-finite entries");
  const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermitianEntryTol) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |A - A^*| entry = " << dev;
    throw ValidationError(os.str());
  }
  m_ = (m + m.adjoint()) * 0.5;
}

HermitianMatrix HermitianMatrix::hermitian_part(const CMatrix& m) {
  return HermitianMatrix((m + m.adjoint()) * 0.5, NoCheck{});
}

HermitianMatrix HermitianMatrix::zero(int d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  return HermitianMatrix(CMatrix::Zero(d, d), NoCheck{});
}

HermitianMatrix HermitianMatrix::identity(int d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  return HermitianMatrix(CMatrix::Identity(d, d), NoCheck{});
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> values) {
  if (values.empty()) throw ValidationError("dimension must be >= 1");
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(values.size()),
                            static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i];
  }
  return HermitianMatrix(std::move(m), NoCheck{});
}

HermitianMatrix HermitianMatrix::from_real(const RMatrix& m) {
  return HermitianMatrix(m.cast<Complex>());
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o) {
  if (o.dim() != dim()) throw ValidationError("dimension mismatch in matrix sum");
  m_ += o.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator-=(const HermitianMatrix& o) {
  if (o.dim() != dim()) throw ValidationError("dimension mismatch in matrix difference");
  m_ -= o.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double a) {
  m_ *= a;
  return *this;
}

HermitianMatrix HermitianMatrix::square() const { return hermitian_part(m_ * m_); }

HermitianMatrix HermitianMatrix::sandwich(const HermitianMatrix& b) const {
  if (b.dim() != dim()) throw ValidationError("dimension mismatch in sandwich product");
  return hermitian_part(m_ * b.m_ * m_);
}

HermitianMatrix HermitianMatrix::jordan(const HermitianMatrix& b) const {
  if (b.dim() != dim()) throw ValidationError("dimension mismatch in Jordan product");
  return hermitian_part(m_ * b.m_ + b.m_ * m_);
}

double HermitianMatrix::op_norm() const {
  const Eigen::VectorXd ev = eigenvalues(*this);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

HermitianMatrix SpectralDecomposition::reconstruct() const {
  return HermitianMatrix::hermitian_part(eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
                                         eigenvectors.adjoint());
}

SpectralDecomposition spectral(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat());
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd eigenvalues(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition did not converge");
  return solver.eigenvalues();
}

double lambda_max(const HermitianMatrix& a) {
  const Eigen::VectorXd ev = eigenvalues(a);
  return ev(ev.size() - 1);
}

double lambda_min(const HermitianMatrix& a) { return eigenvalues(a)(0); }

HermitianMatrix herm_fn(const HermitianMatrix& a, const std::function<double(double)>& fn) {
  const SpectralDecomposition sd = spectral(a);
  Eigen::VectorXd mapped(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    mapped(i) = fn(sd.eigenvalues(i));
    if (!std::isfinite(mapped(i))) {
      std::ostringstream os;
      os.precision(17);
      os << "matrix function is not finite at eigenvalue " << sd.eigenvalues(i);
      throw DomainError(os.str());
    }
  }
  return HermitianMatrix::hermitian_part(sd.eigenvectors * mapped.cast<Complex>().asDiagonal() *
                                         sd.eigenvectors.adjoint());
}

HermitianMatrix mat_exp(const HermitianMatrix& a) {
  return herm_fn(a, [](double x) { return std::exp(x); });
}

HermitianMatrix psd_pow(const HermitianMatrix& a, double p) {
  const SpectralDecomposition sd = spectral(a);
  const double norm = std::max(std::abs(sd.eigenvalues(0)),
                               std::abs(sd.eigenvalues(sd.eigenvalues.size() - 1)));
  const double floor = -1e-12 * (1.0 + norm);
  Eigen::VectorXd mapped(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    const double lam = sd.eigenvalues(i);
    if (lam < floor) {
      std::ostringstream os;
      os.precision(17);
      os << "power of a non-PSD matrix: eigenvalue " << lam;
      throw DomainError(os.str());
    }
    mapped(i) = std::pow(std::max(lam, 0.0), p);
  }
  return HermitianMatrix::hermitian_part(sd.eigenvectors * mapped.cast<Complex>().asDiagonal() *
                                         sd.eigenvectors.adjoint());
}

HermitianMatrix int_pow(const HermitianMatrix& a, int p) {
  if (p < 0) throw ValidationError("int_pow needs p >= 0");
  CMatrix result = CMatrix::Identity(a.dim(), a.dim());
  CMatrix base = a.mat();
  for (int e = p; e > 0; e >>= 1) {
    if (e & 1) result = result * base;
    if (e > 1) base = base * base;
  }
  return HermitianMatrix::hermitian_part(result);
}

CheckResult CheckResult::from_margin(std::string name, double margin, double scale,
                                     Tolerance tol, nlohmann::json witness) {
  CheckResult r;
  r.name = std::move(name);
  r.margin = margin;
  r.scale = scale;
  r.tolerance = tol;
  r.pass = std::isfinite(margin) && margin >= -tol.allowance(scale);
  r.witness = std::move(witness);
  return r;
}

CheckResult psd_leq(const HermitianMatrix& a, const HermitianMatrix& b, Tolerance tol) {
  if (a.dim() != b.dim()) throw ValidationError("psd_leq: dimension mismatch");
  const HermitianMatrix diff = b - a;
  const SpectralDecomposition sd = spectral(diff);
  const double margin = sd.eigenvalues(0);
  const double scale = std::max(std::abs(sd.eigenvalues(0)),
                                std::abs(sd.eigenvalues(sd.eigenvalues.size() - 1)));
  nlohmann::json w;
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sd.eigenvectors.rows(); ++i) {
    re.push_back(sd.eigenvectors(i, 0).real());
    im.push_back(sd.eigenvectors(i, 0).imag());
  }
  w["vector"] = {{"re", re}, {"im", im}};
  return CheckResult::from_margin("psd_leq", margin, scale, tol, std::move(w));
}

HermitianMatrix random_hermitian(int d, double scale, Rng& rng) {
  if (d < 1) throw ValidationError("random_hermitian: d must be >= 1");
  if (scale < 0.0) throw ValidationError("random_hermitian: scale must be >= 0");
  CMatrix m = CMatrix::Zero(d, d);
  const double off = scale / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    m(i, i) = scale * rng.normal();
    for (int j = i + 1; j < d; ++j) {
      const double re = off * rng.normal();
      const double im = off * rng.normal();
      m(i, j) = Complex(re, im);
      m(j, i) = Complex(re, -im);
    }
  }
  return HermitianMatrix(m);
}

HermitianMatrix random_hermitian(int d, double scale, std::uint64_t seed) {
  Rng rng(seed);
  return random_hermitian(d, scale, rng);
}

HermitianMatrix random_psd(int d, double norm, Rng& rng) {
  CMatrix w(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) w(i, j) = Complex(rng.normal(), rng.normal());
  }
  HermitianMatrix p = HermitianMatrix::hermitian_part(w * w.adjoint());
  const double n = p.op_norm();
  return n > 0.0 ? p * (norm / n) : p;
}

HermitianMatrix random_hermitian_with_norm(int d, double norm, Rng& rng) {
  HermitianMatrix h = random_hermitian(d, 1.0, rng);
  const double n = h.op_norm();
  if (n == 0.0 || norm == 0.0) return HermitianMatrix::zero(d);
  return h * (norm / n);
}

}  // namespace matconc

#include "matconc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matconc/errors.hpp"

namespace matconc {

MatrixPolynomial::MatrixPolynomial(int n_vars, int dim) : n_(n_vars), d_(dim) {
  if (n_vars < 1) throw ValidationError("polynomial needs at least one variable");
  if (dim < 1) throw ValidationError("polynomial coefficient dimension must be >= 1");
}

MatrixPolynomial MatrixPolynomial::constant(int n_vars, const HermitianMatrix& c) {
  MatrixPolynomial p(n_vars, c.dim());
  p.add_term(Exponents(static_cast<std::size_t>(n_vars), 0), c);
  return p;
}

MatrixPolynomial MatrixPolynomial::linear(const std::vector<HermitianMatrix>& coeffs) {
  if (coeffs.empty()) throw ValidationError("linear polynomial needs at least one coefficient");
  const int n = static_cast<int>(coeffs.size());
  MatrixPolynomial p(n, coeffs.front().dim());
  for (int i = 0; i < n; ++i) {
    Exponents e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 1;
    p.add_term(e, coeffs[static_cast<std::size_t>(i)]);
  }
  return p;
}

int MatrixPolynomial::total_degree() const {
  int deg = 0;
  for (const auto& [e, c] : terms_) deg = std::max(deg, std::accumulate(e.begin(), e.end(), 0));
  return deg;
}

bool MatrixPolynomial::is_constant() const { return total_degree() == 0; }

void MatrixPolynomial::add_term(const Exponents& e, const HermitianMatrix& c) {
  if (static_cast<int>(e.size()) != n_) throw ValidationError("exponent vector has wrong length");
  for (int v : e) {
    if (v < 0) throw ValidationError("exponents must be nonnegative");
  }
  if (c.dim() != d_) throw ValidationError("coefficient dimension mismatch");
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    if (c.max_abs() != 0.0) terms_.emplace(e, c);
    return;
  }
  it->second += c;
  if (it->second.max_abs() == 0.0) terms_.erase(it);
}

HermitianMatrix MatrixPolynomial::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw ValidationError("evaluation point has wrong length");
  CMatrix acc = CMatrix::Zero(d_, d_);
  for (const auto& [e, c] : terms_) {
    double m = 1.0;
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) m *= x[static_cast<std::size_t>(i)];
    }
    acc += m * c.mat();
  }
  return HermitianMatrix::hermitian_part(acc);
}

MatrixPolynomial& MatrixPolynomial::operator+=(const MatrixPolynomial& o) {
  if (o.n_ != n_ || o.d_ != d_) throw ValidationError("polynomial shape mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

MatrixPolynomial& MatrixPolynomial::operator-=(const MatrixPolynomial& o) {
  if (o.n_ != n_ || o.d_ != d_) throw ValidationError("polynomial shape mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

MatrixPolynomial MatrixPolynomial::scaled(double a) const {
  MatrixPolynomial p(n_, d_);
  for (const auto& [e, c] : terms_) p.add_term(e, c * a);
  return p;
}

namespace {

MatrixPolynomial::Exponents add_exponents(const MatrixPolynomial::Exponents& a,
                                          const MatrixPolynomial::Exponents& b) {
  MatrixPolynomial::Exponents e(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) e[i] = a[i] + b[i];
  return e;
}

}  // namespace

MatrixPolynomial MatrixPolynomial::square() const {
  MatrixPolynomial p(n_, d_);
  for (auto a = terms_.begin(); a != terms_.end(); ++a) {
    p.add_term(add_exponents(a->first, a->first), a->second.square());
    for (auto b = std::next(a); b != terms_.end(); ++b) {
      p.add_term(add_exponents(a->first, b->first), a->second.jordan(b->second));
    }
  }
  return p;
}

MatrixPolynomial MatrixPolynomial::jordan(const MatrixPolynomial& g) const {
  if (g.n_ != n_ || g.d_ != d_) throw ValidationError("polynomial shape mismatch");
  MatrixPolynomial p(n_, d_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : g.terms_) p.add_term(add_exponents(ea, eb), ca.jordan(cb));
  }
  return p;
}

MatrixPolynomial mpoly_partial(const MatrixPolynomial& f, int i) {
  if (i < 0 || i >= f.n_vars()) {
    throw ValidationError("partial derivative index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(f.n_vars()) + ")");
  }
  MatrixPolynomial p(f.n_vars(), f.dim());
  const auto ui = static_cast<std::size_t>(i);
  for (const auto& [e, c] : f.terms()) {
    if (e[ui] == 0) continue;
    MatrixPolynomial::Exponents de = e;
    de[ui] -= 1;
    p.add_term(de, c * static_cast<double>(e[ui]));
  }
  return p;
}

MatrixPolynomial ou_gamma(const MatrixPolynomial& f) {
  MatrixPolynomial g(f.n_vars(), f.dim());
  for (int i = 0; i < f.n_vars(); ++i) g += mpoly_partial(f, i).square();
  return g;
}

MatrixPolynomial ou_generator(const MatrixPolynomial& f) {
  MatrixPolynomial out(f.n_vars(), f.dim());
  for (int i = 0; i < f.n_vars(); ++i) {
    const MatrixPolynomial di = mpoly_partial(f, i);
    out += mpoly_partial(di, i);
    const auto ui = static_cast<std::size_t>(i);
    for (const auto& [e, c] : di.terms()) {
      MatrixPolynomial::Exponents xe = e;
      xe[ui] += 1;
      out.add_term(xe, -c);
    }
  }
  return out;
}

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1) throw ValidationError("quadrature order must be >= 1");
  RMatrix j = RMatrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    j(k - 1, k) = std::sqrt(static_cast<double>(k));
    j(k, k - 1) = j(k - 1, k);
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(j);
  QuadratureRule rule;
  rule.order = order;
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    const double v = solver.eigenvectors()(0, i);
    rule.nodes.push_back(solver.eigenvalues()(i));
    rule.weights.push_back(v * v);
    total += v * v;
  }
  for (auto& w : rule.weights) w /= total;
  return rule;
}

double QuadratureRule::moment(int k) const {
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * std::pow(nodes[j], k);
  return s;
}

int required_order(int degree) { return std::max(1, (degree + 2) / 2); }

HermitianMatrix gauss_expect(const MatrixPolynomial& f, const QuadratureRule& rule) {
  const int deg = f.total_degree();
  if (rule.order < required_order(deg)) {
    throw ValidationError("quadrature order " + std::to_string(rule.order) +
                          " is not exact for degree " + std::to_string(deg) +
                          "; required order >= " + std::to_string(required_order(deg)));
  }
  std::vector<double> moments(static_cast<std::size_t>(deg + 1));
  for (int k = 0; k <= deg; ++k) moments[static_cast<std::size_t>(k)] = rule.moment(k);
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (const auto& [e, c] : f.terms()) {
    double m = 1.0;
    for (int v : e) m *= moments[static_cast<std::size_t>(v)];
    if (m != 0.0) acc += m * c.mat();
  }
  return HermitianMatrix::hermitian_part(acc);
}

HermitianMatrix gauss_variance(const MatrixPolynomial& f, const QuadratureRule& rule) {
  const HermitianMatrix m = gauss_expect(f, rule);
  return gauss_expect(f.square(), rule) - m.square();
}

CheckResult gaussian_poincare_check(const MatrixPolynomial& f, const QuadratureRule& rule,
                                    Tolerance tol) {
  const HermitianMatrix var = gauss_variance(f, rule);
  const HermitianMatrix e = gauss_expect(ou_gamma(f), rule);
  CheckResult r = psd_leq(var, e, tol);
  r.name = "gaussian_poincare";
  r.witness["variance_norm"] = var.op_norm();
  r.witness["dirichlet_norm"] = e.op_norm();
  r.witness["degree"] = f.total_degree();
  return r;
}

VfEstimate gaussian_vf(const MatrixPolynomial& f, std::optional<Box> box, int grid) {
  const MatrixPolynomial g = ou_gamma(f);
  if (g.is_zero()) return {0.0, true};
  if (g.is_constant()) return {g.terms().begin()->second.op_norm(), true};
  if (!box) throw DomainError("v_f unbounded or box required: Gamma(f) is not constant");
  if (grid < 2) throw ValidationError("grid must have at least 2 points per axis");
  if (!(box->hi > box->lo)) throw ValidationError("box must satisfy lo < hi");
  const int n = f.n_vars();
  double points = 1.0;
  for (int i = 0; i < n; ++i) points *= grid;
  if (points > 1e7) throw ValidationError("grid too large: at most 1e7 points");
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> x(static_cast<std::size_t>(n));
  const double step = (box->hi - box->lo) / (grid - 1);
  double best = 0.0;
  for (;;) {
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = box->lo + step * idx[static_cast<std::size_t>(i)];
    }
    best = std::max(best, g.evaluate(x).op_norm());
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == grid) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return {best, false};
}

GaussianStream::GaussianStream(int n, std::uint64_t seed) : n_(n), rng_(seed) {
  if (n < 1) throw ValidationError("Gaussian stream dimension must be >= 1");
}

void GaussianStream::next(std::span<double> out) {
  if (static_cast<int>(out.size()) != n_) throw ValidationError("output span has wrong length");
  for (auto& v : out) v = rng_.normal();
}

std::vector<double> GaussianStream::next() {
  std::vector<double> v(static_cast<std::size_t>(n_));
  next(v);
  return v;
}

std::vector<std::vector<double>> gaussian_mc_sample(int n, long long count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample count must be >= 1");
  GaussianStream stream(n, seed);
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) out.push_back(stream.next());
  return out;
}

MatrixPolynomial random_matrix_polynomial(int n_vars, int max_degree, int d, double scale,
                                          Rng& rng) {
  if (max_degree < 0) throw ValidationError("degree must be >= 0");
  MatrixPolynomial p(n_vars, d);
  std::vector<int> e(static_cast<std::size_t>(n_vars), 0);
  for (;;) {
    const int deg = std::accumulate(e.begin(), e.end(), 0);
    if (deg <= max_degree && rng.uniform() < 0.5) p.add_term(e, random_hermitian(d, scale, rng));
    int i = 0;
    while (i < n_vars && ++e[static_cast<std::size_t>(i)] > max_degree) e[static_cast<std::size_t>(i++)] = 0;
    if (i == n_vars) break;
  }
  if (max_degree > 0 && p.total_degree() == 0) {
    std::vector<int> lin(static_cast<std::size_t>(n_vars), 0);
    lin[static_cast<std::size_t>(rng.uniform_int(0, n_vars - 1))] = 1;
    p.add_term(lin, random_hermitian(d, scale, rng));
  }
  return p;
}

}  // namespace matconc

#include "matconc/product.hpp"

#include <cmath>

#include "matconc/errors.hpp"

namespace matconc {

ProductSpace::ProductSpace(std::vector<FiniteMeasure> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ValidationError("product space needs at least one factor");
  strides_.assign(factors_.size(), 1);
  for (std::size_t i = factors_.size(); i-- > 0;) {
    strides_[i] = joint_size_;
    const long long next = static_cast<long long>(joint_size_) * factors_[i].size();
    if (next > (1LL << 24)) throw ValidationError("product space is too large to enumerate");
    joint_size_ = static_cast<int>(next);
  }
}

std::vector<int> ProductSpace::decode(int state) const {
  std::vector<int> c(factors_.size());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    c[i] = (state / strides_[i]) % factors_[i].size();
  }
  return c;
}

int ProductSpace::encode(const std::vector<int>& coords) const {
  int s = 0;
  for (std::size_t i = 0; i < factors_.size(); ++i) s += coords[i] * strides_[i];
  return s;
}

int ProductSpace::replace(int state, int i, int z) const {
  const auto ui = static_cast<std::size_t>(i);
  const int cur = (state / strides_[ui]) % factors_[ui].size();
  return state + (z - cur) * strides_[ui];
}

StateSpace ProductSpace::joint_space() const {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(joint_size_));
  for (int s = 0; s < joint_size_; ++s) {
    const std::vector<int> c = decode(s);
    std::string label;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) label += ',';
      label += factors_[i].space().label(c[i]);
    }
    labels.push_back(std::move(label));
  }
  return StateSpace(std::move(labels));
}

FiniteMeasure ProductSpace::joint_measure() const {
  std::vector<double> w(static_cast<std::size_t>(joint_size_));
  double partial = 0.0;
  for (int s = 0; s < joint_size_; ++s) {
    const std::vector<int> c = decode(s);
    double p = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) p *= factors_[i][c[i]];
    w[static_cast<std::size_t>(s)] = p;
    partial += p;
  }
  // Products of normalized factors sum to 1 up to rounding; absorb the residue.
  if (std::abs(partial - 1.0) > 1e-13) {
    for (auto& v : w) v /= partial;
  }
  return FiniteMeasure(joint_space(), std::move(w));
}

Generator product_generator(const ProductSpace& space) {
  const int m = space.joint_size();
  RMatrix q = RMatrix::Zero(m, m);
  for (int x = 0; x < m; ++x) {
    const std::vector<int> c = space.decode(x);
    double exit = 0.0;
    for (int i = 0; i < space.n(); ++i) {
      const FiniteMeasure& fi = space.factor(i);
      for (int z = 0; z < fi.size(); ++z) {
        if (z == c[static_cast<std::size_t>(i)]) continue;
        q(x, space.replace(x, i, z)) += fi[z];
        exit += fi[z];
      }
    }
    q(x, x) = -exit;
  }
  return Generator(space.joint_space(), std::move(q));
}

namespace {

void require_function(const ProductSpace& space, const MatrixFunction& f) {
  if (f.size() != space.joint_size()) {
    throw ValidationError("matrix function has " + std::to_string(f.size()) +
                          " values, product space has " + std::to_string(space.joint_size()));
  }
}

// sum over z_I of prod_{i in I} mu_i(z_i) f(x with x_I = z_I), by recursion over I's members.
void integrate_subset(const ProductSpace& space, const MatrixFunction& f,
                      const std::vector<int>& members, std::size_t pos, int state, double weight,
                      CMatrix& acc) {
  if (pos == members.size()) {
    acc += weight * f[state].mat();
    return;
  }
  const int i = members[pos];
  const FiniteMeasure& fi = space.factor(i);
  for (int z = 0; z < fi.size(); ++z) {
    if (fi[z] == 0.0) continue;
    integrate_subset(space, f, members, pos + 1, space.replace(state, i, z), weight * fi[z], acc);
  }
}

}  // namespace

HermitianMatrix product_semigroup_closed_form(const ProductSpace& space, double t,
                                              const MatrixFunction& f, int x) {
  require_function(space, f);
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("semigroup time must be >= 0");
  const int n = space.n();
  if (n > kMaxProductFactors) {
    throw ValidationError("closed-form semigroup is limited to n <= " +
                          std::to_string(kMaxProductFactors) + " factors");
  }
  const double keep = std::exp(-t);
  const double move = -std::expm1(-t);
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) members.push_back(i);
    }
    const int size = static_cast<int>(members.size());
    const double w = std::pow(move, size) * std::pow(keep, n - size);
    if (w == 0.0) continue;
    CMatrix part = CMatrix::Zero(f.dim(), f.dim());
    integrate_subset(space, f, members, 0, x, 1.0, part);
    acc += w * part;
  }
  return HermitianMatrix::hermitian_part(acc);
}

MatrixFunction product_semigroup_closed_form(const ProductSpace& space, double t,
                                             const MatrixFunction& f) {
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(space.joint_size()));
  for (int x = 0; x < space.joint_size(); ++x) {
    out.push_back(product_semigroup_closed_form(space, t, f, x));
  }
  return MatrixFunction(std::move(out));
}

HermitianMatrix product_gamma(const ProductSpace& space, const MatrixFunction& f, int x) {
  require_function(space, f);
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (int i = 0; i < space.n(); ++i) {
    const FiniteMeasure& fi = space.factor(i);
    for (int z = 0; z < fi.size(); ++z) {
      const CMatrix diff = f[x].mat() - f[space.replace(x, i, z)].mat();
      acc += (0.5 * fi[z]) * (diff * diff);
    }
  }
  return HermitianMatrix::hermitian_part(acc);
}

MatrixFunction product_gamma(const ProductSpace& space, const MatrixFunction& f) {
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(space.joint_size()));
  for (int x = 0; x < space.joint_size(); ++x) out.push_back(product_gamma(space, f, x));
  return MatrixFunction(std::move(out));
}

HermitianMatrix efron_stein_sum(const ProductSpace& space, const MatrixFunction& f) {
  require_function(space, f);
  const FiniteMeasure mu = space.joint_measure();
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (int x = 0; x < space.joint_size(); ++x) {
    if (mu[x] == 0.0) continue;
    for (int i = 0; i < space.n(); ++i) {
      const FiniteMeasure& fi = space.factor(i);
      CMatrix m1 = CMatrix::Zero(f.dim(), f.dim());
      CMatrix m2 = CMatrix::Zero(f.dim(), f.dim());
      for (int z = 0; z < fi.size(); ++z) {
        const CMatrix& v = f[space.replace(x, i, z)].mat();
        m1 += fi[z] * v;
        m2 += fi[z] * (v * v);
      }
      acc += mu[x] * (m2 - m1 * m1);
    }
  }
  return HermitianMatrix::hermitian_part(acc);
}

CheckResult efron_stein_check(const ProductSpace& space, const MatrixFunction& f, Tolerance tol) {
  require_function(space, f);
  const FiniteMeasure mu = space.joint_measure();
  const HermitianMatrix var = variance(mu, f);
  const HermitianMatrix e = expectation(mu, product_gamma(space, f));
  const HermitianMatrix es = efron_stein_sum(space, f);
  CheckResult r = psd_leq(var, e, tol);
  r.name = "efron_stein";
  r.witness["decomposition_residual"] = (e - es).op_norm();
  r.witness["variance_norm"] = var.op_norm();
  r.witness["dirichlet_norm"] = e.op_norm();
  return r;
}

double product_vf(const ProductSpace& space, const MatrixFunction& f) {
  return 2.0 * product_gamma(space, f).sup_norm();
}

ProductSpace random_product_space(int n, int max_factor_size, Rng& rng) {
  if (n < 1 || max_factor_size < 2) throw ValidationError("invalid random product space shape");
  std::vector<FiniteMeasure> factors;
  for (int i = 0; i < n; ++i) {
    const int m = rng.uniform_int(2, max_factor_size);
    std::vector<double> w(static_cast<std::size_t>(m));
    double total = 0.0;
    for (auto& v : w) {
      v = 0.1 + rng.uniform();
      total += v;
    }
    double partial = 0.0;
    for (std::size_t j = 0; j + 1 < w.size(); ++j) {
      w[j] /= total;
      partial += w[j];
    }
    w.back() = 1.0 - partial;
    factors.emplace_back(StateSpace::indexed(m), std::move(w));
  }
  return ProductSpace(std::move(factors));
}

}  // namespace matconc

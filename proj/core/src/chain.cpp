#include "matconc/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "matconc/errors.hpp"

namespace matconc {

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("state space must have at least one state");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw ValidationError("state labels must be distinct");
}

StateSpace StateSpace::indexed(int n) {
  if (n < 1) throw ValidationError("state space must have at least one state");
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return StateSpace(std::move(labels));
}

int StateSpace::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
}

FiniteMeasure::FiniteMeasure(StateSpace space, std::vector<double> weights)
    : space_(std::move(space)), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != space_.size()) {
    throw ValidationError("measure has " + std::to_string(weights_.size()) + " weights for " +
                          std::to_string(space_.size()) + " states");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw ValidationError("measure weight " + std::to_string(i) + " is negative or non-finite");
    }
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "measure weights sum to " << total << ", expected 1";
    throw ValidationError(os.str());
  }
}

FiniteMeasure FiniteMeasure::uniform(StateSpace space) {
  const auto n = static_cast<std::size_t>(space.size());
  return FiniteMeasure(std::move(space), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FiniteMeasure FiniteMeasure::point_mass(StateSpace space, int state) {
  std::vector<double> w(static_cast<std::size_t>(space.size()), 0.0);
  w.at(static_cast<std::size_t>(state)) = 1.0;
  return FiniteMeasure(std::move(space), std::move(w));
}

Generator::Generator(StateSpace space, RMatrix rates)
    : space_(std::move(space)), rates_(std::move(rates)) {
  const Eigen::Index n = space_.size();
  if (rates_.rows() != n || rates_.cols() != n) {
    throw ValidationError("rate matrix shape does not match the state space");
  }
  if (!rates_.allFinite()) throw ValidationError("rate matrix has non-finite entries");
  for (Eigen::Index x = 0; x < n; ++x) {
    double row = 0.0;
    double mag = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (x != y && rates_(x, y) < 0.0) {
        throw ValidationError("row " + std::to_string(x) + ": negative off-diagonal rate");
      }
      row += rates_(x, y);
      mag = std::max(mag, std::abs(rates_(x, y)));
    }
    if (std::abs(row) > 1e-12 * std::max(1.0, mag)) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << x << ": rates sum to " << row << ", expected 0";
      throw ValidationError(os.str());
    }
  }
}

Generator Generator::zero(StateSpace space) {
  const Eigen::Index n = space.size();
  return Generator(std::move(space), RMatrix::Zero(n, n));
}

MatrixFunction::MatrixFunction(std::vector<HermitianMatrix> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("matrix function needs at least one state");
  const int d = values_.front().dim();
  for (const auto& v : values_) {
    if (v.dim() != d) throw ValidationError("matrix function values differ in dimension");
  }
}

MatrixFunction MatrixFunction::constant(int n_states, const HermitianMatrix& value) {
  return MatrixFunction(std::vector<HermitianMatrix>(static_cast<std::size_t>(n_states), value));
}

MatrixFunction MatrixFunction::map(const std::function<double(double)>& fn) const {
  std::vector<HermitianMatrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(herm_fn(v, fn));
  return MatrixFunction(std::move(out));
}

MatrixFunction MatrixFunction::square() const {
  std::vector<HermitianMatrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(v.square());
  return MatrixFunction(std::move(out));
}

MatrixFunction MatrixFunction::scaled(double a) const {
  std::vector<HermitianMatrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(v * a);
  return MatrixFunction(std::move(out));
}

MatrixFunction MatrixFunction::shifted(const HermitianMatrix& c) const {
  std::vector<HermitianMatrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(v + c);
  return MatrixFunction(std::move(out));
}

double MatrixFunction::sup_norm() const {
  double s = 0.0;
  for (const auto& v : values_) s = std::max(s, v.op_norm());
  return s;
}

namespace {

void require_same_space(const Generator& q, const FiniteMeasure& mu) {
  if (q.space().size() != mu.space().size()) {
    throw ValidationError("generator and measure live on different state spaces");
  }
}

void require_size(int states, const MatrixFunction& f) {
  if (f.size() != states) {
    throw ValidationError("matrix function has " + std::to_string(f.size()) +
                          " values, expected " + std::to_string(states));
  }
}

}  // namespace

double reversibility_residual(const Generator& q, const FiniteMeasure& mu) {
  require_same_space(q, mu);
  double worst = 0.0;
  for (int x = 0; x < q.size(); ++x) {
    for (int y = x + 1; y < q.size(); ++y) {
      worst = std::max(worst, std::abs(mu[x] * q(x, y) - mu[y] * q(y, x)));
    }
  }
  return worst;
}

bool is_reversible(const Generator& q, const FiniteMeasure& mu, double tol) {
  return reversibility_residual(q, mu) <= tol;
}

CheckResult validate_generator(const Generator& q, const FiniteMeasure& mu, Tolerance tol) {
  require_same_space(q, mu);
  double worst = 0.0;
  nlohmann::json witness = nlohmann::json::object();
  const auto record = [&](double violation, const char* kind, int x, int y) {
    if (violation > worst) {
      worst = violation;
      witness = {{"kind", kind}, {"x", q.space().label(x)}, {"y", q.space().label(y)}};
    }
  };
  double scale = 0.0;
  for (int x = 0; x < q.size(); ++x) {
    double row = 0.0;
    for (int y = 0; y < q.size(); ++y) {
      row += q(x, y);
      scale = std::max(scale, std::abs(mu[x] * q(x, y)));
      if (x != y) record(-q(x, y), "negative_rate", x, y);
    }
    record(std::abs(row), "row_sum", x, x);
  }
  for (int x = 0; x < q.size(); ++x) {
    for (int y = x + 1; y < q.size(); ++y) {
      record(std::abs(mu[x] * q(x, y) - mu[y] * q(y, x)), "detailed_balance", x, y);
    }
  }
  return CheckResult::from_margin("validate_generator", -worst, scale, tol, std::move(witness));
}

MatrixFunction apply_generator(const Generator& q, const MatrixFunction& f) {
  require_size(q.size(), f);
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(f.size()));
  for (int x = 0; x < q.size(); ++x) {
    HermitianMatrix acc = HermitianMatrix::zero(f.dim());
    for (int y = 0; y < q.size(); ++y) {
      if (q(x, y) != 0.0) acc += f[y] * q(x, y);
    }
    out.push_back(std::move(acc));
  }
  return MatrixFunction(std::move(out));
}

namespace {

RMatrix taylor_expm(const RMatrix& a) {
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const RMatrix b = a / std::ldexp(1.0, squarings);
  RMatrix term = RMatrix::Identity(a.rows(), a.cols());
  RMatrix sum = term;
  for (int k = 1; k <= 18; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace

RMatrix transition_matrix(const Generator& q, double t, const FiniteMeasure* mu) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("semigroup time must be >= 0");
  const Eigen::Index n = q.size();
  if (t == 0.0) return RMatrix::Identity(n, n);
  bool symmetric_path = mu != nullptr && mu->size() == q.size() && is_reversible(q, *mu);
  if (symmetric_path) {
    for (int x = 0; x < q.size(); ++x) symmetric_path = symmetric_path && (*mu)[x] > 0.0;
  }
  if (!symmetric_path) return taylor_expm(q.rates() * t);

  Eigen::VectorXd sq(n), inv_sq(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    sq(x) = std::sqrt((*mu)[static_cast<int>(x)]);
    inv_sq(x) = 1.0 / sq(x);
  }
  RMatrix sym = sq.asDiagonal() * q.rates() * inv_sq.asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(sym);
  const Eigen::VectorXd ex = (solver.eigenvalues() * t).array().exp();
  const RMatrix e = solver.eigenvectors() * ex.asDiagonal() * solver.eigenvectors().transpose();
  return inv_sq.asDiagonal() * e * sq.asDiagonal();
}

MatrixFunction apply_kernel(const RMatrix& kernel, const MatrixFunction& f) {
  require_size(static_cast<int>(kernel.rows()), f);
  std::vector<HermitianMatrix> out;
  out.reserve(static_cast<std::size_t>(f.size()));
  for (Eigen::Index x = 0; x < kernel.rows(); ++x) {
    CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
    for (Eigen::Index y = 0; y < kernel.cols(); ++y) {
      acc += kernel(x, y) * f[static_cast<int>(y)].mat();
    }
    out.push_back(HermitianMatrix::hermitian_part(acc));
  }
  return MatrixFunction(std::move(out));
}

MatrixFunction semigroup_apply(const Generator& q, double t, const MatrixFunction& f) {
  return apply_kernel(transition_matrix(q, t), f);
}

MatrixFunction semigroup_apply(const Generator& q, const FiniteMeasure& mu, double t,
                               const MatrixFunction& f) {
  require_same_space(q, mu);
  return apply_kernel(transition_matrix(q, t, &mu), f);
}

HermitianMatrix expectation(const FiniteMeasure& mu, const MatrixFunction& f) {
  require_size(mu.size(), f);
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (int x = 0; x < mu.size(); ++x) acc += mu[x] * f[x].mat();
  return HermitianMatrix::hermitian_part(acc);
}

CMatrix expectation_product(const FiniteMeasure& mu, const MatrixFunction& f,
                            const MatrixFunction& g) {
  require_size(mu.size(), f);
  require_size(mu.size(), g);
  CMatrix acc = CMatrix::Zero(f.dim(), f.dim());
  for (int x = 0; x < mu.size(); ++x) acc += mu[x] * (f[x].mat() * g[x].mat());
  return acc;
}

std::vector<CheckResult> check_semigroup_properties(const Generator& q, const FiniteMeasure& mu,
                                                    const MatrixFunction& f, double t,
                                                    Tolerance tol) {
  require_same_space(q, mu);
  require_size(q.size(), f);
  const RMatrix kernel = transition_matrix(q, t, &mu);
  const int d = f.dim();
  std::vector<CheckResult> out;

  // (1) L P_t f = P_t L f
  {
    const MatrixFunction lpf = apply_generator(q, apply_kernel(kernel, f));
    const MatrixFunction plf = apply_kernel(kernel, apply_generator(q, f));
    double err = 0.0;
    double scale = 0.0;
    for (int x = 0; x < f.size(); ++x) {
      err = std::max(err, (lpf[x] - plf[x]).op_norm());
      scale = std::max(scale, lpf[x].op_norm());
    }
    out.push_back(CheckResult::from_margin("commutation", -err, scale, tol));
  }
  // (2) E[f Lg] = E[(Lf) g]
  {
    const MatrixFunction g = f.square();
    const CMatrix lhs = expectation_product(mu, f, apply_generator(q, g));
    const CMatrix rhs = expectation_product(mu, apply_generator(q, f), g);
    const double err = (lhs - rhs).norm();
    const double scale = std::max(lhs.norm(), rhs.norm());
    out.push_back(CheckResult::from_margin("reversible_symmetry", -err, scale, tol));
  }
  // (3) E[Lf] = 0
  {
    const MatrixFunction lf = apply_generator(q, f);
    const double err = expectation(mu, lf).op_norm();
    out.push_back(CheckResult::from_margin("mean_zero", -err, lf.sup_norm(), tol));
  }
  // (4) positivity on f shifted to be PSD-valued
  {
    double lo = 0.0;
    for (const auto& v : f.values()) lo = std::min(lo, lambda_min(v));
    const MatrixFunction h = f.shifted(HermitianMatrix::identity(d) * (-lo));
    const MatrixFunction ph = apply_kernel(kernel, h);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& v : ph.values()) margin = std::min(margin, lambda_min(v));
    out.push_back(CheckResult::from_margin("positivity", margin, h.sup_norm(), tol,
                                           {{"shift", -lo}}));
  }
  // (5) (P_t f)^2 <= P_t f^2
  const MatrixFunction pf = apply_kernel(kernel, f);
  {
    const MatrixFunction pf2 = apply_kernel(kernel, f.square());
    double margin = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    int worst = 0;
    for (int x = 0; x < f.size(); ++x) {
      const double m = lambda_min(pf2[x] - pf[x].square());
      if (m < margin) {
        margin = m;
        worst = x;
      }
      scale = std::max(scale, pf2[x].op_norm());
    }
    out.push_back(CheckResult::from_margin("square_jensen", margin, scale, tol,
                                           {{"state", q.space().label(worst)}}));
  }
  // (6) Tr phi(P_t f) <= Tr P_t phi(f)
  {
    struct Phi {
      const char* name;
      std::function<double(double)> fn;
    };
    const Phi phis[] = {{"exp", [](double v) { return std::exp(v); }},
                        {"abs", [](double v) { return std::abs(v); }},
                        {"square", [](double v) { return v * v; }}};
    double margin = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    nlohmann::json per_phi = nlohmann::json::object();
    for (const auto& phi : phis) {
      const MatrixFunction pphi = apply_kernel(kernel, f.map(phi.fn));
      double m_phi = std::numeric_limits<double>::infinity();
      for (int x = 0; x < f.size(); ++x) {
        const double rhs = pphi[x].trace();
        const double lhs = herm_fn(pf[x], phi.fn).trace();
        m_phi = std::min(m_phi, rhs - lhs);
        scale = std::max(scale, std::abs(rhs));
      }
      per_phi[phi.name] = m_phi;
      margin = std::min(margin, m_phi);
    }
    out.push_back(CheckResult::from_margin("trace_jensen", margin, scale, tol,
                                           {{"per_phi", per_phi}}));
  }
  return out;
}

ReversibleChain random_reversible_chain(int n_states, Rng& rng, double max_rate) {
  if (n_states < 1) throw ValidationError("chain needs at least one state");
  std::vector<double> w(static_cast<std::size_t>(n_states));
  double total = 0.0;
  for (auto& v : w) {
    v = 0.2 + rng.uniform();
    total += v;
  }
  for (auto& v : w) v /= total;
  // Exact normalization so the FiniteMeasure invariant holds after rounding.
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) partial += w[i];
  w.back() = 1.0 - partial;

  std::vector<int> order(static_cast<std::size_t>(n_states));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n_states - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

  RMatrix c = RMatrix::Zero(n_states, n_states);
  for (int i = 0; i + 1 < n_states; ++i) {
    const double v = 0.1 + rng.uniform();
    c(order[i], order[i + 1]) = v;
    c(order[i + 1], order[i]) = v;
  }
  for (int x = 0; x < n_states; ++x) {
    for (int y = x + 1; y < n_states; ++y) {
      if (c(x, y) == 0.0 && rng.uniform() < 0.5) {
        const double v = rng.uniform();
        c(x, y) = v;
        c(y, x) = v;
      }
    }
  }
  RMatrix q = RMatrix::Zero(n_states, n_states);
  for (int x = 0; x < n_states; ++x) {
    for (int y = 0; y < n_states; ++y) {
      if (x != y) q(x, y) = c(x, y) / w[static_cast<std::size_t>(x)];
    }
  }
  double top = 0.0;
  for (int x = 0; x < n_states; ++x) top = std::max(top, q.row(x).sum());
  if (top > 0.0) q *= max_rate / top;
  for (int x = 0; x < n_states; ++x) {
    double s = 0.0;
    for (int y = 0; y < n_states; ++y) {
      if (x != y) s += q(x, y);
    }
    q(x, x) = -s;
  }
  StateSpace space = StateSpace::indexed(n_states);
  return {FiniteMeasure(space, std::move(w)), Generator(space, std::move(q))};
}

MatrixFunction random_matrix_function(int n_states, int d, double scale, Rng& rng) {
  std::vector<HermitianMatrix> values;
  values.reserve(static_cast<std::size_t>(n_states));
  for (int x = 0; x < n_states; ++x) values.push_back(random_hermitian(d, scale, rng));
  return MatrixFunction(std::move(values));
}

}  // namespace matconc

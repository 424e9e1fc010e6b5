#include "matconc/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "matconc/errors.hpp"
#include "matconc/parallel.hpp"

namespace matconc {

double TailBoundSpec::operator()(double t) const {
  if (!(t >= 0.0)) throw ValidationError("tail bound needs t >= 0");
  if (d < 1) throw ValidationError("tail bound needs d >= 1");
  if (!(alpha > 0.0) || !(v_gamma >= 0.0)) throw ValidationError("tail bound needs alpha > 0, v >= 0");
  if (v_gamma == 0.0) return t == 0.0 ? static_cast<double>(d) : 0.0;
  const double s = 2.0 * alpha * v_gamma;
  return d * std::exp(-t * t / (s + t * std::sqrt(s)));
}

double TailBoundSpec::clipped(double t) const { return std::min(1.0, (*this)(t)); }

double poincare_tail_bound(const TailBoundSpec& spec, double t) { return spec(t); }

TailBoundSpec product_bound_spec(int d, double v_f) { return {d, 1.0, v_f / 2.0}; }

TailBoundSpec gaussian_bound_spec(int d, double v_f) { return {d, 1.0, v_f}; }

TailBoundSpec scp_lipschitz_bound_spec(int d, int k) { return {d, 2.0 * k, 2.0}; }

double product_tail_display(int d, double v_f, double t) {
  if (v_f == 0.0) return t == 0.0 ? static_cast<double>(d) : 0.0;
  return d * std::exp(-t * t / (v_f + t * std::sqrt(v_f)));
}

double scp_tail_display(int d, int k, double t) {
  return d * std::exp(-t * t / (8.0 * k + 2.0 * t * std::sqrt(2.0 * k)));
}

double chernoff_delta(double alpha, double v, double t) {
  if (!(alpha > 0.0) || !(v > 0.0)) throw ValidationError("chernoff_delta needs alpha, v > 0");
  if (!(t >= 0.0)) throw ValidationError("chernoff_delta needs t >= 0");
  return t / (alpha * v + t * std::sqrt(alpha * v / 2.0));
}

double laplace_delta_limit(double alpha, double v) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (v <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0 / (alpha * v));
}

std::vector<double> laplace_delta_grid(double alpha, double v, int points) {
  if (points < 1) throw ValidationError("delta grid needs at least one point");
  double limit = laplace_delta_limit(alpha, v);
  if (!std::isfinite(limit)) limit = 1.0;
  std::vector<double> grid;
  for (int j = 1; j <= points; ++j) grid.push_back(limit * j / (points + 1.0));
  return grid;
}

double laplace_lhs(const FiniteMeasure& mu, const MatrixFunction& f, double delta) {
  const HermitianMatrix m = expectation(mu, f);
  double s = 0.0;
  for (int x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    const Eigen::VectorXd ev = eigenvalues((f[x] - m) * delta);
    s += mu[x] * ev.array().exp().sum();
  }
  return s;
}

double laplace_rhs(int d, double alpha, double v, double delta) {
  return 2.0 * d / (2.0 - alpha * v * delta * delta);
}

CheckResult laplace_bound_check(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f,
                                double alpha, const std::vector<double>& delta_grid, Tolerance tol) {
  if (!is_reversible(q, mu)) throw ValidationError("Laplace bound needs a reversible generator");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  const double v = gamma_sup_norm(q, f);
  const double limit = laplace_delta_limit(alpha, v);
  double margin = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  double worst_delta = 0.0;
  nlohmann::json points = nlohmann::json::array();
  for (double delta : delta_grid) {
    if (!(delta >= 0.0) || !(delta < limit)) {
      throw ValidationError("delta " + std::to_string(delta) + " outside [0, " +
                            std::to_string(limit) + ")");
    }
    const double lhs = laplace_lhs(mu, f, delta);
    const double rhs = laplace_rhs(f.dim(), alpha, v, delta);
    points.push_back({{"delta", delta}, {"lhs", lhs}, {"rhs", rhs}});
    if (rhs - lhs < margin) {
      margin = rhs - lhs;
      worst_delta = delta;
    }
    scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
  }
  return CheckResult::from_margin("laplace_bound", margin, scale, tol,
                                  {{"alpha", alpha},
                                   {"v_f", v},
                                   {"delta_limit", std::isfinite(limit) ? nlohmann::json(limit)
                                                                        : nlohmann::json(nullptr)},
                                   {"worst_delta", worst_delta},
                                   {"points", points}});
}

CheckResult recursion_step_check(const Generator& q, const FiniteMeasure& mu,
                                 const MatrixFunction& g, int p, double alpha, Tolerance tol) {
  if (p < 1) throw ValidationError("recursion step needs p >= 1");
  if (!is_reversible(q, mu)) throw ValidationError("recursion step needs a reversible generator");
  const double centered = expectation(mu, g).op_norm();
  if (centered > 1e-10 * (1.0 + g.sup_norm())) {
    throw ValidationError("recursion step needs E[g] = 0; got ||E g|| = " + std::to_string(centered));
  }
  const double v = gamma_sup_norm(q, g);
  const double av = alpha * v;
  if (!(av < 1.0)) throw ValidationError("recursion step needs alpha * v_g < 1");

  const HermitianMatrix e1 = expectation(mu, g.map([](double s) { return std::exp(s); }));
  const HermitianMatrix e2 = expectation(mu, g.map([](double s) { return std::exp(2.0 * s); }));
  double e2p = 0.0;
  for (int x = 0; x < mu.size(); ++x) {
    e2p += mu[x] * eigenvalues(g[x] * (2.0 * p)).array().exp().sum();
  }
  const double lhs = int_pow(e2, p).trace();
  const double first = std::pow(1.0 - av, -(p - 1)) * int_pow(e1, 2 * p).trace();
  const double second = av * e2p;
  const double rhs = first + second;
  return CheckResult::from_margin("recursion_step", rhs - lhs, std::max(std::abs(lhs), std::abs(rhs)),
                                  tol,
                                  {{"p", p},
                                   {"alpha", alpha},
                                   {"v_g", v},
                                   {"lhs", lhs},
                                   {"rhs_power_term", first},
                                   {"rhs_laplace_term", second}});
}

const char* to_string(TailEstimate::Method m) {
  return m == TailEstimate::Method::exact ? "exact" : "monte_carlo";
}

std::vector<double> linear_grid(double t_max, int points) {
  if (points < 2) throw ValidationError("grid needs at least two points");
  if (!(t_max >= 0.0)) throw ValidationError("grid upper end must be >= 0");
  std::vector<double> grid;
  for (int j = 0; j < points; ++j) grid.push_back(t_max * j / (points - 1));
  return grid;
}

namespace {

void require_grid(const std::vector<double>& t_grid) {
  for (double t : t_grid) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("tail grid values must be finite and >= 0");
  }
}

}  // namespace

TailEstimate exact_tail(const FiniteMeasure& mu, const MatrixFunction& f,
                        const std::vector<double>& t_grid) {
  require_grid(t_grid);
  if (f.size() != mu.size()) throw ValidationError("matrix function does not match the measure");
  const HermitianMatrix m = expectation(mu, f);
  const double slack = 1e-12 * (1.0 + f.sup_norm());
  std::vector<double> lam(static_cast<std::size_t>(mu.size()));
  for (int x = 0; x < mu.size(); ++x) lam[static_cast<std::size_t>(x)] = lambda_max(f[x] - m);
  TailEstimate est;
  est.method = TailEstimate::Method::exact;
  est.t_grid = t_grid;
  for (double t : t_grid) {
    double p = 0.0;
    for (int x = 0; x < mu.size(); ++x) {
      if (lam[static_cast<std::size_t>(x)] >= t - slack) p += mu[x];
    }
    est.probabilities.push_back(std::min(1.0, p));
    est.half_widths.push_back(0.0);
  }
  return est;
}

double wilson_half_width(long long hits, long long n, double z) {
  if (n < 1) throw ValidationError("Wilson interval needs n >= 1");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  return z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

TailEstimate mc_tail(const TailSampler& sampler, const std::vector<double>& t_grid, long long samples,
                     std::uint64_t seed, int threads) {
  require_grid(t_grid);
  if (samples < 1000) throw ValidationError("Monte Carlo tail needs at least 1000 samples");
  const long long batches = (samples + kMcBatch - 1) / kMcBatch;
  const std::size_t g = t_grid.size();
  std::vector<std::vector<long long>> counts(static_cast<std::size_t>(batches),
                                             std::vector<long long>(g, 0));
  parallel_for(static_cast<std::size_t>(batches), threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, 0, b));
    const long long begin = static_cast<long long>(b) * kMcBatch;
    const long long count = std::min(kMcBatch, samples - begin);
    auto& c = counts[b];
    for (long long i = 0; i < count; ++i) {
      const double lam = sampler(rng);
      for (std::size_t j = 0; j < g; ++j) {
        if (lam >= t_grid[j]) ++c[j];
      }
    }
  });
  TailEstimate est;
  est.method = TailEstimate::Method::monte_carlo;
  est.t_grid = t_grid;
  est.sample_count = samples;
  for (std::size_t j = 0; j < g; ++j) {
    long long hits = 0;
    for (const auto& c : counts) hits += c[j];
    est.probabilities.push_back(static_cast<double>(hits) / static_cast<double>(samples));
    est.half_widths.push_back(wilson_half_width(hits, samples));
  }
  return est;
}

CheckResult dominance_report(const TailBoundSpec& bound, const TailEstimate& estimate,
                             std::vector<TailRow>* rows) {
  const std::size_t g = estimate.t_grid.size();
  if (estimate.probabilities.size() != g || estimate.half_widths.size() != g) {
    throw ValidationError("tail estimate arrays do not match its grid");
  }
  const bool mc = estimate.method == TailEstimate::Method::monte_carlo;
  const double k = mc ? 3.0 : 0.0;
  double margin = std::numeric_limits<double>::infinity();
  int inconclusive = 0;
  int failures = 0;
  nlohmann::json table = nlohmann::json::array();
  std::vector<TailRow> out;
  for (std::size_t j = 0; j < g; ++j) {
    TailRow r;
    r.t = estimate.t_grid[j];
    r.bound = bound.clipped(r.t);
    r.estimate = estimate.probabilities[j];
    r.half_width = estimate.half_widths[j];
    const double adjusted = r.estimate - k * r.half_width;
    r.pass = adjusted <= r.bound;
    r.inconclusive = mc && r.pass && r.estimate > r.bound;
    inconclusive += r.inconclusive ? 1 : 0;
    failures += r.pass ? 0 : 1;
    margin = std::min(margin, r.bound - adjusted);
    table.push_back({{"t", r.t},
                     {"bound", r.bound},
                     {"estimate", r.estimate},
                     {"half_width", r.half_width},
                     {"pass", r.pass}});
    out.push_back(r);
  }
  if (g == 0) margin = 0.0;
  if (rows) *rows = std::move(out);
  return CheckResult::from_margin("tail_dominance", margin, 1.0, Tolerance{0.0, 0.0},
                                  {{"method", to_string(estimate.method)},
                                   {"d", bound.d},
                                   {"alpha", bound.alpha},
                                   {"v_gamma", bound.v_gamma},
                                   {"band_k", k},
                                   {"samples", estimate.sample_count},
                                   {"failed_points", failures},
                                   {"inconclusive_points", inconclusive},
                                   {"rows", table}});
}

std::string tail_rows_csv(const std::vector<TailRow>& rows) {
  std::string out = "t,bound,estimate,half_width,pass\n";
  char buf[160];
  const auto z = [](double v) { return v == 0.0 ? 0.0 : v; };  // print -0 as 0
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s\n", z(r.t), z(r.bound), z(r.estimate),
                  z(r.half_width), r.pass ? "true" : "false");
    out += buf;
  }
  return out;
}

}  // namespace matconc

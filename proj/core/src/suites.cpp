#include "matconc/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "matconc/concentration.hpp"
#include "matconc/errors.hpp"
#include "matconc/gaussian.hpp"
#include "matconc/parallel.hpp"
#include "matconc/product.hpp"
#include "matconc/scp.hpp"
#include "matconc/traceineq.hpp"

namespace matconc {

namespace {

using Json = nlohmann::json;

constexpr int kMaxListedFailures = 5;

// Seed streams, one per suite so corpora never overlap.
enum Stream : std::uint64_t {
  two_state_stream = 101,
  product_stream,
  gaussian_stream,
  scp_stream,
  tail_stream,
  mc_stream,
  laplace_stream,
  fuzz_stream,
  semigroup_stream,
};

struct Tally {
  SuiteResult r;
  std::map<std::string, std::pair<int, int>> by_check;  // name -> (checks, failures)
  Json failing = Json::array();

  explicit Tally(std::string name) {
    r.name = std::move(name);
    r.worst_margin = std::numeric_limits<double>::infinity();
  }

  void add(const CheckResult& c, const Json& context = Json::object()) {
    ++r.checks;
    auto& slot = by_check[c.name];
    ++slot.first;
    r.worst_margin = std::min(r.worst_margin, c.margin);
    if (c.pass) return;
    ++r.failures;
    ++slot.second;
    r.pass = false;
    if (static_cast<int>(failing.size()) < kMaxListedFailures) {
      failing.push_back({{"check", c.name},
                         {"margin", c.margin},
                         {"scale", c.scale},
                         {"context", context},
                         {"witness", c.witness}});
    }
  }

  SuiteResult finish() {
    if (r.checks == 0) r.worst_margin = 0.0;
    Json per = Json::object();
    for (const auto& [name, counts] : by_check) {
      per[name] = {{"checks", counts.first}, {"failures", counts.second}};
    }
    r.detail["per_check"] = per;
    r.detail["failing"] = failing;
    return std::move(r);
  }
};

Tolerance pick(const SuiteOptions& o, Tolerance fallback) { return o.tol.value_or(fallback); }

int trials_or(const SuiteOptions& o, int fallback) { return o.trials > 0 ? o.trials : fallback; }

double max_deviation(const MatrixFunction& a, const MatrixFunction& b) {
  double err = 0.0;
  for (int x = 0; x < a.size(); ++x) err = std::max(err, (a[x] - b[x]).op_norm());
  return err;
}

}  // namespace

Json suite_to_json(const SuiteResult& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"checks", r.checks},
          {"failures", r.failures},
          {"worst_margin", r.worst_margin},
          {"detail", r.detail}};
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "two_state", "product",     "gaussian_poincare", "scp",      "tail_dominance",
      "gaussian_mc", "laplace_recursion", "trace_fuzz", "semigroup"};
  return names;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& o) {
  if (name == "two_state") return suite_two_state(o);
  if (name == "product") return suite_product(o);
  if (name == "gaussian_poincare") return suite_gaussian_poincare(o);
  if (name == "scp") return suite_scp(o);
  if (name == "tail_dominance") return suite_tail_dominance(o);
  if (name == "gaussian_mc") return suite_gaussian_mc(o);
  if (name == "laplace_recursion") return suite_laplace_recursion(o);
  if (name == "trace_fuzz") return suite_trace_fuzz(o);
  if (name == "semigroup") return suite_semigroup(o);
  throw ValidationError("unknown suite '" + name + "'");
}

std::vector<SuiteResult> run_all_suites(const SuiteOptions& o) {
  std::vector<SuiteResult> out;
  for (const auto& name : suite_names()) out.push_back(run_suite(name, o));
  return out;
}

SuiteResult suite_two_state(const SuiteOptions& o) {
  const int n = trials_or(o, 100);
  const StateSpace space = StateSpace::indexed(2);
  RMatrix rates(2, 2);
  rates << -1.0, 1.0, 1.0, -1.0;
  const Generator q(space, rates);
  const FiniteMeasure mu = FiniteMeasure::uniform(space);
  const PoincareCertificate cert = spectral_gap(q, mu);
  const Tolerance tol = pick(o, {1e-10, 0.0});

  Tally tally("two_state");
  tally.add(CheckResult::from_margin("certified_alpha", -std::abs(cert.alpha - 0.5), 0.5, {1e-12, 0.0},
                                     {{"alpha", cert.alpha}}));

  std::vector<std::vector<CheckResult>> slots(static_cast<std::size_t>(n));
  parallel_for(slots.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, two_state_stream, i));
    const int d = rng.uniform_int(1, 4);
    const MatrixFunction f = random_matrix_function(2, d, 1.0, rng);
    const HermitianMatrix gap = dirichlet_form(q, mu, f) * cert.alpha - variance(mu, f);
    const Eigen::VectorXd ev = eigenvalues(gap);
    const double dev = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    slots[i].push_back(CheckResult::from_margin("variance_equals_alpha_energy", -dev, 0.0, tol,
                                                {{"d", d}, {"deviation", dev}}));
    slots[i].push_back(poincare_check(q, mu, f, cert.alpha, tol));
  });
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (const auto& c : slots[i]) tally.add(c, {{"instance", i}});
  }
  tally.r.detail["alpha"] = cert.alpha;
  tally.r.detail["instances"] = n;
  return tally.finish();
}

SuiteResult suite_product(const SuiteOptions& o) {
  const int n = trials_or(o, 500);
  const Tolerance tol = pick(o, {1e-9, 0.0});
  const Tolerance semigroup_tol = pick(o, {1e-8, 0.0});
  const double times[] = {0.1, 1.0, 3.0};

  std::vector<std::vector<CheckResult>> slots(static_cast<std::size_t>(n));
  parallel_for(slots.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, product_stream, i));
    const ProductSpace space = random_product_space(rng.uniform_int(1, 3), 3, rng);
    const int d = rng.uniform_int(1, 3);
    const MatrixFunction f = random_matrix_function(space.joint_size(), d, 1.0, rng);
    const Generator q = product_generator(space);
    const FiniteMeasure mu = space.joint_measure();
    auto& out = slots[i];
    out.push_back(poincare_check(q, mu, f, 1.0, tol));
    out.push_back(efron_stein_check(space, f, tol));
    for (double t : times) {
      const double err = max_deviation(product_semigroup_closed_form(space, t, f), semigroup_apply(q, mu, t, f));
      out.push_back(CheckResult::from_margin("closed_form_semigroup", -err, 0.0, semigroup_tol,
                                             {{"t", t}, {"max_op_norm_error", err}}));
    }
  });
  Tally tally("product");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (const auto& c : slots[i]) tally.add(c, {{"instance", i}});
  }
  tally.r.detail["instances"] = n;
  return tally.finish();
}

SuiteResult suite_gaussian_poincare(const SuiteOptions& o) {
  const int n = trials_or(o, 200);
  const Tolerance tol = pick(o, {1e-8, 0.0});
  Tally tally("gaussian_poincare");

  const double normal_moments[] = {1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0};
  for (int order = 4; order <= 12; ++order) {
    const QuadratureRule rule = QuadratureRule::gauss_hermite(order);
    double err = 0.0;
    for (int k = 0; k <= 6; ++k) err = std::max(err, std::abs(rule.moment(k) - normal_moments[k]));
    tally.add(CheckResult::from_margin("quadrature_moments", -err, 0.0, {1e-10, 0.0},
                                       {{"order", order}, {"max_error", err}}));
  }

  std::vector<CheckResult> slots(static_cast<std::size_t>(n));
  std::vector<int> degrees(slots.size());
  parallel_for(slots.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, gaussian_stream, i));
    const int vars = rng.uniform_int(1, 3);
    const int d = rng.uniform_int(1, 3);
    const MatrixPolynomial f = random_matrix_polynomial(vars, 3, d, 1.0, rng);
    degrees[i] = f.total_degree();
    const QuadratureRule rule = QuadratureRule::gauss_hermite(required_order(2 * std::max(0, f.total_degree())));
    slots[i] = gaussian_poincare_check(f, rule, tol);
  });
  for (std::size_t i = 0; i < slots.size(); ++i) tally.add(slots[i], {{"instance", i}, {"degree", degrees[i]}});
  tally.r.detail["instances"] = n;
  return tally.finish();
}

namespace {

struct ScpCase {
  MeasureFamily family;
  int n;
  int k;
};

std::vector<ScpCase> scp_cases() {
  std::vector<ScpCase> out;
  for (MeasureFamily fam : {MeasureFamily::uniform_k_subsets, MeasureFamily::conditioned_bernoulli}) {
    for (auto [n, k] : {std::pair{4, 2}, std::pair{5, 2}, std::pair{6, 3}}) out.push_back({fam, n, k});
  }
  return out;
}

const char* family_name(MeasureFamily f) {
  return f == MeasureFamily::uniform_k_subsets ? "uniform_k_subsets" : "conditioned_bernoulli";
}

CubeMeasure case_measure(const ScpCase& c) {
  std::vector<double> params;
  if (c.family == MeasureFamily::conditioned_bernoulli) {
    for (int i = 0; i < c.n; ++i) params.push_back((i + 1.0) / (c.n + 1.0));
  }
  return builtin_measure(c.family, c.n, c.k, params);
}

}  // namespace

SuiteResult suite_scp(const SuiteOptions& o) {
  const int per_case = trials_or(o, 200);
  const Tolerance tol = pick(o, {1e-9, 0.0});
  Tally tally("scp");

  {
    const CubeMeasure mu = builtin_measure(MeasureFamily::uniform_k_subsets, 2, 1);
    const ScpGenerator g = scp_generator(mu, FlowOrder::lexicographic, o.threads);
    const double v = g.q(mu.index_of(parse_config("10")), mu.index_of(parse_config("01")));
    tally.add(CheckResult::from_margin("hand_value", -std::abs(v - 0.25), 0.0, {1e-12, 0.0},
                                       {{"n", 2}, {"k", 1}, {"Q_10_01", v}, {"expected", 0.25}}));
  }

  Json cases = Json::array();
  std::uint64_t case_index = 0;
  for (const ScpCase& c : scp_cases()) {
    const Json ctx = {{"family", family_name(c.family)}, {"n", c.n}, {"k", c.k}};
    const CubeMeasure mu = case_measure(c);
    tally.add(scp_check(mu), ctx);
    const ScpGenerator g = scp_generator(mu, FlowOrder::lexicographic, o.threads);
    const double residual = reversibility_residual(g.q, g.mu);
    tally.add(CheckResult::from_margin("reversibility", -residual, 0.0, {1e-10, 0.0}, {{"residual", residual}}),
              ctx);
    const CheckResult norm = normalization_check(mu, g);
    tally.add(norm, ctx);
    const double max_exit = norm.witness["max_exit_rate"].get<double>();
    const double sharp = (c.n - 1.0) / c.n;
    tally.add(CheckResult::from_margin("exit_rate_bound", sharp - max_exit, 0.0, {1e-10, 0.0},
                                       {{"max_exit_rate", max_exit}, {"threshold", sharp}}),
              ctx);

    std::vector<CheckResult> slots(static_cast<std::size_t>(per_case));
    parallel_for(slots.size(), o.threads, [&](std::size_t i) {
      Rng rng(derive_seed(o.seed, scp_stream, case_index * 100000 + i));
      const int d = rng.uniform_int(1, 3);
      const MatrixFunction f = random_matrix_function(g.mu.size(), d, 1.0, rng);
      slots[i] = scp_poincare_check(mu, g, f, tol);
    });
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      Json ictx = ctx;
      ictx["instance"] = i;
      tally.add(slots[i], ictx);
      worst = std::min(worst, slots[i].margin);
    }
    Json row = ctx;
    row["states"] = g.mu.size();
    row["max_exit_rate"] = max_exit;
    row["reversibility_residual"] = residual;
    row["worst_poincare_margin"] = slots.empty() ? 0.0 : worst;
    cases.push_back(row);
    ++case_index;
  }
  tally.r.detail["cases"] = cases;
  return tally.finish();
}

SuiteResult suite_tail_dominance(const SuiteOptions& o) {
  const int n_product = trials_or(o, 100);
  const int per_case = std::max(1, trials_or(o, 100) / 5);
  constexpr int kPoints = 100;
  Tally tally("tail_dominance");

  std::vector<CheckResult> product(static_cast<std::size_t>(n_product));
  parallel_for(product.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, tail_stream, i));
    const ProductSpace space = random_product_space(rng.uniform_int(1, 3), 3, rng);
    const int d = rng.uniform_int(1, 3);
    const MatrixFunction f = random_matrix_function(space.joint_size(), d, 1.0, rng);
    const TailBoundSpec spec = product_bound_spec(d, product_vf(space, f));
    const auto grid = linear_grid(3.0 * std::sqrt(spec.alpha * spec.v_gamma), kPoints);
    product[i] = dominance_report(spec, exact_tail(space.joint_measure(), f, grid));
    product[i].name = "product_tail_dominance";
    product[i].witness.erase("rows");
  });
  for (std::size_t i = 0; i < product.size(); ++i) tally.add(product[i], {{"instance", i}});

  std::uint64_t case_index = 0;
  for (const ScpCase& c : scp_cases()) {
    const CubeMeasure mu = case_measure(c);
    const FiniteMeasure m = mu.measure();
    std::vector<std::vector<CheckResult>> slots(static_cast<std::size_t>(per_case));
    parallel_for(slots.size(), o.threads, [&](std::size_t i) {
      Rng rng(derive_seed(o.seed, tail_stream, 1000000 + case_index * 100000 + i));
      const int d = rng.uniform_int(1, 3);
      const MatrixFunction f = random_lipschitz_function(mu, d, rng);
      const LipschitzScan scan = lipschitz_scan(mu, f);
      slots[i].push_back(CheckResult::from_margin("lipschitz_hypothesis", 1.0 - scan.constant, 1.0,
                                                  {1e-12, 0.0},
                                                  {{"constant", scan.constant},
                                                   {"x", config_label(scan.x, mu.n())},
                                                   {"y", config_label(scan.y, mu.n())}}));
      const TailBoundSpec spec = scp_lipschitz_bound_spec(d, mu.k());
      const auto grid = linear_grid(3.0 * std::sqrt(spec.alpha * spec.v_gamma), kPoints);
      CheckResult r = dominance_report(spec, exact_tail(m, f, grid));
      r.name = "scp_tail_dominance";
      r.witness.erase("rows");
      slots[i].push_back(std::move(r));
    });
    for (std::size_t i = 0; i < slots.size(); ++i) {
      for (const auto& r : slots[i]) {
        tally.add(r, {{"family", family_name(c.family)}, {"n", c.n}, {"k", c.k}, {"instance", i}});
      }
    }
    ++case_index;
  }
  tally.r.detail["grid_points"] = kPoints;
  return tally.finish();
}

SuiteResult suite_gaussian_mc(const SuiteOptions& o) {
  const long long samples = o.samples > 0 ? o.samples : 1000000;
  constexpr int kPoints = 100;
  Tally tally("gaussian_mc");

  Rng rng(derive_seed(o.seed, mc_stream, 0));
  std::vector<HermitianMatrix> a;
  for (int i = 0; i < 2; ++i) a.push_back(random_hermitian_with_norm(2, rng.uniform(0.25, 1.0), rng));
  const MatrixPolynomial f = MatrixPolynomial::linear(a);
  const VfEstimate vf = gaussian_vf(f);
  const TailBoundSpec spec = gaussian_bound_spec(2, vf.value);
  const auto grid = linear_grid(3.0 * std::sqrt(spec.alpha * spec.v_gamma), kPoints);
  const TailSampler sampler = [&a](Rng& r) {
    const double x1 = r.normal();
    const double x2 = r.normal();
    return lambda_max(a[0] * x1 + a[1] * x2);
  };
  std::vector<TailRow> rows;
  const TailEstimate est = mc_tail(sampler, grid, samples, derive_seed(o.seed, mc_stream, 1), o.threads);
  CheckResult dom = dominance_report(spec, est, &rows);
  tally.add(dom);

  const TailSampler scalar = [](Rng& r) { return r.normal(); };
  const TailEstimate s = mc_tail(scalar, {1.0}, samples, derive_seed(o.seed, mc_stream, 2), o.threads);
  const double exact = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
  const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(samples));
  const double dev = std::abs(s.probabilities[0] - exact);
  tally.add(CheckResult::from_margin("scalar_tail_sanity", 3.0 * se - dev, 0.0, {0.0, 0.0},
                                     {{"estimate", s.probabilities[0]},
                                      {"exact", exact},
                                      {"standard_error", se},
                                      {"samples", samples}}));

  tally.r.detail["A"] = {a[0].op_norm(), a[1].op_norm()};
  tally.r.detail["v_f"] = vf.value;
  tally.r.detail["v_f_exact"] = vf.exact;
  tally.r.detail["samples"] = samples;
  Json table = Json::array();
  for (const auto& r : rows) {
    table.push_back({{"t", r.t},
                     {"bound", r.bound},
                     {"estimate", r.estimate},
                     {"half_width", r.half_width},
                     {"pass", r.pass},
                     {"inconclusive", r.inconclusive}});
  }
  tally.r.detail["rows"] = table;
  return tally.finish();
}

SuiteResult suite_laplace_recursion(const SuiteOptions& o) {
  const int n = trials_or(o, 100);
  const Tolerance tol = pick(o, {0.0, 1e-8});
  const int powers[] = {1, 2, 4};

  std::vector<std::vector<CheckResult>> slots(static_cast<std::size_t>(n));
  parallel_for(slots.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, laplace_stream, i));
    const ReversibleChain chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const int d = rng.uniform_int(1, 3);
    const MatrixFunction f = random_matrix_function(chain.mu.size(), d, 1.0, rng);
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    const double v = gamma_sup_norm(chain.q, f);
    auto& out = slots[i];
    out.push_back(laplace_bound_check(chain.q, chain.mu, f, alpha, laplace_delta_grid(alpha, v, 20), tol));
    out.back().witness.erase("points");
    // Center and rescale so that alpha * v_g = 1/2.
    const MatrixFunction g = f.shifted(-expectation(chain.mu, f)).scaled(std::sqrt(0.5 / (alpha * v)));
    for (int p : powers) out.push_back(recursion_step_check(chain.q, chain.mu, g, p, alpha, tol));
  });
  Tally tally("laplace_recursion");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (const auto& c : slots[i]) tally.add(c, {{"instance", i}});
  }
  tally.r.detail["instances"] = n;
  return tally.finish();
}

SuiteResult suite_trace_fuzz(const SuiteOptions& o) {
  FuzzConfig config = FuzzConfig::defaults();
  config.trials = trials_or(o, 1000);
  config.seed = o.seed;
  if (o.tol) config.tol = *o.tol;
  const std::uint64_t master = derive_seed(o.seed, fuzz_stream, 0);
  Tally tally("trace_fuzz");
  Json reports = Json::array();
  for (const FuzzReport& r : fuzz_campaign(config, master, o.threads)) {
    const int v = static_cast<int>(r.violations.size());
    Json w = {{"inequality", r.inequality},
              {"trials", r.trials},
              {"violations", v},
              {"worst_normalized_margin", r.worst_normalized_margin}};
    if (v > 0) w["first_violation"] = {{"trial", r.violations[0].trial}, {"shrunk", r.violations[0].shrunk}};
    tally.add(CheckResult::from_margin("no_violations", -static_cast<double>(v), 0.0, {0.0, 0.0}, w));
    reports.push_back({{"inequality", r.inequality},
                       {"trials", r.trials},
                       {"violations", v},
                       {"worst_margin", r.worst_margin},
                       {"worst_normalized_margin", r.worst_normalized_margin}});
  }

  FuzzConfig bug;
  bug.inequalities = {to_string(Inequality::mean_value_trace)};
  bug.trials = std::min(config.trials, 200);
  bug.d_lo = config.d_lo;
  bug.d_hi = config.d_hi;
  bug.tol = config.tol;
  bug.inject_bug = true;
  const FuzzReport br = fuzz_campaign(bug, derive_seed(o.seed, fuzz_stream, 1), o.threads).front();
  Json st = {{"trials", br.trials}, {"violations", br.violations.size()}};
  bool found = !br.violations.empty();
  bool shrunk_still_fails = false;
  if (found) {
    const FuzzViolation& v = br.violations.front();
    shrunk_still_fails = v.shrunk_margin < -config.tol.allowance(v.shrunk_scale);
    st["trial"] = v.trial;
    st["original_margin"] = v.margin;
    st["shrunk_margin"] = v.shrunk_margin;
    st["shrunk_d"] = v.shrunk_d;
    st["shrunk_atoms"] = v.shrunk_atoms;
    st["shrink_steps"] = v.shrink_steps;
    st["shrunk"] = v.shrunk;
  }
  tally.add(CheckResult::from_margin("injected_bug_detected", found && shrunk_still_fails ? 0.0 : -1.0, 0.0,
                                     {0.0, 0.0}, st));
  tally.r.detail["reports"] = reports;
  return tally.finish();
}

SuiteResult suite_semigroup(const SuiteOptions& o) {
  const int n = trials_or(o, 500);
  const Tolerance tol = pick(o, {1e-9, 0.0});
  std::vector<std::vector<CheckResult>> slots(static_cast<std::size_t>(n));
  parallel_for(slots.size(), o.threads, [&](std::size_t i) {
    Rng rng(derive_seed(o.seed, semigroup_stream, i));
    const ReversibleChain chain = random_reversible_chain(rng.uniform_int(2, 5), rng);
    const int d = rng.uniform_int(1, 3);
    const MatrixFunction f = random_matrix_function(chain.mu.size(), d, 1.0, rng);
    const double t = rng.uniform(0.05, 3.0);
    slots[i] = check_semigroup_properties(chain.q, chain.mu, f, t, tol);
  });
  Tally tally("semigroup");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (const auto& c : slots[i]) tally.add(c, {{"instance", i}});
  }
  tally.r.detail["instances"] = n;
  return tally.finish();
}

}  // namespace matconc

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "matconc/json_io.hpp"
#include "matconc/parallel.hpp"
#include "matconc/suites.hpp"

namespace matconc::cli {

namespace {

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }

struct KindName {
  ScenarioKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {{ScenarioKind::finite_chain, "finite_chain"},
                               {ScenarioKind::product, "product"},
                               {ScenarioKind::gaussian, "gaussian"},
                               {ScenarioKind::scp, "scp"},
                               {ScenarioKind::fuzz, "fuzz"}};

std::optional<ScenarioKind> kind_from_string(const std::string& s) {
  for (const auto& k : kKinds) {
    if (s == k.name) return k.kind;
  }
  return std::nullopt;
}

std::optional<Format> format_from_string(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  return std::nullopt;
}

const Json& required(const Json& doc, const std::string& key) {
  if (!doc.contains(key)) throw JsonError("/" + key, "missing required field");
  return doc[key];
}

// Parsed module payloads.

struct ProductPayload {
  ProductSpace space;
  MatrixFunction f;
};

ProductPayload product_payload(const Json& doc) {
  ProductSpace space = product_from_json(required(doc, "product"), "/product");
  MatrixFunction f = function_from_json(required(doc, "f"), "/f", space.joint_size());
  return {std::move(space), std::move(f)};
}

struct GaussianPayload {
  MatrixPolynomial f;
  std::optional<Box> box;
};

GaussianPayload gaussian_payload(const Json& doc) {
  GaussianPayload p{polynomial_from_json(required(doc, "f"), "/f"), std::nullopt};
  if (doc.contains("box")) {
    const Json& b = doc["box"];
    if (!b.is_object() || !b.contains("lo") || !b.contains("hi") || !b["lo"].is_number() ||
        !b["hi"].is_number()) {
      throw JsonError("/box", "expected {\"lo\": number, \"hi\": number}");
    }
    p.box = Box{b["lo"].get<double>(), b["hi"].get<double>()};
    if (!(p.box->hi > p.box->lo)) throw JsonError("/box", "expected lo < hi");
  }
  return p;
}

FlowOrder parse_order(const std::string& s, const std::string& at) {
  if (s == "lexicographic") return FlowOrder::lexicographic;
  if (s == "reverse") return FlowOrder::reverse;
  throw JsonError(at, "unknown flow order '" + s + "' (expected lexicographic or reverse)");
}

struct ScpPayload {
  CubeMeasure mu;
  std::optional<MatrixFunction> f;
  FlowOrder order = FlowOrder::lexicographic;
};

ScpPayload scp_payload(const Json& doc) {
  ScpPayload p{cube_from_json(required(doc, "measure"), "/measure"), std::nullopt, FlowOrder::lexicographic};
  if (doc.contains("f")) {
    p.f = function_from_json(doc["f"], "/f", static_cast<int>(p.mu.support().size()));
  }
  if (doc.contains("flow_order")) {
    if (!doc["flow_order"].is_string()) throw JsonError("/flow_order", "expected a string");
    p.order = parse_order(doc["flow_order"].get<std::string>(), "/flow_order");
  }
  return p;
}

FuzzConfig fuzz_payload(const Json& doc) {
  Json copy = doc;
  for (const char* key : {"kind", "checks", "output"}) copy.erase(key);
  return fuzz_config_from_json(copy, "");
}

void validate_payload(ScenarioKind kind, const Json& doc) {
  switch (kind) {
    case ScenarioKind::finite_chain: chain_from_json(doc, ""); return;
    case ScenarioKind::product: product_payload(doc); return;
    case ScenarioKind::gaussian: gaussian_payload(doc); return;
    case ScenarioKind::scp: scp_payload(doc); return;
    case ScenarioKind::fuzz: fuzz_payload(doc); return;
  }
}

// Parameter accessors for check specs.

double param_number(const CheckSpec& c, const std::string& at, const char* key, double fallback) {
  if (!c.params.contains(key)) return fallback;
  const Json& v = c.params[key];
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw JsonError(child(at, key), "expected a number");
  return v.get<double>();
}

int param_int(const CheckSpec& c, const std::string& at, const char* key, int fallback, int lo, int hi) {
  if (!c.params.contains(key)) return fallback;
  const Json& v = c.params[key];
  if (!v.is_number_integer()) throw JsonError(child(at, key), "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) {
    throw JsonError(child(at, key), "expected a value in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

std::optional<double> param_alpha(const CheckSpec& c, const std::string& at) {
  if (!c.params.contains("alpha")) return std::nullopt;
  const double a = param_number(c, at, "alpha", 0.0);
  if (!(a > 0.0)) throw JsonError(child(at, "alpha"), "alpha must be positive");
  return a;
}

std::vector<double> param_list(const CheckSpec& c, const std::string& at, const char* key,
                               std::vector<double> fallback) {
  if (!c.params.contains(key)) return fallback;
  const Json& v = c.params[key];
  if (!v.is_array() || v.empty()) throw JsonError(child(at, key), "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw JsonError(child(at, key) + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

const char* to_string(ScenarioKind k) {
  for (const auto& e : kKinds) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

const std::vector<std::string>& known_checks(ScenarioKind kind) {
  static const std::vector<std::string> chain = {"generator", "poincare",  "semigroup", "variance_identity",
                                                 "variance_derivative", "laplace", "recursion", "tail"};
  static const std::vector<std::string> product = {"efron_stein", "poincare", "closed_form", "tail"};
  static const std::vector<std::string> gaussian = {"poincare", "moments", "tail"};
  static const std::vector<std::string> scp = {"generator", "scp", "reversibility", "normalization", "poincare",
                                               "tail"};
  static const std::vector<std::string> none;
  switch (kind) {
    case ScenarioKind::finite_chain: return chain;
    case ScenarioKind::product: return product;
    case ScenarioKind::gaussian: return gaussian;
    case ScenarioKind::scp: return scp;
    case ScenarioKind::fuzz: return none;
  }
  return none;
}

Scenario parse_scenario(const Json& doc, std::optional<ScenarioKind> default_kind) {
  if (!doc.is_object()) throw JsonError("", "scenario must be a JSON object");
  Scenario s;
  s.document = doc;
  if (doc.contains("kind")) {
    if (!doc["kind"].is_string()) throw JsonError("/kind", "expected a string");
    const auto k = kind_from_string(doc["kind"].get<std::string>());
    if (!k) {
      throw JsonError("/kind", "unknown kind '" + doc["kind"].get<std::string>() +
                                   "' (expected finite_chain, product, gaussian, scp or fuzz)");
    }
    s.kind = *k;
  } else if (default_kind) {
    s.kind = *default_kind;
  } else {
    throw JsonError("/kind", "missing required field");
  }

  if (doc.contains("checks")) {
    const Json& list = doc["checks"];
    if (!list.is_array()) throw JsonError("/checks", "expected an array");
    const auto& allowed = known_checks(s.kind);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "/checks/" + std::to_string(i);
      CheckSpec c;
      if (list[i].is_string()) {
        c.name = list[i].get<std::string>();
      } else if (list[i].is_object() && list[i].contains("name") && list[i]["name"].is_string()) {
        c.name = list[i]["name"].get<std::string>();
        if (list[i].contains("params")) {
          if (!list[i]["params"].is_object()) throw JsonError(at + "/params", "expected an object");
          c.params = list[i]["params"];
        }
      } else {
        throw JsonError(at, "expected a check name or {\"name\": ..., \"params\": {...}}");
      }
      if (std::find(allowed.begin(), allowed.end(), c.name) == allowed.end()) {
        throw JsonError(at, "unknown check '" + c.name + "' for kind " + to_string(s.kind));
      }
      s.checks.push_back(std::move(c));
    }
  }

  if (doc.contains("output")) {
    const Json& o = doc["output"];
    if (!o.is_object()) throw JsonError("/output", "expected an object");
    if (o.contains("path")) {
      if (!o["path"].is_string()) throw JsonError("/output/path", "expected a string");
      s.output_path = o["path"].get<std::string>();
    }
    if (o.contains("format")) {
      const auto f = o["format"].is_string() ? format_from_string(o["format"].get<std::string>()) : std::nullopt;
      if (!f) throw JsonError("/output/format", "expected \"json\" or \"csv\"");
      s.output_format = f;
    }
  }

  if (doc.contains("seed") && s.kind != ScenarioKind::fuzz) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw JsonError("/seed", "expected an integer");
    }
    s.seed = doc["seed"].get<std::uint64_t>();
  }

  validate_payload(s.kind, doc);
  return s;
}

Scenario load_config(const std::string& path, std::optional<ScenarioKind> default_kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw JsonError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc, default_kind);
}

bool Report::pass() const {
  return std::all_of(results.begin(), results.end(),
                     [](const Json& r) { return r.value("pass", false); });
}

std::string render_report(const Report& report, Format format) {
  if (format == Format::json) {
    Json arr = Json::array();
    for (const auto& r : report.results) arr.push_back(r);
    return dump_stable(arr) + "\n";
  }
  if (report.tail_rows) return tail_rows_csv(*report.tail_rows);
  std::string out = "name,pass,margin,scale\n";
  for (const auto& r : report.results) {
    out += r.value("name", "");
    out += r.value("pass", false) ? ",true," : ",false,";
    const std::string margin = r.contains("margin") ? dump_stable(r["margin"])
                               : r.contains("worst_margin") ? dump_stable(r["worst_margin"])
                                                            : "";
    out += margin + ",";
    if (r.contains("scale")) out += dump_stable(r["scale"]);
    out += "\n";
  }
  return out;
}

void emit_report(const Report& report, Format format, const std::string& path, std::ostream& fallback) {
  const std::string text = render_report(report, format);
  if (path.empty() || path == "-") {
    fallback << text;
    fallback.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open output file '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing output file '" + path + "'");
}

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::optional<double> tol_abs;
  std::optional<double> tol_rel;
  int threads = 0;
  std::string output;
  std::string format;
};

struct Context {
  Globals g;
  Tolerance tol;
  std::uint64_t seed = 0;
};

Tolerance resolve_tol(const Globals& g, Tolerance base) {
  if (g.tol_abs) base.abs = *g.tol_abs;
  if (g.tol_rel) base.rel = *g.tol_rel;
  return base;
}

Json result_json(const CheckResult& r) { return check_to_json(r); }

double chain_alpha(const Generator& q, const FiniteMeasure& mu, const std::optional<double>& user, Json& note) {
  if (user) {
    note = {{"alpha", *user}, {"source", to_string(PoincareCertificate::Source::user_supplied)}};
    return *user;
  }
  const PoincareCertificate c = spectral_gap(q, mu);
  note = {{"alpha", c.alpha}, {"source", to_string(c.source)}, {"gap", *c.gap}};
  return c.alpha;
}

void add_tail(Report& report, const TailBoundSpec& spec, const TailEstimate& est, Json extra) {
  std::vector<TailRow> rows;
  CheckResult r = dominance_report(spec, est, &rows);
  for (auto& [k, v] : extra.items()) r.witness[k] = v;
  report.results.push_back(result_json(r));
  if (!report.tail_rows) report.tail_rows.emplace();
  report.tail_rows->insert(report.tail_rows->end(), rows.begin(), rows.end());
}

void run_chain_checks(const Scenario& s, const std::vector<CheckSpec>& checks, const Context& ctx,
                      Report& report) {
  const ChainScenario c = chain_from_json(s.document, "");
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckSpec& spec = checks[i];
    const std::string at = "/checks/" + std::to_string(i) + "/params";
    Json note;
    if (spec.name == "generator") {
      CheckResult r = validate_generator(c.q, c.mu, ctx.tol);
      r.name = "generator";
      report.results.push_back(result_json(r));
    } else if (spec.name == "poincare") {
      const double alpha = chain_alpha(c.q, c.mu, param_alpha(spec, at), note);
      CheckResult r = poincare_check(c.q, c.mu, c.f, alpha, ctx.tol);
      r.witness["certificate"] = note;
      report.results.push_back(result_json(r));
    } else if (spec.name == "semigroup") {
      const double t = param_number(spec, at, "t", 1.0);
      if (!(t >= 0.0)) throw JsonError(child(at, "t"), "t must be >= 0");
      for (auto& r : check_semigroup_properties(c.q, c.mu, c.f, t, ctx.tol)) {
        r.name = "semigroup_" + r.name;
        report.results.push_back(result_json(r));
      }
    } else if (spec.name == "variance_identity") {
      const double gap = *spectral_gap(c.q, c.mu).gap;
      const double t_max = param_number(spec, at, "t_max", 40.0 / gap);
      const int nodes = param_int(spec, at, "nodes", 96, 2, 4096);
      report.results.push_back(result_json(variance_integral_identity(c.q, c.mu, c.f, t_max, nodes)));
    } else if (spec.name == "variance_derivative") {
      const double t = param_number(spec, at, "t", 0.5);
      report.results.push_back(result_json(variance_derivative_check(c.q, c.mu, c.f, t)));
    } else if (spec.name == "laplace") {
      const double alpha = chain_alpha(c.q, c.mu, param_alpha(spec, at), note);
      const int points = param_int(spec, at, "points", 20, 1, 10000);
      const double v = gamma_sup_norm(c.q, c.f);
      CheckResult r = laplace_bound_check(c.q, c.mu, c.f, alpha, laplace_delta_grid(alpha, v, points),
                                          resolve_tol(ctx.g, {0.0, 1e-8}));
      r.witness["certificate"] = note;
      report.results.push_back(result_json(r));
    } else if (spec.name == "recursion") {
      const double alpha = chain_alpha(c.q, c.mu, param_alpha(spec, at), note);
      const double target = param_number(spec, at, "alpha_v", 0.5);
      if (!(target > 0.0 && target < 1.0)) throw JsonError(child(at, "alpha_v"), "alpha_v must lie in (0, 1)");
      const double v = gamma_sup_norm(c.q, c.f);
      if (v == 0.0) throw DomainError("recursion check needs a non-constant f");
      const MatrixFunction g =
          c.f.shifted(-expectation(c.mu, c.f)).scaled(std::sqrt(target / (alpha * v)));
      for (double p : param_list(spec, at, "p", {1, 2, 4})) {
        if (p != std::floor(p) || p < 1 || p > 64) throw JsonError(child(at, "p"), "powers must be integers in [1, 64]");
        CheckResult r = recursion_step_check(c.q, c.mu, g, static_cast<int>(p), alpha,
                                             resolve_tol(ctx.g, {0.0, 1e-8}));
        r.witness["certificate"] = note;
        report.results.push_back(result_json(r));
      }
    } else if (spec.name == "tail") {
      const double alpha = chain_alpha(c.q, c.mu, param_alpha(spec, at), note);
      const int points = param_int(spec, at, "points", 100, 2, 100000);
      const TailBoundSpec b{c.f.dim(), alpha, gamma_sup_norm(c.q, c.f)};
      const auto grid = linear_grid(3.0 * std::sqrt(b.alpha * b.v_gamma), points);
      add_tail(report, b, exact_tail(c.mu, c.f, grid), {{"certificate", note}});
    }
  }
}

void run_product_checks(const Scenario& s, const std::vector<CheckSpec>& checks, const Context& ctx,
                        Report& report) {
  const ProductPayload p = product_payload(s.document);
  const Generator q = product_generator(p.space);
  const FiniteMeasure mu = p.space.joint_measure();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckSpec& spec = checks[i];
    const std::string at = "/checks/" + std::to_string(i) + "/params";
    if (spec.name == "efron_stein") {
      report.results.push_back(result_json(efron_stein_check(p.space, p.f, ctx.tol)));
    } else if (spec.name == "poincare") {
      report.results.push_back(result_json(poincare_check(q, mu, p.f, 1.0, ctx.tol)));
    } else if (spec.name == "closed_form") {
      const Tolerance tol = resolve_tol(ctx.g, {1e-8, 0.0});
      for (double t : param_list(spec, at, "t", {0.1, 1.0, 3.0})) {
        if (!(t >= 0.0)) throw JsonError(child(at, "t"), "times must be >= 0");
        const MatrixFunction a = product_semigroup_closed_form(p.space, t, p.f);
        const MatrixFunction b = semigroup_apply(q, mu, t, p.f);
        double err = 0.0;
        for (int x = 0; x < a.size(); ++x) err = std::max(err, (a[x] - b[x]).op_norm());
        report.results.push_back(result_json(CheckResult::from_margin(
            "closed_form_semigroup", -err, 0.0, tol, {{"t", t}, {"max_op_norm_error", err}})));
      }
    } else if (spec.name == "tail") {
      const int points = param_int(spec, at, "points", 100, 2, 100000);
      const double vf = product_vf(p.space, p.f);
      const TailBoundSpec b = product_bound_spec(p.f.dim(), vf);
      const auto grid = linear_grid(3.0 * std::sqrt(b.alpha * b.v_gamma), points);
      add_tail(report, b, exact_tail(mu, p.f, grid), {{"v_f", vf}});
    }
  }
}

void run_gaussian_checks(const Scenario& s, const std::vector<CheckSpec>& checks, const Context& ctx,
                         Report& report) {
  const GaussianPayload p = gaussian_payload(s.document);
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckSpec& spec = checks[i];
    const std::string at = "/checks/" + std::to_string(i) + "/params";
    if (spec.name == "poincare") {
      const int deg = std::max(0, p.f.total_degree());
      const int order = param_int(spec, at, "order", required_order(2 * deg), 1, 200);
      report.results.push_back(
          result_json(gaussian_poincare_check(p.f, QuadratureRule::gauss_hermite(order), ctx.tol)));
    } else if (spec.name == "moments") {
      const int order = param_int(spec, at, "order", 10, 1, 200);
      const QuadratureRule rule = QuadratureRule::gauss_hermite(order);
      const int top = std::min(rule.exactness_degree(), 12);
      double err = 0.0;
      double even = 1.0;  // (k-1)!! at even k
      Json moments = Json::array();
      for (int k = 0; k <= top; ++k) {
        const double m = (k % 2) ? 0.0 : even;
        err = std::max(err, std::abs(rule.moment(k) - m));
        moments.push_back({{"k", k}, {"quadrature", rule.moment(k)}, {"exact", m}});
        if (k % 2 == 0) even *= k + 1;
      }
      report.results.push_back(result_json(CheckResult::from_margin(
          "quadrature_moments", -err, 0.0, resolve_tol(ctx.g, {1e-10, 0.0}),
          {{"order", order}, {"max_error", err}, {"moments", moments}})));
    } else if (spec.name == "tail") {
      const int points = param_int(spec, at, "points", 50, 2, 100000);
      const long long samples = param_int(spec, at, "samples", 100000, 1000, 100000000);
      const VfEstimate vf = gaussian_vf(p.f, p.box);
      const TailBoundSpec b = gaussian_bound_spec(p.f.dim(), vf.value);
      const auto grid = linear_grid(3.0 * std::sqrt(b.alpha * b.v_gamma), points);
      const int deg = std::max(0, p.f.total_degree());
      const HermitianMatrix mean = gauss_expect(p.f, QuadratureRule::gauss_hermite(required_order(deg)));
      const MatrixPolynomial& f = p.f;
      const int n = f.n_vars();
      const TailSampler sampler = [&f, &mean, n](Rng& rng) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.normal();
        return lambda_max(f.evaluate(x) - mean);
      };
      const TailEstimate est = mc_tail(sampler, grid, samples, ctx.seed, ctx.g.threads);
      add_tail(report, b, est, {{"v_f", vf.value}, {"v_f_exact", vf.exact}});
    }
  }
}

Json generator_json(const ScpGenerator& g, const CubeMeasure& mu) {
  Json rows = Json::array();
  for (int x = 0; x < g.q.size(); ++x) {
    Json row = Json::array();
    for (int y = 0; y < g.q.size(); ++y) row.push_back(g.q(x, y));
    rows.push_back(row);
  }
  return {{"n", mu.n()},
          {"k", mu.k()},
          {"states", g.q.space().labels()},
          {"mu", std::vector<double>(g.mu.weights().begin(), g.mu.weights().end())},
          {"Q", rows},
          {"worst_marginal_error", g.worst_marginal_error}};
}

void run_scp_checks(const ScpPayload& p, const std::vector<CheckSpec>& checks, const Context& ctx,
                    Report& report) {
  const CheckResult scp = scp_check(p.mu, p.order);
  std::optional<ScpGenerator> gen;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckSpec& spec = checks[i];
    const std::string at = "/checks/" + std::to_string(i) + "/params";
    if (spec.name == "scp") {
      report.results.push_back(result_json(scp));
      continue;
    }
    if (!scp.pass) continue;  // no coupling, hence no generator
    if (!gen) gen = scp_generator(p.mu, p.order, ctx.g.threads);
    if (spec.name == "generator") {
      CheckResult r = validate_generator(gen->q, gen->mu, ctx.tol);
      r.name = "generator";
      r.witness["generator"] = generator_json(*gen, p.mu);
      report.results.push_back(result_json(r));
    } else if (spec.name == "reversibility") {
      const double res = reversibility_residual(gen->q, gen->mu);
      report.results.push_back(result_json(CheckResult::from_margin(
          "reversibility", -res, 0.0, resolve_tol(ctx.g, {1e-10, 0.0}), {{"residual", res}})));
    } else if (spec.name == "normalization") {
      report.results.push_back(result_json(normalization_check(p.mu, *gen)));
    } else if (spec.name == "poincare" || spec.name == "tail") {
      if (!p.f) throw JsonError("/f", "check '" + spec.name + "' needs a matrix function");
      if (spec.name == "poincare") {
        report.results.push_back(result_json(scp_poincare_check(p.mu, *gen, *p.f, ctx.tol)));
        continue;
      }
      const int points = param_int(spec, at, "points", 100, 2, 100000);
      const LipschitzScan scan = lipschitz_scan(p.mu, *p.f);
      report.results.push_back(result_json(CheckResult::from_margin(
          "lipschitz_hypothesis", 1.0 - scan.constant, 1.0, {1e-12, 0.0},
          {{"constant", scan.constant}, {"x", config_label(scan.x, p.mu.n())}, {"y", config_label(scan.y, p.mu.n())}})));
      const TailBoundSpec b = scp_lipschitz_bound_spec(p.f->dim(), p.mu.k());
      const auto grid = linear_grid(3.0 * std::sqrt(b.alpha * b.v_gamma), points);
      add_tail(report, b, exact_tail(p.mu.measure(), *p.f, grid), Json::object());
    }
  }
}

std::vector<CheckSpec> defaults(std::initializer_list<const char*> names) {
  std::vector<CheckSpec> out;
  for (const char* n : names) out.push_back({n, Json::object()});
  return out;
}

std::vector<CheckSpec> default_checks(const std::string& command, ScenarioKind kind, bool has_f) {
  if (command == "tail-check") return defaults({"tail"});
  if (command == "laplace-check") return defaults({"laplace", "recursion"});
  if (command == "gaussian-check") return defaults({"moments", "poincare"});
  if (command == "scp-build") return defaults({"scp", "generator", "reversibility", "normalization"});
  switch (kind) {
    case ScenarioKind::finite_chain: return defaults({"generator", "poincare"});
    case ScenarioKind::product: return defaults({"efron_stein", "poincare"});
    case ScenarioKind::gaussian: return defaults({"poincare"});
    case ScenarioKind::scp: return has_f ? defaults({"scp", "poincare"}) : defaults({"scp"});
    case ScenarioKind::fuzz: return {};
  }
  return {};
}

std::vector<ScenarioKind> allowed_kinds(const std::string& command) {
  using K = ScenarioKind;
  if (command == "poincare-check") return {K::finite_chain, K::product, K::gaussian, K::scp};
  if (command == "tail-check") return {K::finite_chain, K::product, K::gaussian, K::scp};
  if (command == "laplace-check") return {K::finite_chain};
  if (command == "gaussian-check") return {K::gaussian};
  if (command == "scp-build") return {K::scp};
  if (command == "fuzz") return {K::fuzz};
  return {};
}

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Output {
  std::string path;
  Format format = Format::json;
};

Output resolve_output(const Globals& g, const Scenario* s) {
  Output o;
  if (!g.output.empty()) {
    o.path = g.output;
  } else if (s && s->output_path) {
    o.path = *s->output_path;
  }
  if (!g.format.empty()) {
    o.format = *format_from_string(g.format);
  } else if (s && s->output_format) {
    o.format = *s->output_format;
  }
  return o;
}

int finish(const Report& report, const Output& o, std::ostream& out) {
  emit_report(report, o.format, o.path, out);
  return report.pass() ? kExitPass : kExitCheckFailed;
}

int run_scenario_command(const std::string& command, const std::string& config, Context& ctx, std::ostream& out) {
  if (config.empty()) throw UsageError(command + " requires --config");
  const auto kinds = allowed_kinds(command);
  const std::optional<ScenarioKind> fallback =
      command == "fuzz" ? std::optional(ScenarioKind::fuzz) : std::nullopt;
  const Scenario s = load_config(config, fallback);
  if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) {
    throw JsonError("/kind", std::string("kind ") + to_string(s.kind) + " is not accepted by " + command);
  }
  if (!ctx.g.seed_set && s.seed) ctx.seed = *s.seed;
  const Output o = resolve_output(ctx.g, &s);

  Report report;
  if (s.kind == ScenarioKind::fuzz) {
    FuzzConfig fc = fuzz_payload(s.document);
    if (ctx.g.seed_set) fc.seed = ctx.seed;
    if (ctx.g.tol_abs || ctx.g.tol_rel) fc.tol = resolve_tol(ctx.g, fc.tol);
    for (const FuzzReport& r : fuzz_campaign(fc, fc.seed, ctx.g.threads)) {
      report.results.push_back({{"name", "fuzz"},
                                {"pass", r.violations.empty()},
                                {"margin", r.worst_normalized_margin},
                                {"tolerance", tolerance_to_json(fc.tol)},
                                {"witness", fuzz_report_to_json(r)}});
    }
    return finish(report, o, out);
  }

  const bool has_f = s.document.contains("f");
  const std::vector<CheckSpec> checks = s.checks.empty() ? default_checks(command, s.kind, has_f) : s.checks;
  switch (s.kind) {
    case ScenarioKind::finite_chain: run_chain_checks(s, checks, ctx, report); break;
    case ScenarioKind::product: run_product_checks(s, checks, ctx, report); break;
    case ScenarioKind::gaussian: run_gaussian_checks(s, checks, ctx, report); break;
    case ScenarioKind::scp: run_scp_checks(scp_payload(s.document), checks, ctx, report); break;
    case ScenarioKind::fuzz: break;
  }
  if (command != "tail-check") report.tail_rows.reset();
  return finish(report, o, out);
}

std::vector<double> parse_params(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--params: cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical verification of matrix Poincare and concentration inequalities", "matconc"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  double tol_abs = 0.0;
  double tol_rel = 0.0;
  int threads = 0;
  app.add_option("--seed", g.seed, "64-bit master seed");
  app.add_option("--tol-abs", tol_abs, "absolute tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--tol-rel", tol_rel, "relative tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads, 0 = auto (env MATCONC_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--output", g.output, "report path (default: stdout)");
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv"}));

  std::string config;
  const std::vector<std::pair<const char*, const char*>> scenario_commands = {
      {"poincare-check", "Poincare inequality checks for a scenario"},
      {"tail-check", "tail dominance table for a scenario"},
      {"laplace-check", "Laplace-transform bound and recursion step on a finite chain"},
      {"gaussian-check", "Gaussian Poincare and quadrature checks"},
      {"fuzz", "trace-inequality fuzzing campaign"}};
  for (const auto& [name, help] : scenario_commands) {
    app.add_subcommand(name, help)->add_option("--config", config, "scenario JSON file")->required();
  }

  CLI::App* scp_cmd = app.add_subcommand("scp-build", "build the SCP generator of a homogeneous measure");
  int n = 0;
  int k = 0;
  std::string family = "uniform";
  std::string params;
  std::string order = "lexicographic";
  scp_cmd->add_option("--config", config, "scenario JSON file");
  scp_cmd->add_option("--n", n, "number of coordinates")->check(CLI::Range(1, kMaxCubeDim));
  scp_cmd->add_option("--k", k, "homogeneity degree")->check(CLI::Range(1, kMaxCubeDim));
  scp_cmd->add_option("--family", family, "uniform | bernoulli")
      ->check(CLI::IsMember({"uniform", "uniform_k_subsets", "bernoulli", "conditioned_bernoulli"}));
  scp_cmd->add_option("--params", params, "comma-separated Bernoulli probabilities");
  scp_cmd->add_option("--flow-order", order, "coupling order")->check(CLI::IsMember({"lexicographic", "reverse"}));

  CLI::App* report_cmd = app.add_subcommand("report", "run the built-in verification suites");
  std::vector<std::string> suites;
  int trials = 0;
  long long samples = 0;
  report_cmd->add_option("--suite", suites, "suite name (repeatable; default: all)")
      ->check(CLI::IsMember(suite_names()));
  report_cmd->add_option("--trials", trials, "corpus size override")->check(CLI::PositiveNumber);
  report_cmd->add_option("--samples", samples, "Monte Carlo sample override")->check(CLI::Range(1000LL, 1000000000LL));

  std::vector<std::string> argv_store;
  argv_store.push_back("matconc");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    g.seed_set = app.count("--seed") > 0;
    if (app.count("--tol-abs")) g.tol_abs = tol_abs;
    if (app.count("--tol-rel")) g.tol_rel = tol_rel;
    if (app.count("--threads")) {
      g.threads = threads;
    } else if (const char* env = std::getenv("MATCONC_THREADS"); env && *env) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (*end != '\0' || v < 0 || v > 4096) throw UsageError("MATCONC_THREADS must be an integer in [0, 4096]");
      g.threads = static_cast<int>(v);
    }
    g.threads = resolve_threads(g.threads);

    Context ctx;
    ctx.g = g;
    ctx.seed = g.seed;
    ctx.tol = resolve_tol(g, Tolerance{});

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "report") {
      SuiteOptions so;
      so.seed = ctx.seed;
      so.threads = g.threads;
      so.trials = trials;
      so.samples = samples;
      if (g.tol_abs || g.tol_rel) so.tol = ctx.tol;
      Report report;
      for (const auto& name : suites.empty() ? suite_names() : suites) {
        report.results.push_back(suite_to_json(run_suite(name, so)));
      }
      return finish(report, resolve_output(g, nullptr), out);
    }
    if (command == "scp-build" && config.empty()) {
      if (scp_cmd->count("--n") == 0 || scp_cmd->count("--k") == 0) {
        throw UsageError("scp-build requires --config or both --n and --k");
      }
      if (k > n) throw UsageError("--k must not exceed --n");
      const MeasureFamily fam = parse_family(family, "--family");
      ScpPayload p{builtin_measure(fam, n, k, parse_params(params)), std::nullopt,
                   parse_order(order, "--flow-order")};
      Report report;
      run_scp_checks(p, default_checks(command, ScenarioKind::scp, false), ctx, report);
      return finish(report, resolve_output(g, nullptr), out);
    }
    return run_scenario_command(command, config, ctx, out);
  } catch (const UsageError& e) {
    err << "matconc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "matconc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const JsonError& e) {
    err << "matconc: config error at " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "matconc: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "matconc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "matconc: internal error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace matconc::cli

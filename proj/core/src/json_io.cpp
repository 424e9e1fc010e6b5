#include "matconc/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace matconc {

namespace {

void write_stable(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys already sorted
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        write_stable(it.value(), out);
      }
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        write_stable(j[i], out);
      }
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      double v = j.get<double>();
      if (v == 0.0) v = 0.0;  // print -0 as 0
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }
std::string child(const std::string& at, std::size_t i) { return at + "/" + std::to_string(i); }

const Json& field(const Json& j, const std::string& key, const std::string& at) {
  if (!j.is_object()) throw JsonError(at, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw JsonError(child(at, key), "missing required field");
  return *it;
}

double number(const Json& j, const std::string& at) {
  if (!j.is_number()) throw JsonError(at, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw JsonError(at, "expected a finite number");
  return v;
}

long long integer(const Json& j, const std::string& at) {
  if (!j.is_number_integer()) throw JsonError(at, "expected an integer");
  return j.get<long long>();
}

const Json& array(const Json& j, const std::string& at) {
  if (!j.is_array()) throw JsonError(at, "expected an array");
  return j;
}

std::vector<double> numbers(const Json& j, const std::string& at) {
  std::vector<double> v;
  for (std::size_t i = 0; i < array(j, at).size(); ++i) v.push_back(number(j[i], child(at, i)));
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string dump_stable(const Json& j) {
  std::string out;
  write_stable(j, out);
  return out;
}

Json tolerance_to_json(const Tolerance& t) { return {{"abs", t.abs}, {"rel", t.rel}}; }

Tolerance tolerance_from_json(const Json& j, const std::string& at) {
  if (!j.is_object()) throw JsonError(at, "expected an object");
  Tolerance t;
  if (j.contains("abs")) t.abs = number(j["abs"], child(at, "abs"));
  if (j.contains("rel")) t.rel = number(j["rel"], child(at, "rel"));
  if (t.abs < 0.0) throw JsonError(child(at, "abs"), "tolerance must be >= 0");
  if (t.rel < 0.0) throw JsonError(child(at, "rel"), "tolerance must be >= 0");
  return t;
}

Json matrix_to_json(const HermitianMatrix& m) {
  Json re = Json::array();
  Json im = Json::array();
  bool any_im = false;
  for (int i = 0; i < m.dim(); ++i) {
    Json rr = Json::array();
    Json ir = Json::array();
    for (int k = 0; k < m.dim(); ++k) {
      rr.push_back(m(i, k).real());
      ir.push_back(m(i, k).imag());
      any_im = any_im || m(i, k).imag() != 0.0;
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  Json j{{"d", m.dim()}, {"re", re}};
  if (any_im) j["im"] = im;
  return j;
}

HermitianMatrix matrix_from_json(const Json& j, const std::string& at) {
  const long long d = integer(field(j, "d", at), child(at, "d"));
  if (d < 1) throw JsonError(child(at, "d"), "dimension must be >= 1");
  CMatrix m = CMatrix::Zero(d, d);
  const auto read = [&](const char* key, bool imag) {
    const std::string p = child(at, key);
    const Json& rows = array(j[key], p);
    if (static_cast<long long>(rows.size()) != d) throw JsonError(p, "expected " + std::to_string(d) + " rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::vector<double> row = numbers(rows[r], child(p, r));
      if (static_cast<long long>(row.size()) != d) {
        throw JsonError(child(p, r), "expected " + std::to_string(d) + " entries");
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (imag) {
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += Complex(0.0, row[c]);
        } else {
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += row[c];
        }
      }
    }
  };
  field(j, "re", at);
  read("re", false);
  if (j.contains("im")) read("im", true);
  try {
    return HermitianMatrix(m);
  } catch (const ValidationError& e) {
    throw JsonError(at, e.what());
  }
}

Json check_to_json(const CheckResult& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"margin", r.margin},
          {"scale", r.scale},
          {"tolerance", tolerance_to_json(r.tolerance)},
          {"witness", r.witness}};
}

Json function_to_json(const MatrixFunction& f) {
  Json values = Json::array();
  for (const auto& v : f.values()) values.push_back(matrix_to_json(v));
  return {{"d", f.dim()}, {"values", values}};
}

MatrixFunction function_from_json(const Json& j, const std::string& at, int expected_size) {
  const long long d = integer(field(j, "d", at), child(at, "d"));
  const std::string vp = child(at, "values");
  const Json& values = array(field(j, "values", at), vp);
  if (values.empty()) throw JsonError(vp, "expected at least one value");
  if (expected_size >= 0 && static_cast<int>(values.size()) != expected_size) {
    throw JsonError(vp, "expected " + std::to_string(expected_size) + " values, got " +
                            std::to_string(values.size()));
  }
  std::vector<HermitianMatrix> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    HermitianMatrix m = matrix_from_json(values[i], child(vp, i));
    if (m.dim() != d) throw JsonError(child(vp, i), "dimension differs from d = " + std::to_string(d));
    out.push_back(std::move(m));
  }
  return MatrixFunction(std::move(out));
}

Json chain_to_json(const Generator& q, const FiniteMeasure& mu, const MatrixFunction& f) {
  Json rates = Json::array();
  for (int x = 0; x < q.size(); ++x) {
    Json row = Json::array();
    for (int y = 0; y < q.size(); ++y) row.push_back(q(x, y));
    rates.push_back(row);
  }
  return {{"states", q.space().labels()},
          {"mu", std::vector<double>(mu.weights().begin(), mu.weights().end())},
          {"Q", rates},
          {"f", function_to_json(f)}};
}

ChainScenario chain_from_json(const Json& j, const std::string& at) {
  const std::string mp = child(at, "mu");
  const std::vector<double> w = numbers(field(j, "mu", at), mp);
  if (w.empty()) throw JsonError(mp, "measure needs at least one state");
  const int n = static_cast<int>(w.size());
  std::vector<std::string> labels;
  if (j.contains("states")) {
    const std::string sp = child(at, "states");
    const Json& s = array(j["states"], sp);
    if (static_cast<int>(s.size()) != n) throw JsonError(sp, "expected " + std::to_string(n) + " labels");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_string()) throw JsonError(child(sp, i), "expected a string");
      labels.push_back(s[i].get<std::string>());
    }
  } else {
    labels = StateSpace::indexed(n).labels();
  }
  StateSpace space = [&] {
    try {
      return StateSpace(labels);
    } catch (const ValidationError& e) {
      throw JsonError(child(at, "states"), e.what());
    }
  }();
  FiniteMeasure mu = [&] {
    try {
      return FiniteMeasure(space, w);
    } catch (const ValidationError& e) {
      throw JsonError(mp, e.what());
    }
  }();

  const std::string qp = child(at, "Q");
  const Json& rows = array(field(j, "Q", at), qp);
  if (static_cast<int>(rows.size()) != n) throw JsonError(qp, "expected " + std::to_string(n) + " rows");
  RMatrix q(n, n);
  for (int x = 0; x < n; ++x) {
    const std::string rp = child(qp, static_cast<std::size_t>(x));
    const std::vector<double> row = numbers(rows[static_cast<std::size_t>(x)], rp);
    if (static_cast<int>(row.size()) != n) throw JsonError(rp, "expected " + std::to_string(n) + " entries");
    double sum = 0.0;
    double mag = 0.0;
    for (int y = 0; y < n; ++y) {
      const double v = row[static_cast<std::size_t>(y)];
      if (y != x && v < 0.0) throw JsonError(child(rp, static_cast<std::size_t>(y)), "off-diagonal rate must be >= 0");
      q(x, y) = v;
      sum += v;
      mag = std::max(mag, std::abs(v));
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, mag)) {
      throw JsonError(rp, "row sums to " + fmt(sum) + ", expected 0");
    }
  }
  Generator gen(space, std::move(q));
  MatrixFunction f = function_from_json(field(j, "f", at), child(at, "f"), n);
  return {std::move(gen), std::move(mu), std::move(f)};
}

Json product_to_json(const ProductSpace& space) {
  Json factors = Json::array();
  for (const auto& fct : space.factors()) {
    factors.push_back({{"weights", std::vector<double>(fct.weights().begin(), fct.weights().end())},
                       {"labels", fct.space().labels()}});
  }
  return {{"factors", factors}};
}

ProductSpace product_from_json(const Json& j, const std::string& at) {
  const std::string fp = child(at, "factors");
  const Json& factors = array(field(j, "factors", at), fp);
  if (factors.empty()) throw JsonError(fp, "expected at least one factor");
  if (factors.size() > static_cast<std::size_t>(kMaxProductFactors)) {
    throw JsonError(fp, "at most " + std::to_string(kMaxProductFactors) + " factors are supported");
  }
  std::vector<FiniteMeasure> out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string p = child(fp, i);
    const std::vector<double> w = numbers(field(factors[i], "weights", p), child(p, "weights"));
    if (w.empty()) throw JsonError(child(p, "weights"), "factor needs at least one state");
    StateSpace space = StateSpace::indexed(static_cast<int>(w.size()));
    if (factors[i].contains("labels")) {
      std::vector<std::string> labels;
      const Json& l = array(factors[i]["labels"], child(p, "labels"));
      for (std::size_t k = 0; k < l.size(); ++k) {
        if (!l[k].is_string()) throw JsonError(child(child(p, "labels"), k), "expected a string");
        labels.push_back(l[k].get<std::string>());
      }
      if (labels.size() != w.size()) throw JsonError(child(p, "labels"), "label count differs from weights");
      try {
        space = StateSpace(std::move(labels));
      } catch (const ValidationError& e) {
        throw JsonError(child(p, "labels"), e.what());
      }
    }
    try {
      out.emplace_back(std::move(space), w);
    } catch (const ValidationError& e) {
      throw JsonError(child(p, "weights"), e.what());
    }
  }
  try {
    return ProductSpace(std::move(out));
  } catch (const ValidationError& e) {
    throw JsonError(fp, e.what());
  }
}

Json polynomial_to_json(const MatrixPolynomial& p) {
  Json terms = Json::array();
  for (const auto& [e, c] : p.terms()) terms.push_back({{"exponents", e}, {"coeff", matrix_to_json(c)}});
  return {{"n", p.n_vars()}, {"d", p.dim()}, {"terms", terms}};
}

MatrixPolynomial polynomial_from_json(const Json& j, const std::string& at) {
  const long long n = integer(field(j, "n", at), child(at, "n"));
  const long long d = integer(field(j, "d", at), child(at, "d"));
  if (n < 1) throw JsonError(child(at, "n"), "number of variables must be >= 1");
  if (d < 1) throw JsonError(child(at, "d"), "dimension must be >= 1");
  MatrixPolynomial p(static_cast<int>(n), static_cast<int>(d));
  const std::string tp = child(at, "terms");
  const Json& terms = array(field(j, "terms", at), tp);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string p_i = child(tp, i);
    const std::string ep = child(p_i, "exponents");
    const Json& ej = array(field(terms[i], "exponents", p_i), ep);
    if (static_cast<long long>(ej.size()) != n) throw JsonError(ep, "expected " + std::to_string(n) + " exponents");
    std::vector<int> e;
    for (std::size_t k = 0; k < ej.size(); ++k) {
      const long long v = integer(ej[k], child(ep, k));
      if (v < 0 || v > 64) throw JsonError(child(ep, k), "exponent must be in [0, 64]");
      e.push_back(static_cast<int>(v));
    }
    HermitianMatrix c = matrix_from_json(field(terms[i], "coeff", p_i), child(p_i, "coeff"));
    if (c.dim() != d) throw JsonError(child(p_i, "coeff"), "dimension differs from d");
    p.add_term(e, c);
  }
  return p;
}

Json cube_to_json(const CubeMeasure& mu) {
  Json w = Json::object();
  for (Config x : mu.support()) w[config_label(x, mu.n())] = mu.weight(x);
  return {{"n", mu.n()}, {"k", mu.k()}, {"weights", w}};
}

MeasureFamily parse_family(const std::string& s, const std::string& at) {
  if (s == "uniform" || s == "uniform_k_subsets") return MeasureFamily::uniform_k_subsets;
  if (s == "bernoulli" || s == "conditioned_bernoulli") return MeasureFamily::conditioned_bernoulli;
  throw JsonError(at, "unknown measure family '" + s + "' (expected uniform_k_subsets or conditioned_bernoulli)");
}

CubeMeasure cube_from_json(const Json& j, const std::string& at) {
  if (!j.is_object()) throw JsonError(at, "expected an object");
  if (j.contains("builtin")) {
    const std::string bp = child(at, "builtin");
    const Json& b = j["builtin"];
    const Json& kind = field(b, "kind", bp);
    if (!kind.is_string()) throw JsonError(child(bp, "kind"), "expected a string");
    const MeasureFamily fam = parse_family(kind.get<std::string>(), child(bp, "kind"));
    const long long n = integer(field(b, "n", bp), child(bp, "n"));
    const long long k = integer(field(b, "k", bp), child(bp, "k"));
    std::vector<double> params;
    if (b.contains("params")) params = numbers(b["params"], child(bp, "params"));
    try {
      return builtin_measure(fam, static_cast<int>(n), static_cast<int>(k), params);
    } catch (const ValidationError& e) {
      throw JsonError(bp, e.what());
    }
  }
  const long long n = integer(field(j, "n", at), child(at, "n"));
  const long long k = integer(field(j, "k", at), child(at, "k"));
  if (n < 1 || n > 31) throw JsonError(child(at, "n"), "n must be in [1, 31]");
  const std::string wp = child(at, "weights");
  const Json& w = field(j, "weights", at);
  if (!w.is_object()) throw JsonError(wp, "expected an object keyed by bit-strings");
  std::map<Config, double> weights;
  for (auto it = w.begin(); it != w.end(); ++it) {
    const std::string p = child(wp, it.key());
    if (static_cast<long long>(it.key().size()) != n) throw JsonError(p, "bit-string must have length n");
    Config x = 0;
    try {
      x = parse_config(it.key());
    } catch (const ValidationError& e) {
      throw JsonError(p, e.what());
    }
    weights[x] = number(it.value(), p);
  }
  try {
    return CubeMeasure(static_cast<int>(n), static_cast<int>(k), std::move(weights));
  } catch (const ValidationError& e) {
    throw JsonError(wp, e.what());
  }
}

Json coupling_to_json(const Coupling& c, int n) {
  Json entries = Json::array();
  for (const auto& e : c.entries) {
    entries.push_back({{"u", config_label(e.u, n)}, {"v", config_label(e.v, n)}, {"mass", e.mass}});
  }
  Json s = Json::array();
  for (int i = 0; i < n; ++i) {
    if (c.s_mask & (Config{1} << i)) s.push_back(i);
  }
  return {{"S", s},
          {"x_S", config_label(c.xs, n)},
          {"s", c.s},
          {"p0", c.p0},
          {"p1", c.p1},
          {"entries", entries}};
}

FuzzConfig fuzz_config_from_json(const Json& j, const std::string& at) {
  if (!j.is_object()) throw JsonError(at, "expected an object");
  FuzzConfig c;
  if (j.contains("inequalities")) {
    const std::string ip = child(at, "inequalities");
    const Json& list = array(j["inequalities"], ip);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) throw JsonError(child(ip, i), "expected a string");
      const std::string id = list[i].get<std::string>();
      try {
        parse_inequality(id);
      } catch (const ValidationError& e) {
        throw JsonError(child(ip, i), e.what());
      }
      c.inequalities.push_back(id);
    }
  }
  if (j.contains("trials")) {
    const long long t = integer(j["trials"], child(at, "trials"));
    if (t < 0 || t > 100000000) throw JsonError(child(at, "trials"), "trials must be in [0, 1e8]");
    c.trials = static_cast<int>(t);
  }
  if (j.contains("d_range")) {
    const std::string dp = child(at, "d_range");
    const Json& r = array(j["d_range"], dp);
    if (r.size() != 2) throw JsonError(dp, "expected [lo, hi]");
    const long long lo = integer(r[0], child(dp, 0));
    const long long hi = integer(r[1], child(dp, 1));
    if (lo < 1 || hi < lo || hi > 16) throw JsonError(dp, "expected 1 <= lo <= hi <= 16");
    c.d_lo = static_cast<int>(lo);
    c.d_hi = static_cast<int>(hi);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw JsonError(child(at, "seed"), "expected an integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("tolerance")) c.tol = tolerance_from_json(j["tolerance"], child(at, "tolerance"));
  if (j.contains("inject_bug")) {
    if (!j["inject_bug"].is_boolean()) throw JsonError(child(at, "inject_bug"), "expected a boolean");
    c.inject_bug = j["inject_bug"].get<bool>();
  }
  return c;
}

Json fuzz_config_to_json(const FuzzConfig& c) {
  return {{"inequalities", c.inequalities},
          {"trials", c.trials},
          {"d_range", {c.d_lo, c.d_hi}},
          {"seed", c.seed},
          {"tolerance", tolerance_to_json(c.tol)},
          {"inject_bug", c.inject_bug}};
}

Json fuzz_report_to_json(const FuzzReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"trial", v.trial},
                          {"seed", v.seed},
                          {"margin", v.margin},
                          {"scale", v.scale},
                          {"instance", v.original},
                          {"shrunk", {{"instance", v.shrunk},
                                      {"margin", v.shrunk_margin},
                                      {"scale", v.shrunk_scale},
                                      {"d", v.shrunk_d},
                                      {"atoms", v.shrunk_atoms},
                                      {"steps", v.shrink_steps}}}});
  }
  return {{"inequality", r.inequality},
          {"trials", r.trials},
          {"violations", violations},
          {"worst_margin", r.worst_margin},
          {"worst_normalized_margin", r.worst_normalized_margin}};
}

Json tail_estimate_to_json(const TailEstimate& e) {
  return {{"method", to_string(e.method)},
          {"t_grid", e.t_grid},
          {"probabilities", e.probabilities},
          {"half_widths", e.half_widths},
          {"sample_count", e.sample_count}};
}

}  // namespace matconc

#include "matconc/scp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <tuple>

#include "matconc/errors.hpp"
#include "matconc/parallel.hpp"

namespace matconc {

std::string config_label(Config x, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int i = 0; i < n; ++i) {
    if (x & (Config{1} << i)) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

Config parse_config(const std::string& label) {
  if (label.empty() || label.size() > 31) throw ValidationError("bit-string label has invalid length");
  Config x = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == '1') {
      x |= Config{1} << i;
    } else if (label[i] != '0') {
      throw ValidationError("bit-string label '" + label + "' contains a non-binary character");
    }
  }
  return x;
}

int popcount(Config x) { return std::popcount(x); }

namespace {

Config full_mask(int n) { return n >= 32 ? ~Config{0} : (Config{1} << n) - 1; }

nlohmann::json index_list(Config mask, int n) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    if (mask & (Config{1} << i)) a.push_back(i);
  }
  return a;
}

// Bits of x at the coordinates of mask, as a string in increasing coordinate order.
std::string restricted_label(Config x, Config mask, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (mask & (Config{1} << i)) s += (x & (Config{1} << i)) ? '1' : '0';
  }
  return s;
}

void require_cap(const CubeMeasure& mu, const char* what) {
  if (mu.n() > kMaxCubeDim) {
    throw ValidationError(std::string(what) + " enumerates all conditionings and is limited to n <= " +
                          std::to_string(kMaxCubeDim) +
                          "; use sampled spot-checks of build_coupling for larger n");
  }
}

}  // namespace

CubeMeasure::CubeMeasure(int n, int k, std::map<Config, double> weights)
    : n_(n), k_(k), weights_(std::move(weights)) {
  if (n < 1 || n > 31) throw ValidationError("cube dimension n must be in [1, 31]");
  if (k < 1 || k > n) throw ValidationError("homogeneity k must satisfy 1 <= k <= n");
  if (weights_.empty()) throw ValidationError("cube measure has empty support");
  double total = 0.0;
  for (const auto& [x, w] : weights_) {
    if ((x & ~full_mask(n)) != 0) throw ValidationError("configuration outside {0,1}^n");
    if (popcount(x) != k) {
      throw ValidationError("configuration " + config_label(x, n) + " does not have exactly " +
                            std::to_string(k) + " ones");
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("weight of " + config_label(x, n) + " must be positive");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("cube measure weights must sum to 1");
  for (const auto& [x, w] : weights_) support_.push_back(x);
  std::sort(support_.begin(), support_.end(), [n](Config a, Config b) {
    return config_label(a, n) < config_label(b, n);
  });
}

double CubeMeasure::weight(Config x) const {
  const auto it = weights_.find(x);
  return it == weights_.end() ? 0.0 : it->second;
}

StateSpace CubeMeasure::state_space() const {
  std::vector<std::string> labels;
  for (Config x : support_) labels.push_back(config_label(x, n_));
  return StateSpace(std::move(labels));
}

FiniteMeasure CubeMeasure::measure() const {
  std::vector<double> w;
  for (Config x : support_) w.push_back(weight(x));
  return FiniteMeasure(state_space(), std::move(w));
}

int CubeMeasure::index_of(Config x) const {
  const std::string label = config_label(x, n_);
  const auto it = std::lower_bound(support_.begin(), support_.end(), label,
                                   [this](Config a, const std::string& l) {
                                     return config_label(a, n_) < l;
                                   });
  return (it != support_.end() && *it == x) ? static_cast<int>(it - support_.begin()) : -1;
}

CubeMeasure builtin_measure(MeasureFamily kind, int n, int k, const std::vector<double>& params) {
  if (n < 1 || n > kMaxCubeDim) {
    throw ValidationError("builtin families support 1 <= n <= " + std::to_string(kMaxCubeDim));
  }
  if (k < 1 || k > n) throw ValidationError("homogeneity k must satisfy 1 <= k <= n");
  if (kind == MeasureFamily::conditioned_bernoulli) {
    if (static_cast<int>(params.size()) != n) {
      throw ValidationError("conditioned_bernoulli needs " + std::to_string(n) + " probabilities");
    }
    for (double p : params) {
      if (!(p > 0.0 && p < 1.0)) throw ValidationError("Bernoulli probabilities must lie in (0, 1)");
    }
  }
  std::map<Config, double> w;
  double total = 0.0;
  for (Config x = 0; x <= full_mask(n); ++x) {
    if (popcount(x) != k) continue;
    double v = 1.0;
    if (kind == MeasureFamily::conditioned_bernoulli) {
      for (int i = 0; i < n; ++i) {
        const double p = params[static_cast<std::size_t>(i)];
        v *= (x & (Config{1} << i)) ? p : 1.0 - p;
      }
    }
    w[x] = v;
    total += v;
  }
  for (auto& [x, v] : w) v /= total;
  return CubeMeasure(n, k, std::move(w));
}

Conditional condition(const CubeMeasure& mu, Config s_mask, Config xs) {
  Conditional c;
  c.s_mask = s_mask;
  c.xs = xs;
  for (Config z : mu.support()) {
    if ((z & s_mask) == xs) {
      c.configs.push_back(z);
      c.probs.push_back(mu.weight(z));
      c.mass += mu.weight(z);
    }
  }
  if (!(c.mass > 0.0)) {
    throw ValidationError("zero-probability conditioning at S=" + index_list(s_mask, mu.n()).dump() +
                          ", x_S=" + restricted_label(xs, s_mask, mu.n()));
  }
  for (auto& p : c.probs) p /= c.mass;
  return c;
}

FiniteMeasure conditional_measure(const CubeMeasure& mu, Config s_mask, Config xs) {
  const Conditional c = condition(mu, s_mask, xs);
  const Config rest = full_mask(mu.n()) & ~s_mask;
  // Every coordinate conditioned on: point mass on the empty configuration.
  if (rest == 0) return FiniteMeasure(StateSpace({"()"}), {1.0});
  std::vector<std::string> labels;
  for (Config z : c.configs) labels.push_back(restricted_label(z, rest, mu.n()));
  return FiniteMeasure(StateSpace(std::move(labels)), c.probs);
}

double Coupling::mass(Config u, Config v) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(u, v),
                                   [](const CouplingEntry& e, const std::pair<Config, Config>& k) {
                                     return std::tie(e.u, e.v) < std::tie(k.first, k.second);
                                   });
  return (it != entries.end() && it->u == u && it->v == v) ? it->mass : 0.0;
}

namespace {

bool covers(Config u, Config v) { return (v & ~u) == 0 && popcount(u ^ v) == 1; }

// Dinic max-flow on doubles. Arc insertion order fixes the augmenting order.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_arc(int from, int to, double cap) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap});
    arcs_.push_back({from, 0.0});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  double flow_on(int arc) const { return arcs_[static_cast<std::size_t>(arc ^ 1)].cap; }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      for (;;) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= kEps) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Nodes reachable from s in the residual graph (after run).
  std::vector<bool> reachable(int s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<int> stack{s};
    seen[static_cast<std::size_t>(s)] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int id : adj_[static_cast<std::size_t>(v)]) {
        const Arc& a = arcs_[static_cast<std::size_t>(id)];
        if (a.cap > kEps && !seen[static_cast<std::size_t>(a.to)]) {
          seen[static_cast<std::size_t>(a.to)] = true;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr double kEps = 1e-15;
  struct Arc {
    int to;
    double cap;
  };

  bool bfs(int s, int t) {
    level_.assign(adj_.size(), -1);
    std::vector<int> queue{s};
    level_[static_cast<std::size_t>(s)] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int v = queue[h];
      for (int id : adj_[static_cast<std::size_t>(v)]) {
        const Arc& a = arcs_[static_cast<std::size_t>(id)];
        if (a.cap > kEps && level_[static_cast<std::size_t>(a.to)] < 0) {
          level_[static_cast<std::size_t>(a.to)] = level_[static_cast<std::size_t>(v)] + 1;
          queue.push_back(a.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  double dfs(int v, int t, double limit) {
    if (v == t) return limit;
    auto& i = it_[static_cast<std::size_t>(v)];
    const auto& out = adj_[static_cast<std::size_t>(v)];
    for (; i < out.size(); ++i) {
      const int id = out[i];
      Arc& a = arcs_[static_cast<std::size_t>(id)];
      if (a.cap <= kEps ||
          level_[static_cast<std::size_t>(a.to)] != level_[static_cast<std::size_t>(v)] + 1) {
        continue;
      }
      const double pushed = dfs(a.to, t, std::min(limit, a.cap));
      if (pushed > kEps) {
        a.cap -= pushed;
        arcs_[static_cast<std::size_t>(id ^ 1)].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

struct Side {
  std::vector<Config> configs;  // restricted to the free coordinates
  std::vector<double> probs;    // normalized within the side
  double total = 0.0;           // conditional probability of the side
};

Coupling couple_from(const CubeMeasure& mu, const Conditional& cond, int s, FlowOrder order) {
  const int n = mu.n();
  const Config sbit = Config{1} << s;
  const Config free = full_mask(n) & ~(cond.s_mask | sbit);
  Side zero, one;
  for (std::size_t j = 0; j < cond.configs.size(); ++j) {
    Side& side = (cond.configs[j] & sbit) ? one : zero;
    side.configs.push_back(cond.configs[j] & free);
    side.probs.push_back(cond.probs[j]);
    side.total += cond.probs[j];
  }
  const auto context = [&] {
    return "S=" + index_list(cond.s_mask, n).dump() + ", x_S=" +
           restricted_label(cond.xs, cond.s_mask, n) + ", s=" + std::to_string(s);
  };
  if (!(zero.total > 0.0) || !(one.total > 0.0)) {
    throw ValidationError("coupling undefined: a conditional at " + context() + " has zero mass");
  }
  for (Side* side : {&zero, &one}) {
    std::vector<std::size_t> idx(side->configs.size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const std::string la = config_label(side->configs[a], n);
      const std::string lb = config_label(side->configs[b], n);
      return order == FlowOrder::lexicographic ? la < lb : la > lb;
    });
    Side sorted;
    sorted.total = side->total;
    for (std::size_t j : idx) {
      sorted.configs.push_back(side->configs[j]);
      sorted.probs.push_back(side->probs[j] / side->total);
    }
    *side = std::move(sorted);
  }

  const int na = static_cast<int>(zero.configs.size());
  const int nb = static_cast<int>(one.configs.size());
  const int source = 0;
  const int sink = 1 + na + nb;
  MaxFlow flow(sink + 1);
  for (int a = 0; a < na; ++a) flow.add_arc(source, 1 + a, zero.probs[static_cast<std::size_t>(a)]);
  std::vector<std::tuple<int, int, int>> middle;
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < nb; ++b) {
      if (covers(zero.configs[static_cast<std::size_t>(a)], one.configs[static_cast<std::size_t>(b)])) {
        middle.emplace_back(a, b, flow.add_arc(1 + a, 1 + na + b, 2.0));
      }
    }
  }
  for (int b = 0; b < nb; ++b) flow.add_arc(1 + na + b, sink, one.probs[static_cast<std::size_t>(b)]);
  const double value = flow.run(source, sink);

  if (value < 1.0 - 1e-10) {
    const std::vector<bool> seen = flow.reachable(source);
    nlohmann::json deficient = nlohmann::json::array();
    nlohmann::json neighbourhood = nlohmann::json::array();
    double supply = 0.0;
    double demand = 0.0;
    for (int a = 0; a < na; ++a) {
      if (seen[static_cast<std::size_t>(1 + a)]) {
        deficient.push_back(restricted_label(zero.configs[static_cast<std::size_t>(a)], free, n));
        supply += zero.probs[static_cast<std::size_t>(a)];
      }
    }
    for (int b = 0; b < nb; ++b) {
      if (seen[static_cast<std::size_t>(1 + na + b)]) {
        neighbourhood.push_back(restricted_label(one.configs[static_cast<std::size_t>(b)], free, n));
        demand += one.probs[static_cast<std::size_t>(b)];
      }
    }
    nlohmann::json witness = {{"S", index_list(cond.s_mask, n)},
                              {"x_S", restricted_label(cond.xs, cond.s_mask, n)},
                              {"s", s},
                              {"free_coordinates", index_list(free, n)},
                              {"flow", value},
                              {"deficient_set", deficient},
                              {"neighbourhood", neighbourhood},
                              {"supply", supply},
                              {"demand", demand}};
    throw ScpViolation("SCP violated at (" + context() + ")", std::move(witness));
  }

  Coupling c;
  c.s_mask = cond.s_mask;
  c.xs = cond.xs;
  c.s = s;
  c.free_mask = free;
  c.condition_mass = cond.mass;
  c.p0 = zero.total;
  c.p1 = one.total;
  for (const auto& [a, b, arc] : middle) {
    const double m = flow.flow_on(arc);
    if (m > 1e-15) {
      c.entries.push_back(
          {zero.configs[static_cast<std::size_t>(a)], one.configs[static_cast<std::size_t>(b)], m});
    }
  }
  std::sort(c.entries.begin(), c.entries.end(), [](const CouplingEntry& x, const CouplingEntry& y) {
    return std::tie(x.u, x.v) < std::tie(y.u, y.v);
  });
  return c;
}

}  // namespace

Coupling build_coupling(const CubeMeasure& mu, Config s_mask, Config xs, int s, FlowOrder order) {
  if (s < 0 || s >= mu.n()) throw ValidationError("pivot coordinate out of range");
  if (s_mask & (Config{1} << s)) throw ValidationError("pivot coordinate must not lie in S");
  if ((xs & ~s_mask) != 0) throw ValidationError("x_S has bits outside S");
  return couple_from(mu, condition(mu, s_mask, xs), s, order);
}

CouplingAudit audit_coupling(const CubeMeasure& mu, const Coupling& c) {
  const Conditional cond = condition(mu, c.s_mask, c.xs);
  const Config sbit = Config{1} << c.s;
  std::map<Config, double> want0, want1, got0, got1;
  for (std::size_t j = 0; j < cond.configs.size(); ++j) {
    const Config z = cond.configs[j];
    if (z & sbit) {
      want1[z & c.free_mask] += cond.probs[j] / c.p1;
    } else {
      want0[z & c.free_mask] += cond.probs[j] / c.p0;
    }
  }
  CouplingAudit audit;
  for (const auto& e : c.entries) {
    got0[e.u] += e.mass;
    got1[e.v] += e.mass;
    if (!covers(e.u, e.v)) audit.covering_support = false;
    if (!want0.count(e.u) || !want1.count(e.v)) audit.covering_support = false;
  }
  for (const auto* pair : {&want0, &want1}) {
    const auto& got = pair == &want0 ? got0 : got1;
    for (const auto& [z, w] : *pair) {
      const auto it = got.find(z);
      audit.marginal_error = std::max(audit.marginal_error, std::abs(w - (it == got.end() ? 0.0 : it->second)));
    }
  }
  return audit;
}

CheckResult scp_check(const CubeMeasure& mu, FlowOrder order) {
  require_cap(mu, "scp_check");
  const int n = mu.n();
  const Tolerance tol{1e-10, 0.0};
  double worst_flow = 1.0;
  std::size_t couplings = 0;
  for (Config s_mask = 0; s_mask <= full_mask(n); ++s_mask) {
    if (popcount(s_mask) >= n) continue;
    std::vector<Config> patterns;
    for (Config z : mu.support()) patterns.push_back(z & s_mask);
    std::sort(patterns.begin(), patterns.end());
    patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
    for (Config xs : patterns) {
      const Conditional cond = condition(mu, s_mask, xs);
      for (int s = 0; s < n; ++s) {
        const Config sbit = Config{1} << s;
        if (s_mask & sbit) continue;
        bool has0 = false;
        bool has1 = false;
        for (Config z : cond.configs) ((z & sbit) ? has1 : has0) = true;
        if (!has0 || !has1) continue;
        try {
          const Coupling c = couple_from(mu, cond, s, order);
          double total = 0.0;
          for (const auto& e : c.entries) total += e.mass;
          worst_flow = std::min(worst_flow, total);
          ++couplings;
        } catch (const ScpViolation& v) {
          nlohmann::json w = v.witness;
          w["message"] = v.what();
          return CheckResult::from_margin("scp", v.witness["flow"].get<double>() - 1.0, 1.0, tol,
                                          std::move(w));
        }
      }
    }
  }
  return CheckResult::from_margin("scp", worst_flow - 1.0, 1.0, tol,
                                  {{"couplings_built", couplings}});
}

ScpGenerator scp_generator(const CubeMeasure& mu, FlowOrder order, int threads) {
  require_cap(mu, "scp_generator");
  // The pair sums below only touch couplings between neighbours, which can
  // miss a violation elsewhere (e.g. a support with no neighbouring pairs).
  if (const CheckResult pre = scp_check(mu, order); !pre.pass) {
    throw ScpViolation(pre.witness.value("message", std::string("SCP violated")), pre.witness);
  }
  const int n = mu.n();
  const int k = mu.k();
  const std::vector<Config>& support = mu.support();
  const int m = static_cast<int>(support.size());

  // Unordered neighbour pairs x ~ y (differ in exactly two coordinates).
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (popcount(support[static_cast<std::size_t>(i)] ^ support[static_cast<std::size_t>(j)]) == 2) {
        pairs.emplace_back(i, j);
      }
    }
  }

  // Every (S, x_S, pivot) the pair sums touch; the pivot is one of the two
  // differing coordinates and S ranges over subsets of the rest.
  using Key = std::tuple<Config, Config, int>;
  std::map<Key, std::size_t> keys;
  for (const auto& [i, j] : pairs) {
    const Config x = support[static_cast<std::size_t>(i)];
    const Config y = support[static_cast<std::size_t>(j)];
    const Config diff = x ^ y;
    const Config rest = full_mask(n) & ~diff;
    const int a = std::countr_zero(y & ~x);
    const int b = std::countr_zero(x & ~y);
    for (Config s_mask = rest;; s_mask = (s_mask - 1) & rest) {
      keys.emplace(Key{s_mask, x & s_mask, a}, 0);
      keys.emplace(Key{s_mask, x & s_mask, b}, 0);
      if (s_mask == 0) break;
    }
  }
  std::vector<Key> key_list;
  key_list.reserve(keys.size());
  for (auto& [key, slot] : keys) {
    slot = key_list.size();
    key_list.push_back(key);
  }

  std::vector<Coupling> couplings(key_list.size());
  std::vector<double> audit_error(key_list.size(), 0.0);
  parallel_for(key_list.size(), threads, [&](std::size_t idx) {
    const auto& [s_mask, xs, s] = key_list[idx];
    couplings[idx] = couple_from(mu, condition(mu, s_mask, xs), s, order);
    const CouplingAudit audit = audit_coupling(mu, couplings[idx]);
    if (!audit.covering_support) throw std::logic_error("coupling support is not on covering pairs");
    audit_error[idx] = audit.marginal_error;
  });
  double worst_marginal = 0.0;
  for (double e : audit_error) worst_marginal = std::max(worst_marginal, e);
  if (worst_marginal > 1e-10) throw std::logic_error("coupling marginals deviate by more than 1e-10");

  std::vector<double> factorial(static_cast<std::size_t>(n + 1), 1.0);
  for (int i = 1; i <= n; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;

  const auto lookup = [&](Config s_mask, Config xs, int s) -> const Coupling& {
    return couplings[keys.at(Key{s_mask, xs, s})];
  };
  // Q(x, y) for x ~ y: a = s_xy (x_a = 0, y_a = 1), b = s_yx.
  const auto rate = [&](Config x, Config y) {
    const Config diff = x ^ y;
    const Config rest = full_mask(n) & ~diff;
    const int a = std::countr_zero(y & ~x);
    const int b = std::countr_zero(x & ~y);
    double sum = 0.0;
    for (Config s_mask = rest;; s_mask = (s_mask - 1) & rest) {
      const int l = popcount(s_mask);
      const double weight = factorial[static_cast<std::size_t>(l)] *
                            factorial[static_cast<std::size_t>(n - 1 - l)] /
                            factorial[static_cast<std::size_t>(n)];
      const Config xs = x & s_mask;
      const Coupling& ca = lookup(s_mask, xs, a);
      const Coupling& cb = lookup(s_mask, xs, b);
      const double ha = ca.mass(x & ca.free_mask, y & ca.free_mask) * ca.p0 * ca.p1;
      const double hb = cb.mass(y & cb.free_mask, x & cb.free_mask) * cb.p0 * cb.p1;
      // mu(x | xi_S = x_S) = mu(x) / P(xi_S = x_S)
      sum += weight * (ha + hb) * ca.condition_mass / mu.weight(x);
      if (s_mask == 0) break;
    }
    return sum / (2.0 * k);
  };

  std::vector<std::pair<double, double>> rates(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const Config x = support[static_cast<std::size_t>(pairs[p].first)];
    const Config y = support[static_cast<std::size_t>(pairs[p].second)];
    rates[p] = {rate(x, y), rate(y, x)};
  });

  RMatrix q = RMatrix::Zero(m, m);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    q(pairs[p].first, pairs[p].second) = rates[p].first;
    q(pairs[p].second, pairs[p].first) = rates[p].second;
  }
  for (int x = 0; x < m; ++x) {
    double s = 0.0;
    for (int y = 0; y < m; ++y) {
      if (y != x) s += q(x, y);
    }
    q(x, x) = -s;
  }
  return {Generator(mu.state_space(), std::move(q)), mu.measure(), std::move(couplings),
          worst_marginal};
}

CheckResult normalization_check(const CubeMeasure& mu, const ScpGenerator& g) {
  double worst = 0.0;
  int arg = 0;
  for (int x = 0; x < g.q.size(); ++x) {
    if (g.q.exit_rate(x) > worst) {
      worst = g.q.exit_rate(x);
      arg = x;
    }
  }
  const double sharp = static_cast<double>(mu.n() - 1) / mu.n();
  return CheckResult::from_margin("normalization", 1.0 - worst, 1.0, Tolerance{1e-10, 0.0},
                                  {{"max_exit_rate", worst},
                                   {"argmax", g.q.space().label(arg)},
                                   {"threshold", 1.0},
                                   {"sharp_threshold", sharp},
                                   {"sharp_margin", sharp - worst},
                                   {"sharp_pass", worst <= sharp + 1e-10}});
}

CheckResult scp_poincare_check(const CubeMeasure& mu, const ScpGenerator& g,
                               const MatrixFunction& f, Tolerance tol) {
  CheckResult r = poincare_check(g.q, g.mu, f, 2.0 * mu.k(), tol);
  r.name = "scp_poincare";
  return r;
}

CheckResult two_state_identity(const FiniteMeasure& pi, const Generator& qt, const MatrixFunction& f) {
  if (pi.size() != 2 || qt.size() != 2 || f.size() != 2) {
    throw ValidationError("two-state identity needs a two-state measure, generator and function");
  }
  const double total = qt(0, 1) + qt(1, 0);
  if (!(total > 0.0)) throw ValidationError("two-state identity needs positive rates");
  if (pi[0] == 0.0 || pi[1] == 0.0) {
    throw ValidationError("two-state identity: a point-mass measure cannot be reversible for nonzero rates");
  }
  const HermitianMatrix lhs = variance(pi, f);
  const HermitianMatrix rhs = dirichlet_form(qt, pi, f) * (1.0 / total);
  const double err = (lhs - rhs).op_norm();
  return CheckResult::from_margin("two_state_identity", -err, std::max(lhs.op_norm(), rhs.op_norm()),
                                  Tolerance{1e-10, 1e-10}, {{"discrepancy", err}});
}

LipschitzScan lipschitz_scan(const CubeMeasure& mu, const MatrixFunction& f) {
  const auto& support = mu.support();
  if (f.size() != static_cast<int>(support.size())) {
    throw ValidationError("matrix function does not match the support size");
  }
  LipschitzScan scan;
  for (std::size_t i = 0; i < support.size(); ++i) {
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      const double dist = popcount(support[i] ^ support[j]);
      const double ratio = (f[static_cast<int>(i)] - f[static_cast<int>(j)]).op_norm() / dist;
      if (ratio > scan.constant) scan = {ratio, support[i], support[j]};
    }
  }
  return scan;
}

MatrixFunction random_lipschitz_function(const CubeMeasure& mu, int d, Rng& rng) {
  std::vector<HermitianMatrix> a;
  for (int i = 0; i < mu.n(); ++i) a.push_back(random_hermitian(d, 1.0, rng));
  std::vector<HermitianMatrix> values;
  for (Config x : mu.support()) {
    HermitianMatrix v = random_hermitian(d, 0.5, rng);
    for (int i = 0; i < mu.n(); ++i) {
      if (x & (Config{1} << i)) v += a[static_cast<std::size_t>(i)];
    }
    values.push_back(std::move(v));
  }
  MatrixFunction f(std::move(values));
  const double l = lipschitz_scan(mu, f).constant;
  return l > 0.0 ? f.scaled(1.0 / l) : f;
}

}  // namespace matconc

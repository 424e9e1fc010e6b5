#include "matconc/traceineq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "matconc/dirichlet.hpp"
#include "matconc/errors.hpp"
#include "matconc/json_io.hpp"
#include "matconc/parallel.hpp"

namespace matconc {

MatrixDistribution::MatrixDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ValidationError("matrix distribution needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.prob >= 0.0) || !std::isfinite(a.prob)) throw ValidationError("atom probabilities must be >= 0");
    if (a.value.dim() != atoms_.front().value.dim()) throw ValidationError("atoms differ in dimension");
    total += a.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("atom probabilities must sum to 1");
}

MatrixDistribution MatrixDistribution::point_mass(const HermitianMatrix& m) {
  return MatrixDistribution({{1.0, m}});
}

CheckResult check_mean_value_trace(const HermitianMatrix& a, const MatrixDistribution& b, int p,
                                   Tolerance tol, bool inject_bug) {
  if (p < 1) throw ValidationError("mean-value trace check needs p >= 1");
  if (a.dim() != b.dim()) throw ValidationError("A and B differ in dimension");
  const int d = a.dim();
  const HermitianMatrix ea = mat_exp(a);
  HermitianMatrix lhs_in = HermitianMatrix::zero(d);
  HermitianMatrix r1_in = HermitianMatrix::zero(d);
  HermitianMatrix r2_mid = HermitianMatrix::zero(d);
  for (const auto& atom : b.atoms()) {
    const HermitianMatrix diff = a - atom.value;
    lhs_in += (ea - mat_exp(atom.value)).square() * atom.prob;
    r1_in += diff.sandwich(mat_exp(atom.value * 2.0)) * atom.prob;
    r2_mid += diff.square() * atom.prob;
  }
  const HermitianMatrix r2_in = ea.sandwich(r2_mid);
  const double c = inject_bug ? 0.25 : 0.5;
  const double lhs = int_pow(lhs_in, p).trace();
  const double rhs1 = int_pow(r1_in, p).trace();
  const double rhs2 = int_pow(r2_in, p).trace();
  const double rhs = c * rhs1 + c * rhs2;
  return CheckResult::from_margin("mean_value_trace", rhs - lhs, std::max(std::abs(lhs), std::abs(rhs)),
                                  tol, {{"lhs", lhs}, {"rhs_exp_term", rhs1}, {"rhs_sandwich_term", rhs2},
                                        {"factor", c}, {"p", p}});
}

CheckResult check_contraction_power(std::vector<JointAtom> joint, double p, Tolerance tol) {
  if (joint.empty()) throw ValidationError("joint law needs at least one atom");
  if (!(p >= 1.0)) throw ValidationError("contraction power check needs p >= 1");
  const int d = joint.front().k.dim();
  double total = 0.0;
  for (const auto& j : joint) {
    if (j.k.dim() != d || j.z.dim() != d) throw ValidationError("joint atoms differ in dimension");
    if (!(j.prob >= 0.0)) throw ValidationError("atom probabilities must be >= 0");
    const double floor = -1e-12 * (1.0 + j.z.op_norm());
    if (lambda_min(j.z) < floor) throw ValidationError("Z atom is not positive semidefinite");
    total += j.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("atom probabilities must sum to 1");

  HermitianMatrix ek2 = HermitianMatrix::zero(d);
  for (const auto& j : joint) ek2 += j.k.square() * j.prob;
  const double top = lambda_max(ek2);
  double rescale = 1.0;
  if (top > 1.0 + 1e-12) {
    rescale = 1.0 / std::sqrt(top);
    for (auto& j : joint) j.k = j.k * rescale;
  }
  // E[K Z^p K] = C^* C with C the stacked blocks sqrt(prob) Z^{p/2} K. Its
  // 1/p-th power is taken from the SVD of C: forming C^* C first loses the
  // small eigenvalues, which t^{1/p} then amplifies.
  HermitianMatrix m1 = HermitianMatrix::zero(d);
  CMatrix stacked(static_cast<Eigen::Index>(joint.size()) * d, d);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto& j = joint[i];
    m1 += j.k.sandwich(j.z) * j.prob;
    stacked.middleRows(static_cast<Eigen::Index>(i) * d, d) = std::sqrt(j.prob) * psd_pow(j.z, p / 2.0).mat() * j.k.mat();
  }
  const Eigen::JacobiSVD<CMatrix> svd(stacked, Eigen::ComputeThinV);
  const Eigen::VectorXd powered = svd.singularValues().array().pow(2.0 / p).matrix();
  const HermitianMatrix root = HermitianMatrix::hermitian_part(svd.matrixV() * powered.asDiagonal() * svd.matrixV().adjoint());
  const double trace_rhs = stacked.squaredNorm();
  CheckResult r = psd_leq(m1, root, tol);
  r.name = "contraction_power";
  const double trace_lhs = psd_pow(m1, p).trace();
  const double trace_margin = trace_rhs - trace_lhs;
  const double trace_scale = std::max(std::abs(trace_lhs), std::abs(trace_rhs));
  const bool trace_pass = trace_margin >= -tol.allowance(trace_scale);
  r.pass = r.pass && trace_pass;
  r.witness["trace_margin"] = trace_margin;
  r.witness["trace_scale"] = trace_scale;
  r.witness["trace_pass"] = trace_pass;
  r.witness["k_rescale"] = rescale;
  r.witness["p"] = p;
  return r;
}

CheckResult check_weighted_convexity(const HermitianMatrix& a, const HermitianMatrix& b, double gamma,
                                     int p, Tolerance tol) {
  if (!(gamma > 1.0)) throw ValidationError("weighted convexity needs gamma > 1");
  if (p < 1) throw ValidationError("weighted convexity needs p >= 1");
  const double lhs = int_pow(a + b, p).trace();
  const double ca = std::pow(gamma / (gamma - 1.0), p - 1);
  const double cb = std::pow(gamma, p - 1);
  const double rhs = ca * int_pow(a, p).trace() + cb * int_pow(b, p).trace();
  return CheckResult::from_margin("weighted_convexity", rhs - lhs,
                                  std::max(std::abs(lhs), std::abs(rhs)), tol,
                                  {{"lhs", lhs}, {"rhs", rhs}, {"gamma", gamma}, {"p", p}});
}

CheckResult check_dirichlet_laplace(const Generator& q, const FiniteMeasure& mu,
                                    const MatrixFunction& g, int p, Tolerance tol) {
  if (p < 1) throw ValidationError("Dirichlet-Laplace check needs p >= 1");
  const HermitianMatrix e = dirichlet_form(q, mu, g.map([](double s) { return std::exp(s); }));
  const double lhs = int_pow(e, p).trace();
  const double v = gamma_sup_norm(q, g);
  double laplace = 0.0;
  for (int x = 0; x < mu.size(); ++x) {
    laplace += mu[x] * eigenvalues(g[x] * (2.0 * p)).array().exp().sum();
  }
  const double rhs = std::pow(v, p) * laplace;
  return CheckResult::from_margin("dirichlet_laplace", rhs - lhs,
                                  std::max(std::abs(lhs), std::abs(rhs)), tol,
                                  {{"lhs", lhs}, {"rhs", rhs}, {"gamma_sup", v}, {"p", p}});
}

const char* to_string(Inequality id) {
  switch (id) {
    case Inequality::mean_value_trace: return "mean_value_trace";
    case Inequality::contraction_power: return "contraction_power";
    case Inequality::weighted_convexity: return "weighted_convexity";
    case Inequality::dirichlet_laplace: return "dirichlet_laplace";
  }
  return "unknown";
}

Inequality parse_inequality(const std::string& id) {
  for (Inequality i : all_inequalities()) {
    if (id == to_string(i)) return i;
  }
  throw ValidationError("unknown inequality id '" + id + "'");
}

std::vector<Inequality> all_inequalities() {
  return {Inequality::mean_value_trace, Inequality::contraction_power,
          Inequality::weighted_convexity, Inequality::dirichlet_laplace};
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

HermitianMatrix leading_block(const HermitianMatrix& m, int d) {
  return HermitianMatrix::hermitian_part(m.mat().topLeftCorner(d, d));
}

std::vector<double> random_simplex(int n, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& v : w) {
    v = 0.1 + rng.uniform();
    total += v;
  }
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    w[i] /= total;
    partial += w[i];
  }
  w.back() = 1.0 - partial;
  return w;
}

std::vector<double> renormalized(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    w[i] /= total;
    partial += w[i];
  }
  w.back() = 1.0 - partial;
  return w;
}

}  // namespace

int instance_dim(const FuzzInstance& inst) {
  return std::visit(Overloaded{[](const MeanValueInstance& i) { return i.a.dim(); },
                               [](const ContractionInstance& i) { return i.joint.front().k.dim(); },
                               [](const ConvexityInstance& i) { return i.a.dim(); },
                               [](const DirichletLaplaceInstance& i) { return i.g.dim(); }},
                    inst);
}

int instance_atoms(const FuzzInstance& inst) {
  return std::visit(Overloaded{[](const MeanValueInstance& i) { return i.b.size(); },
                               [](const ContractionInstance& i) { return static_cast<int>(i.joint.size()); },
                               [](const ConvexityInstance&) { return 1; },
                               [](const DirichletLaplaceInstance& i) { return i.mu.size(); }},
                    inst);
}

CheckResult evaluate_instance(const FuzzInstance& inst, Tolerance tol, bool inject_bug) {
  return std::visit(
      Overloaded{[&](const MeanValueInstance& i) { return check_mean_value_trace(i.a, i.b, i.p, tol, inject_bug); },
                 [&](const ContractionInstance& i) { return check_contraction_power(i.joint, i.p, tol); },
                 [&](const ConvexityInstance& i) { return check_weighted_convexity(i.a, i.b, i.gamma, i.p, tol); },
                 [&](const DirichletLaplaceInstance& i) { return check_dirichlet_laplace(i.q, i.mu, i.g, i.p, tol); }},
      inst);
}

FuzzInstance generate_instance(Inequality id, std::uint64_t seed, int d_lo, int d_hi) {
  if (d_lo < 1 || d_hi < d_lo) throw ValidationError("invalid d_range");
  Rng rng(seed);
  const int d = rng.uniform_int(d_lo, d_hi);
  switch (id) {
    case Inequality::mean_value_trace: {
      const HermitianMatrix a = random_hermitian_with_norm(d, rng.uniform(0.1, 1.5), rng);
      const int atoms = rng.uniform_int(1, 3);
      const std::vector<double> w = random_simplex(atoms, rng);
      std::vector<MatrixDistribution::Atom> b;
      for (int j = 0; j < atoms; ++j) {
        b.push_back({w[static_cast<std::size_t>(j)], random_hermitian_with_norm(d, rng.uniform(0.1, 1.5), rng)});
      }
      return MeanValueInstance{a, MatrixDistribution(std::move(b)), rng.uniform_int(1, 3)};
    }
    case Inequality::contraction_power: {
      static constexpr double kPowers[] = {1.0, 2.0, 3.0, 5.5};
      const int atoms = rng.uniform_int(1, 3);
      const std::vector<double> w = random_simplex(atoms, rng);
      std::vector<JointAtom> joint;
      for (int j = 0; j < atoms; ++j) {
        HermitianMatrix k = random_hermitian_with_norm(d, rng.uniform(0.2, 1.5), rng);
        HermitianMatrix z = random_psd(d, rng.uniform(0.2, 2.0), rng);
        joint.push_back({w[static_cast<std::size_t>(j)], std::move(k), std::move(z)});
      }
      return ContractionInstance{std::move(joint), kPowers[rng.uniform_int(0, 3)]};
    }
    case Inequality::weighted_convexity: {
      static constexpr double kGammas[] = {1.1, 2.0, 10.0};
      const double gamma = kGammas[rng.uniform_int(0, 2)];
      const int p = rng.uniform_int(2, 4);
      const bool hermitian = p % 2 == 0 && rng.uniform() < 0.5;
      const auto draw = [&] {
        return hermitian ? random_hermitian_with_norm(d, rng.uniform(0.1, 3.0), rng)
                         : random_psd(d, rng.uniform(0.1, 3.0), rng);
      };
      HermitianMatrix a = draw();
      HermitianMatrix b = draw();
      return ConvexityInstance{std::move(a), std::move(b), gamma, p};
    }
    case Inequality::dirichlet_laplace: {
      const int states = rng.uniform_int(2, 5);
      ReversibleChain chain = random_reversible_chain(states, rng, rng.uniform(0.5, 2.0));
      MatrixFunction g = random_matrix_function(states, d, 0.4, rng);
      return DirichletLaplaceInstance{std::move(chain.q), std::move(chain.mu), std::move(g),
                                      rng.uniform_int(1, 3)};
    }
  }
  throw ValidationError("unknown inequality");
}

namespace {

// Candidate reductions in the order they are tried.
std::vector<FuzzInstance> shrink_candidates(const FuzzInstance& inst, int d_floor) {
  std::vector<FuzzInstance> out;
  const int d = instance_dim(inst);
  std::visit(
      Overloaded{
          [&](const MeanValueInstance& i) {
            const auto& atoms = i.b.atoms();
            for (std::size_t drop = 0; atoms.size() > 1 && drop < atoms.size(); ++drop) {
              std::vector<double> w;
              std::vector<HermitianMatrix> v;
              for (std::size_t j = 0; j < atoms.size(); ++j) {
                if (j == drop) continue;
                w.push_back(atoms[j].prob);
                v.push_back(atoms[j].value);
              }
              w = renormalized(std::move(w));
              std::vector<MatrixDistribution::Atom> kept;
              for (std::size_t j = 0; j < w.size(); ++j) kept.push_back({w[j], v[j]});
              out.push_back(MeanValueInstance{i.a, MatrixDistribution(std::move(kept)), i.p});
            }
            if (d > d_floor) {
              std::vector<MatrixDistribution::Atom> cut;
              for (const auto& a : atoms) cut.push_back({a.prob, leading_block(a.value, d - 1)});
              out.push_back(MeanValueInstance{leading_block(i.a, d - 1), MatrixDistribution(std::move(cut)), i.p});
            }
            std::vector<MatrixDistribution::Atom> half;
            for (const auto& a : atoms) half.push_back({a.prob, a.value * 0.5});
            out.push_back(MeanValueInstance{i.a * 0.5, MatrixDistribution(std::move(half)), i.p});
          },
          [&](const ContractionInstance& i) {
            for (std::size_t drop = 0; i.joint.size() > 1 && drop < i.joint.size(); ++drop) {
              std::vector<double> w;
              std::vector<JointAtom> kept;
              for (std::size_t j = 0; j < i.joint.size(); ++j) {
                if (j == drop) continue;
                w.push_back(i.joint[j].prob);
                kept.push_back(i.joint[j]);
              }
              w = renormalized(std::move(w));
              for (std::size_t j = 0; j < w.size(); ++j) kept[j].prob = w[j];
              out.push_back(ContractionInstance{std::move(kept), i.p});
            }
            if (d > d_floor) {
              std::vector<JointAtom> cut;
              for (const auto& a : i.joint) cut.push_back({a.prob, leading_block(a.k, d - 1), leading_block(a.z, d - 1)});
              out.push_back(ContractionInstance{std::move(cut), i.p});
            }
            std::vector<JointAtom> half;
            for (const auto& a : i.joint) half.push_back({a.prob, a.k * 0.5, a.z * 0.5});
            out.push_back(ContractionInstance{std::move(half), i.p});
          },
          [&](const ConvexityInstance& i) {
            if (d > d_floor) {
              out.push_back(ConvexityInstance{leading_block(i.a, d - 1), leading_block(i.b, d - 1), i.gamma, i.p});
            }
            out.push_back(ConvexityInstance{i.a * 0.5, i.b * 0.5, i.gamma, i.p});
          },
          [&](const DirichletLaplaceInstance& i) {
            if (d > d_floor) {
              std::vector<HermitianMatrix> cut;
              for (const auto& v : i.g.values()) cut.push_back(leading_block(v, d - 1));
              out.push_back(DirichletLaplaceInstance{i.q, i.mu, MatrixFunction(std::move(cut)), i.p});
            }
            out.push_back(DirichletLaplaceInstance{i.q, i.mu, i.g.scaled(0.5), i.p});
          }},
      inst);
  return out;
}

double normalized(const CheckResult& r) { return r.margin / (1.0 + r.scale); }

// margin / scale; the shrinker compares candidates on this so that halving
// norms does not by itself look like progress toward a pass.
double relative(const CheckResult& r) { return r.scale > 0.0 ? r.margin / r.scale : r.margin; }

bool violates(const CheckResult& r) { return !r.pass; }

}  // namespace

ShrinkResult shrink_instance(const FuzzInstance& inst, Tolerance tol, bool inject_bug, int d_floor) {
  ShrinkResult cur{inst, evaluate_instance(inst, tol, inject_bug), 0};
  if (!violates(cur.result)) return cur;
  const double bound = relative(cur.result) + 1e-12;
  for (int guard = 0; guard < 500; ++guard) {
    bool moved = false;
    for (auto& cand : shrink_candidates(cur.instance, d_floor)) {
      CheckResult r = evaluate_instance(cand, tol, inject_bug);
      if (violates(r) && relative(r) <= bound) {
        cur.instance = std::move(cand);
        cur.result = std::move(r);
        ++cur.steps;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return cur;
}

FuzzConfig FuzzConfig::defaults() {
  FuzzConfig c;
  for (Inequality i : all_inequalities()) c.inequalities.emplace_back(to_string(i));
  return c;
}

std::vector<FuzzReport> fuzz_campaign(const FuzzConfig& config, std::uint64_t master_seed, int threads) {
  if (config.trials < 0) throw ValidationError("trials must be >= 0");
  std::vector<Inequality> ids;
  for (const auto& name : config.inequalities) ids.push_back(parse_inequality(name));
  std::vector<FuzzReport> reports;
  for (Inequality id : ids) {
    const auto stream = static_cast<std::uint64_t>(id) + 1;
    const auto n = static_cast<std::size_t>(config.trials);
    std::vector<CheckResult> results(n);
    parallel_for(n, threads, [&](std::size_t t) {
      const FuzzInstance inst = generate_instance(id, derive_seed(master_seed, stream, t), config.d_lo, config.d_hi);
      results[t] = evaluate_instance(inst, config.tol, config.inject_bug);
    });
    FuzzReport rep;
    rep.inequality = to_string(id);
    rep.trials = config.trials;
    rep.worst_margin = n ? std::numeric_limits<double>::infinity() : 0.0;
    rep.worst_normalized_margin = rep.worst_margin;
    for (std::size_t t = 0; t < n; ++t) {
      rep.worst_margin = std::min(rep.worst_margin, results[t].margin);
      rep.worst_normalized_margin = std::min(rep.worst_normalized_margin, normalized(results[t]));
      if (!violates(results[t])) continue;
      const std::uint64_t seed = derive_seed(master_seed, stream, t);
      const FuzzInstance inst = generate_instance(id, seed, config.d_lo, config.d_hi);
      const ShrinkResult sr = shrink_instance(inst, config.tol, config.inject_bug, std::max(1, config.d_lo));
      FuzzViolation v;
      v.trial = static_cast<int>(t);
      v.seed = seed;
      v.margin = results[t].margin;
      v.scale = results[t].scale;
      v.original = instance_to_json(inst);
      v.shrunk = instance_to_json(sr.instance);
      v.shrunk_margin = sr.result.margin;
      v.shrunk_scale = sr.result.scale;
      v.shrunk_d = instance_dim(sr.instance);
      v.shrunk_atoms = instance_atoms(sr.instance);
      v.shrink_steps = sr.steps;
      rep.violations.push_back(std::move(v));
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

nlohmann::json instance_to_json(const FuzzInstance& inst) {
  return std::visit(
      Overloaded{
          [](const MeanValueInstance& i) {
            nlohmann::json atoms = nlohmann::json::array();
            for (const auto& a : i.b.atoms()) atoms.push_back({{"prob", a.prob}, {"B", matrix_to_json(a.value)}});
            return nlohmann::json{{"A", matrix_to_json(i.a)}, {"atoms", atoms}, {"p", i.p}};
          },
          [](const ContractionInstance& i) {
            nlohmann::json atoms = nlohmann::json::array();
            for (const auto& a : i.joint) {
              atoms.push_back({{"prob", a.prob}, {"K", matrix_to_json(a.k)}, {"Z", matrix_to_json(a.z)}});
            }
            return nlohmann::json{{"atoms", atoms}, {"p", i.p}};
          },
          [](const ConvexityInstance& i) {
            return nlohmann::json{{"A", matrix_to_json(i.a)}, {"B", matrix_to_json(i.b)},
                                  {"gamma", i.gamma}, {"p", i.p}};
          },
          [](const DirichletLaplaceInstance& i) {
            nlohmann::json j = chain_to_json(i.q, i.mu, i.g);
            j["p"] = i.p;
            return j;
          }},
      inst);
}

}  // namespace matconc

#include <benchmark/benchmark.h>

#include "matconc/concentration.hpp"
#include "matconc/scp.hpp"
#include "matconc/traceineq.hpp"

using namespace matconc;

static void BM_MatExp(benchmark::State& state) {
  const HermitianMatrix a = random_hermitian(static_cast<int>(state.range(0)), 1.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mat_exp(a));
}
BENCHMARK(BM_MatExp)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

static void BM_SemigroupApply(benchmark::State& state) {
  Rng rng(2);
  const auto chain = random_reversible_chain(static_cast<int>(state.range(0)), rng);
  const auto f = random_matrix_function(chain.mu.size(), 3, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(semigroup_apply(chain.q, chain.mu, 0.7, f));
}
BENCHMARK(BM_SemigroupApply)->Arg(4)->Arg(16)->Arg(64);

static void BM_PoincareCheck(benchmark::State& state) {
  Rng rng(3);
  const auto chain = random_reversible_chain(static_cast<int>(state.range(0)), rng);
  const auto f = random_matrix_function(chain.mu.size(), 3, 1.0, rng);
  for (auto _ : state) {
    const double alpha = spectral_gap(chain.q, chain.mu).alpha;
    benchmark::DoNotOptimize(poincare_check(chain.q, chain.mu, f, alpha));
  }
}
BENCHMARK(BM_PoincareCheck)->Arg(4)->Arg(16)->Arg(64);

static void BM_ScpGenerator(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mu = builtin_measure(MeasureFamily::uniform_k_subsets, n, n / 2);
  for (auto _ : state) benchmark::DoNotOptimize(scp_generator(mu));
}
BENCHMARK(BM_ScpGenerator)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_McTail(benchmark::State& state) {
  const TailSampler sampler = [](Rng& rng) { return rng.normal(); };
  const auto grid = linear_grid(3.0, 100);
  for (auto _ : state) benchmark::DoNotOptimize(mc_tail(sampler, grid, state.range(0), 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McTail)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

static void BM_FuzzTrial(benchmark::State& state) {
  const auto id = static_cast<Inequality>(state.range(0));
  std::uint64_t s = 0;
  for (auto _ : state) {
    const auto inst = generate_instance(id, s++, 2, 3);
    benchmark::DoNotOptimize(evaluate_instance(inst, Tolerance{1e-8, 1e-8}, false));
  }
  state.SetLabel(to_string(id));
}
BENCHMARK(BM_FuzzTrial)->DenseRange(0, 3);
BENCHMARK_MAIN();

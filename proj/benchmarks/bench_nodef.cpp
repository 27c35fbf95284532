#include <benchmark/benchmark.h>

#include <random>

#include "nodef/data.hpp"
#include "nodef/kernel.hpp"
#include "nodef/model.hpp"
#include "nodef/trainer.hpp"

using namespace nodef;

namespace {

Dataset random_data(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = g(rng);
    const double e = 0.2 + 0.8 * u(rng);
    if (u(rng) < 0.4) {
      s.push_back(Sample::observed(std::move(x), e * u(rng), e));
    } else {
      s.push_back(Sample::unobserved(std::move(x), e));
    }
  }
  return Dataset(dim, std::move(s));
}

void BM_QObjective(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto L = static_cast<std::size_t>(state.range(1));
  const Dataset data = random_data(n, 20);
  const NoDeFProblem problem(data, make_grid(L, 1.0));
  const NoDeFParams p = NoDeFParams::zeros(20, L);
  const Posteriors post = problem.e_step(p);
  for (auto _ : state) benchmark::DoNotOptimize(problem.q_objective(p, post, 0.01, 0.01));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QObjective)->Args({1000, 10})->Args({1000, 40})->Args({10000, 40});

void BM_DelayGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t L = 40;
  const Dataset data = random_data(n, 20);
  const NoDeFProblem problem(data, make_grid(L, 1.0));
  const NoDeFParams p = NoDeFParams::zeros(20, L);
  const Posteriors post = problem.e_step(p);
  Matrix g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(problem.delay_objective(p.V, post, 0.01, &g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DelayGradient)->Arg(1000)->Arg(10000);

void BM_FitSynthetic(benchmark::State& state) {
  const Dataset raw = generate_synthetic(1, SyntheticMode::consistent);
  TrainOptions opts;
  opts.config.L = static_cast<std::size_t>(state.range(0));
  opts.prep.time_kind = TimeTransformKind::identity;
  for (auto _ : state) benchmark::DoNotOptimize(train_model(raw, ModelKind::nodef, opts));
}
BENCHMARK(BM_FitSynthetic)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

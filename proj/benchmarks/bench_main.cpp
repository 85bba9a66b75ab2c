#include <benchmark/benchmark.h>

#include <random>

#include "collabviz/eval.hpp"
#include "collabviz/kendall.hpp"
#include "collabviz/rating_function.hpp"
#include "collabviz/sampler.hpp"

using namespace collabviz;

namespace {

std::vector<DistanceRating> random_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 4.0);
  std::uniform_int_distribution<int> level(0, 4);
  std::vector<DistanceRating> pairs(n);
  for (auto& p : pairs) {
    p.distance = d(rng);
    p.rating = 0.25 * level(rng);
  }
  return pairs;
}

void BM_FitRatingFunction(benchmark::State& state) {
  const auto pairs = random_pairs(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_rating_function(pairs, 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitRatingFunction)->RangeMultiplier(4)->Range(1 << 10, 1 << 22)->Complexity();

void BM_KendallTau(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> level(0, 4);
  std::normal_distribution<double> g;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = level(rng);
    y[i] = g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(8)->Range(1 << 6, 1 << 20)->Complexity();

void BM_MhStep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.users = static_cast<std::size_t>(state.range(0));
  spec.items = spec.users / 3;
  const auto data = generate_synthetic(spec);
  SamplerConfig c;
  c.sigma_r = 0.1;
  Rng rng = make_rng(3, 0);
  Embedding emb = data.planted;
  const RatingFunction& f = data.rating_function;
  for (auto _ : state) benchmark::DoNotOptimize(mh_step(emb, data.matrix, f, c, 1.0, rng));
}
BENCHMARK(BM_MhStep)->Arg(60)->Arg(600);

void BM_EmIteration(benchmark::State& state) {
  SyntheticSpec spec;
  spec.noise_sd = 0.1;
  const auto data = generate_synthetic(spec);
  SamplerConfig c;
  c.sigma_r = 0.1;
  c.max_em_iters = 1;
  c.budget_secs = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(run_em(data.matrix, c));
}
BENCHMARK(BM_EmIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

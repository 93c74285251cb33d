#include <benchmark/benchmark.h>

#include <array>
#include <random>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/perturb.hpp"
#include "causal_probe/prompt_pack.hpp"
#include "causal_probe/scoring.hpp"

namespace cp = causal_probe;

namespace {

cp::LabelDistribution random_dist(std::mt19937_64& gen) {
  std::exponential_distribution<double> e(1.0);
  std::array<double, cp::kNumLabels> w{};
  double s = 0.0;
  for (auto& x : w) s += (x = e(gen));
  for (auto& x : w) x /= s;
  return cp::validate_distribution(w);
}

std::vector<cp::LabelDistribution> random_dists(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<cp::LabelDistribution> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_dist(gen));
  return out;
}

void BM_ScoreLabels(benchmark::State& state) {
  const auto map = cp::SurfaceFormMap::defaults();
  const std::vector<cp::TokenLogprob> topk = {{" 4", -0.3}, {" 5", -1.6}, {"4", -2.2}, {" four", -3.0},
                                              {" 3", -3.4}, {" the", -4.1}, {"\n", -5.0}, {" 2", -6.2}};
  for (auto _ : state) benchmark::DoNotOptimize(cp::score_labels(topk, map));
}
BENCHMARK(BM_ScoreLabels);

void BM_LearnLambda(benchmark::State& state) {
  const auto raws = random_dists(static_cast<std::size_t>(state.range(0)), 7);
  const std::vector<cp::RatingLabel> golds;
  for (auto _ : state) benchmark::DoNotOptimize(cp::learn_lambda(raws, golds, cp::LabelDistribution::uniform()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LearnLambda)->Arg(100)->Arg(1000);

void BM_SampleDiversity(benchmark::State& state) {
  const auto dists = random_dists(static_cast<std::size_t>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(cp::sample_diversity(dists));
}
BENCHMARK(BM_SampleDiversity)->Arg(3)->Arg(6);

void BM_PromptMetrics(benchmark::State& state) {
  const auto dists = random_dists(10000, 13);
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> lab(1, 5);
  std::vector<cp::RatingLabel> golds;
  for (std::size_t i = 0; i < dists.size(); ++i) golds.emplace_back(lab(gen));
  for (auto _ : state) benchmark::DoNotOptimize(cp::prompt_metrics(dists, golds));
}
BENCHMARK(BM_PromptMetrics);

void BM_Partition(benchmark::State& state) {
  const std::size_t n = 10000;
  std::mt19937 gen(17);
  std::uniform_int_distribution<int> lab(1, 5);
  cp::AlignedPredictions aligned;
  aligned.argmaxes.resize(3);
  for (std::size_t i = 0; i < n; ++i) {
    aligned.ids.push_back("s" + std::to_string(1000000 + i));
    aligned.golds.emplace_back(lab(gen));
    for (auto& a : aligned.argmaxes) a.emplace_back(lab(gen));
  }
  for (auto _ : state) benchmark::DoNotOptimize(cp::partition(aligned));
}
BENCHMARK(BM_Partition);

void BM_PerturbSwap(benchmark::State& state) {
  const auto pack = cp::builtin_pack(cp::kBuiltinYelpPack);
  const cp::PerturbationSpec spec{cp::PerturbationOp::RandomSwap, 0.1, 3, 10};
  for (auto _ : state) benchmark::DoNotOptimize(cp::perturb_prompt(pack.prompts[3], spec));
}
BENCHMARK(BM_PerturbSwap);

}  // namespace

BENCHMARK_MAIN();

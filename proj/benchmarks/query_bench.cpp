#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nqr/query.hpp"
#include "nqr/synth.hpp"

namespace {

const nqr::KnowledgeGraph& graph() {
  static const nqr::KnowledgeGraph kg = [] {
    nqr::SynthConfig cfg;
    cfg.train_queries = 1;
    cfg.valid_per_structure = 0;
    cfg.test_per_structure = 0;
    cfg.seed = 2;
    return nqr::synthesize_benchmark(cfg).graph;
  }();
  return kg;
}

void BM_EvaluateQuery(benchmark::State& state) {
  const auto structure = nqr::kAllStructures[static_cast<std::size_t>(state.range(0))];
  const auto& kg = graph();
  nqr::QuerySampler sampler(kg);
  std::mt19937_64 rng(9);
  std::vector<nqr::QueryGraph> queries;
  while (queries.size() < 32) {
    if (auto q = sampler.sample(structure, rng)) queries.push_back(std::move(*q));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    auto answers = nqr::evaluate_query(kg, queries[i++ % queries.size()]);
    benchmark::DoNotOptimize(answers.data());
  }
  state.SetLabel(std::string(nqr::to_string(structure)));
}
BENCHMARK(BM_EvaluateQuery)->DenseRange(0, 13);

}  // namespace

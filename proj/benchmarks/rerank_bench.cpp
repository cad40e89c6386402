#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nqr/cosine.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/model.hpp"

namespace {

struct Fixture {
  nqr::EmbeddingTable table;
  std::vector<double> base;
  nqr::PreferenceSet prefs;
};

Fixture make_fixture(std::size_t entities, std::size_t t, std::size_t dim = 64) {
  nqr::SynthEmbeddingOptions eo;
  eo.dim = dim;
  eo.seed = 3;
  Fixture f{nqr::synthesize_embeddings(entities, eo).table, {}, {}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  f.base.resize(entities);
  for (auto& b : f.base) b = u(rng);
  for (std::size_t i = 0; i < t; ++i) {
    f.prefs.pairs.push_back({static_cast<nqr::EntityId>(i * 7 % entities), static_cast<std::uint8_t>(i % 2 == 0)});
  }
  return f;
}

void BM_NqrRerank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  const auto f = make_fixture(n, t);
  const auto params = nqr::NqrParameters::initialize(f.table.dim(), 1);
  for (auto _ : state) {
    auto out = nqr::rerank(params, f.base, f.prefs, f.table);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_NqrRerank)
    ->ArgsProduct({{1000, 10000, 100000}, {1, 10}})
    ->Unit(benchmark::kMillisecond);

// Serving path: entity projections are cached when the reranker is built.
void BM_NqrRerankerCached(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  auto f = make_fixture(n, t);
  auto table = std::make_shared<const nqr::EmbeddingTable>(std::move(f.table));
  const nqr::NqrReranker rr(nqr::NqrModel{nqr::NqrParameters::initialize(table->dim(), 1), 0, 0}, table);
  for (auto _ : state) {
    auto out = rr.rerank(f.base, f.prefs);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_NqrRerankerCached)
    ->ArgsProduct({{1000, 10000, 100000}, {1, 10}})
    ->Unit(benchmark::kMillisecond);

void BM_CosineRerank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  const auto f = make_fixture(n, t);
  for (auto _ : state) {
    auto out = nqr::cosine_rerank(f.base, f.prefs, f.table, {0.5, 0.5});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_CosineRerank)
    ->ArgsProduct({{1000, 10000, 100000}, {1, 10}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

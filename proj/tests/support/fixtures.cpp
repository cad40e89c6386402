#include "fixtures.hpp"

#include "nqr/prefgen.hpp"

namespace nqr::testing {

TinyWorld tiny_world(std::uint64_t seed, std::size_t num_entities) {
  SynthConfig cfg;
  cfg.num_entities = num_entities;
  cfg.community_size = num_entities / 2;
  cfg.dim = 8;
  cfg.num_clusters = 4;
  cfg.train_queries = 50;
  cfg.valid_per_structure = 1;
  cfg.test_per_structure = 1;
  cfg.seed = seed;
  TinyWorld w;
  w.synth = synthesize_benchmark(cfg);
  BenchmarkOptions opts;
  opts.seed = seed;
  w.dataset = generate_benchmark(w.synth.graph, &w.synth.train_graph, w.synth.queries, w.synth.text, opts).dataset;
  w.qa = std::make_shared<const EmbeddingTable>(w.synth.qa);
  return w;
}

}  // namespace nqr::testing

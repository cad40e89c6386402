#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nqr/dataset.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/kg.hpp"
#include "nqr/scores.hpp"

namespace nqr {

// Desk-scale stand-in for a real benchmark: a random graph whose entities
// carry latent cluster labels, two embedding tables over those clusters,
// sampled queries and noisy base scores.
struct SynthConfig {
  std::size_t num_entities = 2000;
  std::size_t num_relations = 12;
  std::size_t num_clusters = 5;
  std::size_t dim = 64;
  // Entities are grouped into communities; edges stay inside a community
  // so multi-hop answer sets keep a moderate size.
  std::size_t community_size = 100;
  double edge_probability = 0.15;  // chance a (head, relation) pair has tails
  std::size_t min_fanout = 12;
  std::size_t max_fanout = 40;
  double holdout_fraction = 0.1;   // triples missing from the training graph
  double text_spread = 0.15;       // noise of the clustering table
  double qa_spread = 0.35;         // noise of the reranker table
  std::size_t train_queries = 200; // 1p only
  std::size_t valid_per_structure = 4;
  std::size_t test_per_structure = 15;
  std::size_t min_answers = 10;
  std::size_t max_answers = 100;
  SyntheticScoreOptions scores{1.0, 0.0, 0.35, 0};
  bool normalize_scores = true;
  std::uint64_t seed = 0;
};

struct SynthBenchmark {
  KnowledgeGraph graph;
  KnowledgeGraph train_graph;
  EmbeddingTable text;  // drives clustering / preference generation
  EmbeddingTable qa;    // fed to the rerankers
  std::vector<std::uint32_t> clusters;
  std::vector<QueryInstance> queries;  // answers filled, no preference sets
  ScoreMatrix scores;
};

SynthBenchmark synthesize_benchmark(const SynthConfig& cfg);

}  // namespace nqr

#include "nqr/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "nqr/error.hpp"
#include "nqr/random.hpp"

namespace nqr {

namespace {

std::vector<Triple> random_triples(const SynthConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = cfg.num_entities;
  std::vector<EntityId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> community(n);
  for (std::size_t i = 0; i < n; ++i) community[perm[i]] = i / cfg.community_size;
  const std::size_t num_comm = (n + cfg.community_size - 1) / cfg.community_size;
  std::vector<std::vector<EntityId>> members(num_comm);
  for (std::size_t i = 0; i < n; ++i) members[i / cfg.community_size].push_back(perm[i]);

  std::bernoulli_distribution has_edges(cfg.edge_probability);
  std::uniform_int_distribution<std::size_t> fanout(cfg.min_fanout, cfg.max_fanout);
  std::vector<Triple> triples;
  for (EntityId h = 0; h < n; ++h) {
    const auto& pool = members[community[h]];
    for (RelationId r = 0; r < cfg.num_relations; ++r) {
      if (!has_edges(rng)) continue;
      const std::size_t k = std::min(fanout(rng), pool.size());
      std::vector<EntityId> tails;
      std::sample(pool.begin(), pool.end(), std::back_inserter(tails), k, rng);
      for (EntityId t : tails) triples.push_back({h, r, t});
    }
  }
  return triples;
}

}  // namespace

SynthBenchmark synthesize_benchmark(const SynthConfig& cfg) {
  if (cfg.num_entities < 2 || cfg.num_relations == 0 || cfg.community_size == 0) {
    fail(ErrorCode::kInvalidArgument, "synthetic graph needs entities, relations and communities");
  }
  if (cfg.min_fanout > cfg.max_fanout) fail(ErrorCode::kInvalidArgument, "min_fanout > max_fanout");
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  SynthBenchmark b;

  auto triples = random_triples(cfg, rng);
  std::vector<Triple> train_triples;
  std::bernoulli_distribution held_out(cfg.holdout_fraction);
  for (const auto& t : triples) {
    if (!held_out(rng)) train_triples.push_back(t);
  }
  b.graph = KnowledgeGraph::from_triples(cfg.num_entities, cfg.num_relations, triples);
  b.train_graph = KnowledgeGraph::from_triples(cfg.num_entities, cfg.num_relations, train_triples);

  SynthEmbeddingOptions eo;
  eo.n_clusters = cfg.num_clusters;
  eo.dim = cfg.dim;
  eo.spread = cfg.text_spread;
  eo.seed = derive_seed(cfg.seed, 1);
  auto text = synthesize_embeddings(cfg.num_entities, eo);
  b.clusters = text.assignment;
  b.text = std::move(text.table);
  eo.spread = cfg.qa_spread;
  eo.seed = derive_seed(cfg.seed, 2);
  eo.assignment = b.clusters;
  b.qa = synthesize_embeddings(cfg.num_entities, eo).table;

  QuerySampler sampler(b.graph);
  QueryId next_id = 0;
  auto collect = [&](QueryStructure s, Split split, std::size_t quota) {
    std::size_t kept = 0;
    const std::size_t max_attempts = quota * 200 + 200;
    for (std::size_t attempt = 0; attempt < max_attempts && kept < quota; ++attempt) {
      auto q = sampler.sample(s, rng);
      if (!q) continue;
      auto answers = answer_query(b.graph, &b.train_graph, *q);
      if (answers.answers.size() < cfg.min_answers || answers.answers.size() > cfg.max_answers) continue;
      QueryInstance inst;
      inst.id = next_id++;
      inst.split = split;
      inst.query = std::move(*q);
      inst.answers = std::move(answers);
      b.queries.push_back(std::move(inst));
      ++kept;
    }
  };
  collect(QueryStructure::k1p, Split::kTrain, cfg.train_queries);
  for (auto s : kAllStructures) collect(s, Split::kValid, cfg.valid_per_structure);
  for (auto s : kAllStructures) collect(s, Split::kTest, cfg.test_per_structure);

  b.scores = ScoreMatrix(cfg.num_entities, {}, {});
  for (const auto& q : b.queries) {
    SyntheticScoreOptions so = cfg.scores;
    so.seed = derive_seed(cfg.scores.seed ^ cfg.seed, q.id + 3);
    auto row = synthetic_scores(cfg.num_entities, q.answers.answers, so);
    if (cfg.normalize_scores) minmax_normalize(row);
    b.scores.append(q.id, row);
  }
  return b;
}

}  // namespace nqr

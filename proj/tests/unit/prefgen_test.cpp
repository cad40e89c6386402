#include <gtest/gtest.h>

#include <random>
#include <set>

#include "nqr/error.hpp"
#include "nqr/prefgen.hpp"
#include "nqr/query.hpp"
#include "nqr/synth.hpp"
#include "oracles.hpp"

namespace nqr {
namespace {

std::vector<std::vector<double>> random_vectors(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::vector<std::vector<double>> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(testing::random_vector(d, rng));
  return v;
}

TEST(Hac, IdenticalPairMergesFirst) {
  const std::vector<std::vector<double>> v{{1, 0}, {0.3, 1}, {1, 0}};
  const auto d = hac_average_linkage(v);
  EXPECT_EQ(d.merges[0].left, 0u);
  EXPECT_EQ(d.merges[0].right, 2u);
  EXPECT_DOUBLE_EQ(d.merges[0].distance, 0.0);
  EXPECT_EQ(d.root(), 4u);
}

TEST(Hac, TwoVectors) {
  const std::vector<std::vector<double>> v{{1, 0}, {1, 1}};
  const auto d = hac_average_linkage(v);
  ASSERT_EQ(d.merges.size(), 1u);
  EXPECT_NEAR(d.merges[0].distance, 1.0 - 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(d.merges[0].size, 2u);
}

TEST(Hac, RejectsZeroVectorAndTooFew) {
  EXPECT_THROW(hac_average_linkage({{1, 0}, {0, 0}}), Error);
  EXPECT_THROW(hac_average_linkage({{1, 0}}), Error);
  EXPECT_THROW(hac_average_linkage({{1, 0}, {1, 0, 0}}), Error);
}

TEST(Hac, MatchesNaiveOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 11;
    const auto v = random_vectors(n, 3, rng);
    const auto got = hac_average_linkage(v);
    const auto want = testing::naive_hac(v);
    ASSERT_EQ(got.merges.size(), want.merges.size());
    for (std::size_t k = 0; k < got.merges.size(); ++k) {
      EXPECT_EQ(got.merges[k].left, want.merges[k].left);
      EXPECT_EQ(got.merges[k].right, want.merges[k].right);
      EXPECT_NEAR(got.merges[k].distance, want.merges[k].distance, 1e-9);
    }
  }
}

TEST(Hac, ClusterAnswersIgnoresListingOrder) {
  const auto t = synthesize_embeddings(30, {3, 8, 0.3, 5, {}}).table;
  std::vector<EntityId> a{3, 9, 1, 20, 14, 7};
  std::vector<EntityId> b{20, 1, 14, 3, 7, 9};
  const auto da = cluster_answers(t, a);
  const auto db = cluster_answers(t, b);
  EXPECT_EQ(da.leaves, db.leaves);
  for (std::size_t k = 0; k < da.merges.size(); ++k) {
    EXPECT_EQ(da.merges[k].left, db.merges[k].left);
    EXPECT_EQ(da.merges[k].distance, db.merges[k].distance);
  }
  std::vector<EntityId> dup{1, 1, 2};
  EXPECT_THROW(cluster_answers(t, dup), Error);
}

TEST(Dendrogram, MembersAndCheck) {
  const std::vector<std::vector<double>> v{{1, 0}, {0.3, 1}, {1, 0}};
  auto d = hac_average_linkage(v);
  EXPECT_EQ(d.members(3), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(d.members(4), (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_THROW(d.members(9), Error);
  d.merges[1].distance = -1.0;
  EXPECT_THROW(check_dendrogram(d), Error);
}

// Ten answers: 0..4 along x, 5..9 along y with one outlier pulled apart.
std::vector<std::vector<double>> two_blocks() {
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 5; ++i) v.push_back({1.0, 0.01 * i, 0.0});
  for (int i = 0; i < 4; ++i) v.push_back({0.01 * i, 1.0, 0.0});
  v.push_back({0.0, 0.6, 0.8});
  return v;
}

TEST(Partition, CleanClusterGivesFiveAndFive) {
  const auto d = hac_average_linkage(two_blocks());
  std::vector<EntityId> answers(10);
  for (EntityId i = 0; i < 10; ++i) answers[i] = i;
  const auto sets = partition_answers(d, answers);
  ASSERT_FALSE(sets.empty());
  bool found = false;
  for (const auto& s : sets) {
    EXPECT_EQ(s.size(), 10u);
    if (s.positives() == std::vector<EntityId>{0, 1, 2, 3, 4}) {
      found = true;
      EXPECT_EQ(s.negatives().size(), 5u);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Partition, SingletonBelowThresholdIsNotEmitted) {
  const auto d = hac_average_linkage(two_blocks());
  std::vector<EntityId> answers(10);
  for (EntityId i = 0; i < 10; ++i) answers[i] = i;
  for (const auto& s : partition_answers(d, answers, 0.2, 100)) {
    EXPECT_GE(s.positives().size(), 2u);
    EXPECT_LT(s.positives().size(), 10u);
  }
}

TEST(Partition, MaxSetsAndNoDuplicates) {
  std::mt19937_64 rng(2);
  const auto d = hac_average_linkage(random_vectors(30, 4, rng));
  std::vector<EntityId> answers(30);
  for (EntityId i = 0; i < 30; ++i) answers[i] = 100 + i;
  auto dd = d;
  dd.leaves = answers;
  const auto sets = partition_answers(dd, answers, 0.2, 3);
  EXPECT_LE(sets.size(), 3u);
  std::set<std::vector<EntityId>> seen;
  for (const auto& s : sets) {
    EXPECT_TRUE(seen.insert(s.positives()).second);
    EXPECT_GE(s.positives().size(), 6u);
    EXPECT_NO_THROW(validate(s));
  }
}

TEST(Partition, MismatchedAnswersThrow) {
  const auto d = hac_average_linkage(two_blocks());
  std::vector<EntityId> wrong{0, 1, 2};
  EXPECT_THROW(partition_answers(d, wrong), Error);
  std::vector<EntityId> answers(10);
  for (EntityId i = 0; i < 10; ++i) answers[i] = i;
  EXPECT_THROW(partition_answers(d, answers, 1.5), Error);
}

TEST(Partition, PositivesAreUnionsOfPlantedClusters) {
  // ten clusters of ten: no single cluster reaches the 20% threshold on its own
  // unless all of it is present, so every emitted node spans whole clusters
  const auto s = synthesize_embeddings(100, {10, 16, 0.02, 8, {}});
  std::mt19937_64 rng(8);
  std::size_t emitted = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EntityId> answers;
    for (EntityId e = 0; e < 100; ++e) {
      if (std::bernoulli_distribution(0.5)(rng)) answers.push_back(e);
    }
    const auto d = cluster_answers(s.table, answers);
    for (const auto& set : partition_answers(d, answers, 0.2, 5)) {
      std::set<std::uint32_t> clusters;
      for (auto e : set.positives()) clusters.insert(s.assignment[e]);
      for (auto e : set.negatives()) EXPECT_FALSE(clusters.contains(s.assignment[e]));
      ++emitted;
    }
  }
  EXPECT_GE(emitted, 80u);
}

TEST(GenerateBenchmark, FiltersAndIsDeterministic) {
  SynthConfig cfg;
  cfg.num_entities = 400;
  cfg.community_size = 80;
  cfg.train_queries = 20;
  cfg.valid_per_structure = 1;
  cfg.test_per_structure = 2;
  cfg.seed = 4;
  const auto world = synthesize_benchmark(cfg);
  BenchmarkOptions opts;
  opts.seed = 4;
  const auto a = generate_benchmark(world.graph, &world.train_graph, world.queries, world.text, opts);
  const auto b = generate_benchmark(world.graph, &world.train_graph, world.queries, world.text, opts);
  ASSERT_EQ(a.dataset.instances.size(), b.dataset.instances.size());
  for (std::size_t i = 0; i < a.dataset.instances.size(); ++i) {
    EXPECT_EQ(a.dataset.instances[i].preference_sets, b.dataset.instances[i].preference_sets);
  }
  EXPECT_EQ(a.stats.kept, a.dataset.instances.size());
  EXPECT_EQ(a.stats.considered, world.queries.size());
  for (const auto& q : a.dataset.instances) {
    EXPECT_GE(q.answers.answers.size(), 10u);
    EXPECT_LE(q.answers.answers.size(), 100u);
    EXPECT_EQ(q.preference_sets.size(), 5u);
    if (q.split == Split::kTrain) EXPECT_EQ(q.query.structure, QueryStructure::k1p);
  }
  const auto counts = count_dataset(a.dataset);
  std::size_t sets = 0;
  for (const auto& row : counts.preference_sets) {
    for (auto v : row) sets += v;
  }
  EXPECT_EQ(sets, 5 * a.stats.kept);
  EXPECT_NE(format_stats(counts).find("Preferences"), std::string::npos);
}

TEST(GenerateBenchmark, SmallAnswerSetSkipped) {
  std::vector<Triple> t;
  for (EntityId e = 1; e <= 7; ++e) t.push_back({0, 0, e});
  const auto kg = KnowledgeGraph::from_triples(8, 1, t);
  const auto table = synthesize_embeddings(8, {2, 4, 0.2, 1, {}}).table;
  QueryInstance q;
  q.split = Split::kTest;
  q.query = make_query(QueryStructure::k1p, std::vector<EntityId>{0}, std::vector<RelationId>{0});
  const auto r = generate_benchmark(kg, nullptr, {q}, table, {});
  EXPECT_TRUE(r.dataset.instances.empty());
  EXPECT_EQ(r.stats.too_few_answers, 1u);
}

}  // namespace
}  // namespace nqr

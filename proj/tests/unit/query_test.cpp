#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"
#include "nqr/query.hpp"
#include "oracles.hpp"

namespace nqr {
namespace {

// a=0 b=1 c=2 d=3; r=0 s=1
TEST(EvaluateQuery, TwoHopPath) {
  const auto kg = KnowledgeGraph::from_triples(3, 2, {{0, 0, 1}, {1, 1, 2}});
  const std::vector<EntityId> anchors{0};
  const std::vector<RelationId> rels{0, 1};
  EXPECT_EQ(evaluate_query(kg, make_query(QueryStructure::k2p, anchors, rels)), (std::vector<EntityId>{2}));
}

TEST(EvaluateQuery, NegationExcludes) {
  const auto kg = KnowledgeGraph::from_triples(4, 2, {{0, 0, 1}, {0, 0, 2}, {3, 1, 2}});
  const std::vector<EntityId> anchors{0, 3};
  const std::vector<RelationId> rels{0, 1};
  EXPECT_EQ(evaluate_query(kg, make_query(QueryStructure::k2in, anchors, rels)), (std::vector<EntityId>{1}));
}

TEST(EvaluateQuery, OneHopEqualsIndex) {
  std::mt19937_64 rng(5);
  const auto kg = testing::random_graph(30, 3, 150, rng);
  for (EntityId h = 0; h < 30; ++h) {
    for (RelationId r = 0; r < 3; ++r) {
      const std::vector<EntityId> a{h};
      const std::vector<RelationId> rr{r};
      const auto got = evaluate_query(kg, make_query(QueryStructure::k1p, a, rr));
      const auto want = kg.tails(h, r);
      EXPECT_EQ(got, std::vector<EntityId>(want.begin(), want.end()));
    }
  }
}

TEST(EvaluateQuery, UnionAndUnionPath) {
  const auto kg = KnowledgeGraph::from_triples(6, 2, {{0, 0, 2}, {1, 0, 3}, {2, 1, 4}, {3, 1, 5}});
  const std::vector<EntityId> anchors{0, 1};
  EXPECT_EQ(evaluate_query(kg, make_query(QueryStructure::k2u, anchors, std::vector<RelationId>{0, 0})),
            (std::vector<EntityId>{2, 3}));
  EXPECT_EQ(evaluate_query(kg, make_query(QueryStructure::kUp, anchors, std::vector<RelationId>{0, 0, 1})),
            (std::vector<EntityId>{4, 5}));
}

TEST(EvaluateQuery, MatchesBruteForceOnAllStructures) {
  std::mt19937_64 rng(17);
  for (int g = 0; g < 20; ++g) {
    const auto kg = testing::random_graph(12, 2, 40, rng);
    for (auto s : kAllStructures) {
      for (int k = 0; k < 3; ++k) {
        const auto q = testing::random_query(s, 12, 2, rng);
        EXPECT_EQ(evaluate_query(kg, q), testing::brute_force_answers(kg, q)) << to_string(s);
      }
    }
  }
}

TEST(EvaluateQuery, MonotoneWithoutNegation) {
  std::mt19937_64 rng(23);
  for (int g = 0; g < 20; ++g) {
    auto small = testing::random_graph(15, 2, 40, rng);
    auto triples = small.triples();
    for (int i = 0; i < 20; ++i) {
      triples.push_back({static_cast<EntityId>(rng() % 15), static_cast<RelationId>(rng() % 2),
                         static_cast<EntityId>(rng() % 15)});
    }
    const auto big = KnowledgeGraph::from_triples(15, 2, triples);
    for (auto s : kAllStructures) {
      if (has_negation(s)) continue;
      const auto q = testing::random_query(s, 15, 2, rng);
      const auto a = evaluate_query(small, q);
      const auto b = evaluate_query(big, q);
      EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end())) << to_string(s);
    }
  }
}

TEST(EvaluateQuery, NegationOnlyIsUnsupported) {
  const auto kg = KnowledgeGraph::from_triples(3, 1, {{0, 0, 1}});
  QueryGraph q;
  q.structure = QueryStructure::k1p;
  q.anchors = {0};
  q.atoms = {Atom{Term::anchor(0), 0, 0, true}};
  q.dnf = {{0}};
  try {
    evaluate_query(kg, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedQuery);
  }
}

TEST(AnswerQuery, EasyHardSplit) {
  const auto full = KnowledgeGraph::from_triples(4, 1, {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}});
  const auto train = KnowledgeGraph::from_triples(4, 1, {{0, 0, 1}});
  const std::vector<EntityId> a{0};
  const std::vector<RelationId> r{0};
  const auto ans = answer_query(full, &train, make_query(QueryStructure::k1p, a, r));
  EXPECT_EQ(ans.answers, (std::vector<EntityId>{1, 2, 3}));
  EXPECT_EQ(ans.easy_answers, (std::vector<EntityId>{1}));
  EXPECT_EQ(ans.hard_answers, (std::vector<EntityId>{2, 3}));
  const auto no_train = answer_query(full, nullptr, make_query(QueryStructure::k1p, a, r));
  EXPECT_EQ(no_train.easy_answers, no_train.answers);
  EXPECT_TRUE(no_train.hard_answers.empty());
}

TEST(QueryGraph, StructureNamesRoundTrip) {
  for (auto s : kAllStructures) EXPECT_EQ(parse_structure(to_string(s)), s);
  EXPECT_THROW(parse_structure("4p"), Error);
}

TEST(QueryGraph, NegationOnlyInNegatedStructures) {
  for (auto s : kAllStructures) {
    std::vector<EntityId> a(anchor_count(s), 0);
    std::vector<RelationId> r(relation_count(s), 0);
    const auto q = make_query(s, a, r);
    bool neg = false;
    for (const auto& atom : q.atoms) neg = neg || atom.negated;
    EXPECT_EQ(neg, has_negation(s)) << to_string(s);
    EXPECT_NO_THROW(validate(q));
  }
}

TEST(QueryGraph, JsonRoundTripAndValidation) {
  const std::vector<EntityId> a{3, 4};
  const std::vector<RelationId> r{0, 1, 2};
  const auto q = make_query(QueryStructure::kPin, a, r);
  const auto back = nlohmann::json(q).get<QueryGraph>();
  EXPECT_EQ(back, q);

  auto bad = q;
  bad.atoms[2].negated = false;
  EXPECT_THROW(validate(bad), Error);
  const auto kg = KnowledgeGraph::from_triples(4, 3, {});
  EXPECT_THROW(validate(q, &kg), Error);
  EXPECT_THROW(make_query(QueryStructure::k2i, std::vector<EntityId>{1}, std::vector<RelationId>{0, 0}), Error);
}

TEST(QuerySampler, SampledQueriesHaveAnswers) {
  std::mt19937_64 rng(29);
  const auto kg = testing::random_graph(40, 3, 200, rng);
  QuerySampler sampler(kg);
  for (auto s : kAllStructures) {
    const auto q = sampler.sample(s, rng);
    if (!q) continue;
    EXPECT_EQ(q->structure, s);
    EXPECT_NO_THROW(validate(*q, &kg));
    EXPECT_FALSE(evaluate_query(kg, *q).empty()) << to_string(s);
  }
}

}  // namespace
}  // namespace nqr

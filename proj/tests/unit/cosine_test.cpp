#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "nqr/cosine.hpp"
#include "nqr/error.hpp"
#include "oracles.hpp"

namespace nqr {
namespace {

PreferenceSet make_set(std::initializer_list<std::pair<EntityId, int>> pairs) {
  PreferenceSet p;
  for (auto [e, l] : pairs) p.pairs.push_back({e, static_cast<std::uint8_t>(l)});
  return p;
}

EmbeddingTable random_table(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  const auto v = testing::random_vector(n * d, rng);
  return EmbeddingTable(n, d, std::vector<float>(v.begin(), v.end()));
}

TEST(Cosine, IdenticalEmbeddingGainsAlpha) {
  const EmbeddingTable t(3, 2, {1, 0, 1, 0, 0, 1});
  const std::vector<double> base{0.2, 0.3, 0.4};
  const auto out = cosine_rerank(base, make_set({{0, 1}}), t, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(out[1], 0.3 + 0.5);
  EXPECT_DOUBLE_EQ(out[2], 0.4);
}

TEST(Cosine, EmptySetIsBase) {
  std::mt19937_64 rng(1);
  const auto t = random_table(10, 3, rng);
  const auto base = testing::random_vector(10, rng);
  EXPECT_EQ(cosine_rerank(base, PreferenceSet{}, t, {}), base);
}

TEST(Cosine, MatchesDoubleLoop) {
  std::mt19937_64 rng(2);
  const auto t = random_table(30, 5, rng);
  const auto base = testing::random_vector(30, rng);
  const auto set = make_set({{2, 1}, {5, 0}, {8, 1}, {13, 0}, {21, 0}});
  const CosineConfig cfg{0.25, 0.75};
  const auto out = cosine_rerank(base, set, t, cfg);
  for (EntityId e = 0; e < 30; ++e) {
    double want = base[e];
    for (const auto& pr : set.pairs) {
      double uv = 0, uu = 0, vv = 0;
      for (std::size_t k = 0; k < 5; ++k) {
        const double a = t.row(pr.entity)[k], b = t.row(e)[k];
        uv += a * b;
        uu += a * a;
        vv += b * b;
      }
      const double sim = uv / std::sqrt(uu * vv);
      want += pr.label ? cfg.alpha_p * sim : -cfg.alpha_n * sim;
    }
    EXPECT_NEAR(out[e], want, 1e-12);
  }
  const CosineReranker r(std::make_shared<const SimilarityCache>(std::make_shared<const EmbeddingTable>(t)), cfg);
  const auto cached = r.rerank(base, set);
  for (EntityId e = 0; e < 30; ++e) EXPECT_NEAR(cached[e], out[e], 1e-12);
}

TEST(Cosine, AdditiveOverDisjointSets) {
  std::mt19937_64 rng(3);
  const auto t = random_table(20, 4, rng);
  const auto base = testing::random_vector(20, rng);
  const CosineConfig cfg{0.1, 0.9};
  const auto p1 = make_set({{1, 1}, {2, 0}});
  const auto p2 = make_set({{3, 1}, {4, 0}, {5, 0}});
  auto both = p1;
  both.pairs.insert(both.pairs.end(), p2.pairs.begin(), p2.pairs.end());
  const auto step1 = cosine_rerank(base, p1, t, cfg);
  const auto delta = cosine_rerank(std::vector<double>(20, 0.0), p2, t, cfg);
  const auto once = cosine_rerank(base, both, t, cfg);
  for (std::size_t e = 0; e < 20; ++e) EXPECT_NEAR(step1[e] + delta[e], once[e], 1e-12);
}

TEST(Cosine, PositiveOnlyNeverLowersScores) {
  const EmbeddingTable t(4, 2, {1, 0, 0.5, 0.5, 0, 1, -1, 0.2});
  const std::vector<double> base{0, 0, 0, 0};
  const auto out = cosine_rerank(base, make_set({{0, 1}}), t, {0.5, 0.5});
  // cosine can be negative, so only entities with nonnegative similarity gain
  EXPECT_GE(out[1], 0.0);
  EXPECT_GE(out[2], 0.0);
}

TEST(Cosine, RejectsWeightsOutsideUnitInterval) {
  EXPECT_THROW(validate(CosineConfig{0.0, 0.5}), Error);
  EXPECT_THROW(validate(CosineConfig{0.5, 1.0}), Error);
  EXPECT_NO_THROW(validate(CosineConfig{0.1, 0.9}));
}

TEST(Cosine, ZeroEmbeddingThrows) {
  const EmbeddingTable t(2, 2, {1, 0, 0, 0});
  const std::vector<double> base{0, 0};
  EXPECT_THROW(cosine_rerank(base, make_set({{0, 1}}), t, {}), Error);
}

TEST(TuneCosine, FullGridAndSinglePoint) {
  const auto w = testing::tiny_world(4);
  const auto cache = std::make_shared<const SimilarityCache>(w.qa);
  const auto valid = w.dataset.split(Split::kValid);
  const auto full = tune_cosine(valid, w.synth.scores, cache, kCosineGrid, kCosineGrid);
  EXPECT_EQ(full.rows.size(), 25u);
  std::size_t best = 0;
  for (std::size_t i = 1; i < full.rows.size(); ++i) {
    if (full.rows[i].objective > full.rows[best].objective) best = i;
  }
  EXPECT_EQ(full.best.alpha_p, full.rows[best].config.alpha_p);
  EXPECT_EQ(full.best.alpha_n, full.rows[best].config.alpha_n);
  std::ostringstream out;
  write_cosine_report(out, full);
  EXPECT_NE(out.str().find("alpha_p"), std::string::npos);

  const auto one = tune_cosine(valid, w.synth.scores, cache, {0.25}, {0.75});
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_EQ(one.best.alpha_p, 0.25);
  EXPECT_EQ(one.best.alpha_n, 0.75);
}

}  // namespace
}  // namespace nqr

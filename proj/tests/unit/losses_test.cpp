#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "nqr/error.hpp"
#include "nqr/losses.hpp"
#include "oracles.hpp"

namespace nqr {
namespace {

TEST(MarginLoss, SatisfiedMarginIsZero) {
  const std::vector<double> a{0.5, 0.3};
  const std::vector<EntityId> pos{0}, neg{1};
  EXPECT_DOUBLE_EQ(margin_preference_loss(a, pos, neg, 0.1), 0.0);
}

TEST(MarginLoss, EqualScoresCostMarginPerPair) {
  const std::vector<double> a{1, 1, 1, 1};
  const std::vector<EntityId> pos{0, 1}, neg{2, 3};
  EXPECT_NEAR(margin_preference_loss(a, pos, neg, 0.1), 0.4, 1e-15);
}

TEST(MarginLoss, MatchesPairEnumeration) {
  std::mt19937_64 rng(1);
  const auto a = testing::random_vector(5, rng);
  const std::vector<EntityId> pos{0, 3}, neg{1, 2, 4};
  double want = 0;
  for (auto p : pos) {
    for (auto n : neg) want += std::max(0.0, 0.25 + a[n] - a[p]);
  }
  std::vector<double> grad(5, 0.0);
  EXPECT_NEAR(margin_preference_loss(a, pos, neg, 0.25, grad), want, 1e-15);
  EXPECT_NEAR(grad[0] + grad[1] + grad[2] + grad[3] + grad[4], 0.0, 1e-15);
}

TEST(MarginLoss, EmptySideThrows) {
  const std::vector<double> a{1, 2};
  const std::vector<EntityId> pos{0}, none;
  EXPECT_THROW(margin_preference_loss(a, pos, none, 0.1), Error);
  EXPECT_THROW(ranknet_loss(a, none, pos), Error);
}

TEST(KlLoss, ZeroForEqualOrShifted) {
  const std::vector<double> b{0.1, 0.7, 0.3};
  std::vector<double> shifted = b;
  for (auto& v : shifted) v += 4.2;
  EXPECT_NEAR(kl_answer_loss(b, b), 0.0, 1e-15);
  EXPECT_NEAR(kl_answer_loss(b, shifted), 0.0, 1e-14);
  std::vector<double> perturbed = b;
  perturbed[1] += 0.1;
  EXPECT_GT(kl_answer_loss(b, perturbed), 0.0);
}

TEST(KlLoss, TwoTermValue) {
  const std::vector<double> b{0, 0}, a{0, std::log(3.0)};
  EXPECT_NEAR(kl_answer_loss(b, a), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(kl_answer_loss(b, a), 0.1438, 1e-4);
}

TEST(KlLoss, GradientMatchesDifferences) {
  std::mt19937_64 rng(2);
  const auto b = testing::random_vector(6, rng);
  auto a = testing::random_vector(6, rng);
  std::vector<double> grad(6, 0.0);
  kl_answer_loss(b, a, grad);
  for (std::size_t i = 0; i < 6; ++i) {
    const double h = 1e-5, x = a[i];
    a[i] = x + h;
    const double up = kl_answer_loss(b, a);
    a[i] = x - h;
    const double down = kl_answer_loss(b, a);
    a[i] = x;
    EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-8);
  }
}

TEST(RankNet, EqualScoresGiveLn2) {
  const std::vector<double> a{0.4, 0.4, 0.4};
  const std::vector<EntityId> pos{0}, neg{1, 2};
  EXPECT_NEAR(ranknet_loss(a, pos, neg), 2 * std::log(2.0), 1e-15);
}

TEST(RankNet, SaturatesWithLargeGap) {
  const std::vector<double> a{10, 0};
  const std::vector<EntityId> pos{0}, neg{1};
  EXPECT_LT(ranknet_loss(a, pos, neg), 1e-4);
  const std::vector<double> b{-800, 0};
  EXPECT_TRUE(std::isfinite(ranknet_loss(b, pos, neg)));
}

TEST(RankNet, MatchesPairEnumeration) {
  std::mt19937_64 rng(3);
  const auto a = testing::random_vector(7, rng, -3, 3);
  const std::vector<EntityId> pos{1, 4, 6}, neg{0, 5};
  double want = 0;
  for (auto p : pos) {
    for (auto n : neg) want += std::log1p(std::exp(-(a[p] - a[n])));
  }
  EXPECT_NEAR(ranknet_loss(a, pos, neg), want, 1e-12);
}

TEST(TotalLoss, Composition) {
  std::mt19937_64 rng(4);
  const auto b = testing::random_vector(8, rng);
  const auto a = testing::random_vector(8, rng);
  const std::vector<EntityId> pos{0, 2}, neg{5, 6, 7};
  const double m = margin_preference_loss(a, pos, neg, 0.1);
  const double kl = kl_answer_loss(b, a);
  EXPECT_NEAR(total_loss(a, b, pos, neg, 0.1, 0.0), m, 1e-15);
  EXPECT_NEAR(total_loss(a, b, pos, neg, 0.1, 2.5), m + 2.5 * kl, 1e-13);
  std::vector<double> sat(8, 0.0);
  sat[0] = sat[2] = 1.0;
  EXPECT_DOUBLE_EQ(total_loss(sat, sat, pos, neg, 0.1, 1.0), 0.0);
}

PreferenceSet numbered_set(std::size_t n) {
  PreferenceSet p;
  for (std::size_t i = 0; i < n; ++i) p.pairs.push_back({static_cast<EntityId>(i), static_cast<std::uint8_t>(i % 2)});
  return p;
}

TEST(Subset, SingletonIsWholeSet) {
  std::mt19937_64 rng(5);
  const auto p = numbered_set(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_interaction_subset(p, rng).pairs, p.pairs);
}

TEST(Subset, SizesAreUniform) {
  std::mt19937_64 rng(6);
  const auto p = numbered_set(4);
  std::array<int, 5> counts{};
  for (int i = 0; i < 10000; ++i) ++counts[sample_interaction_subset(p, rng).size()];
  for (int t = 1; t <= 4; ++t) EXPECT_NEAR(counts[t] / 10000.0, 0.25, 0.02) << t;
}

TEST(Subset, KeepsOrderAndIsSeeded) {
  const auto p = numbered_set(9);
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 50; ++i) {
    const auto s = sample_interaction_subset(p, a);
    EXPECT_EQ(s.pairs, sample_interaction_subset(p, b).pairs);
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s.pairs[k - 1].entity, s.pairs[k].entity);
    for (const auto& pr : s.pairs) EXPECT_EQ(pr.label, pr.entity % 2);
  }
  std::mt19937_64 c(8);
  const auto prefix = sample_interaction_subset(p, c, true);
  for (std::size_t k = 0; k < prefix.size(); ++k) EXPECT_EQ(prefix.pairs[k].entity, k);
}

}  // namespace
}  // namespace nqr

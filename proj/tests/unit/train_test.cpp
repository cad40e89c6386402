#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "nqr/error.hpp"
#include "nqr/train.hpp"

namespace nqr {
namespace {

const testing::TinyWorld& world() {
  static const auto w = testing::tiny_world(3);
  return w;
}

TrainConfig quick(std::size_t epochs = 3) {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, FixtureHasTrainingData) {
  EXPECT_GE(world().dataset.split(Split::kTrain).size(), 10u);
  EXPECT_GE(world().dataset.split(Split::kValid).size(), 1u);
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  auto cfg = quick(2);
  cfg.learning_rate = 0.0;
  const auto r = train(world().dataset, world().synth.scores, *world().qa, cfg);
  auto init = NqrParameters::initialize(world().qa->dim(), cfg.seed, cfg.zero_head);
  auto got = r.params;
  const auto a = init.param_refs();
  const auto b = got.param_refs();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].value.begin(), a[i].value.end(), b[i].value.begin()));
  }
}

TEST(Train, LossDecreases) {
  const auto r = train(world().dataset, world().synth.scores, *world().qa, quick(15));
  ASSERT_EQ(r.epoch_loss.size(), 15u);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  EXPECT_GT(r.examples, 0u);
}

TEST(Train, RankNetLossDecreases) {
  auto cfg = quick(15);
  cfg.loss = LossKind::kRankNet;
  const auto r = train(world().dataset, world().synth.scores, *world().qa, cfg);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(Train, DeterministicPerSeed) {
  const auto a = train(world().dataset, world().synth.scores, *world().qa, quick());
  const auto b = train(world().dataset, world().synth.scores, *world().qa, quick());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(a.params.to_checkpoint().tensors.size(), b.params.to_checkpoint().tensors.size());
  const auto ta = a.params.to_checkpoint().tensors;
  const auto tb = b.params.to_checkpoint().tensors;
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].tensor, tb[i].tensor) << ta[i].name;
}

TEST(Train, SkipsNonOnehopTraining) {
  auto data = world().dataset;
  const QueryInstance* extra = nullptr;
  for (const auto* q : data.split(Split::kTest)) {
    if (q->query.structure != QueryStructure::k1p) extra = q;
  }
  ASSERT_NE(extra, nullptr);
  auto copy = *extra;
  copy.split = Split::kTrain;
  data.instances.push_back(copy);
  const auto r = train(data, world().synth.scores, *world().qa, quick(1));
  EXPECT_EQ(r.skipped_non_1p, 1u);
}

TEST(Train, ValidatesConfig) {
  auto cfg = quick();
  cfg.margin = 0.0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = quick();
  cfg.kl_weight = -1;
  EXPECT_THROW(validate(cfg), Error);
  cfg = quick();
  cfg.epochs = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = quick();
  cfg.loss = LossKind::kRankNet;
  cfg.margin = 0.0;
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Train, ConfigJsonRoundTrip) {
  auto cfg = quick();
  cfg.loss = LossKind::kRankNet;
  cfg.zero_head = true;
  const auto back = nlohmann::json(cfg).get<TrainConfig>();
  EXPECT_EQ(back.learning_rate, cfg.learning_rate);
  EXPECT_EQ(back.loss, cfg.loss);
  EXPECT_EQ(back.zero_head, true);
  EXPECT_EQ(parse_loss_kind(to_string(LossKind::kMarginKl)), LossKind::kMarginKl);
  EXPECT_THROW(parse_loss_kind("hinge"), Error);
}

TEST(Grid, SelectBestPrefersDominantAndEarlierTies) {
  std::vector<GridRow> rows(3);
  rows[0].av_pa = 0.6;
  rows[0].av_mrr = 0.3;
  rows[1].av_pa = 0.7;
  rows[1].av_mrr = 0.4;
  rows[2].av_pa = 0.7;
  rows[2].av_mrr = 0.4;
  for (auto& r : rows) r.objective = r.av_pa + r.av_mrr;
  EXPECT_EQ(select_best(rows), 1u);
}

TEST(Grid, SinglePoint) {
  GridSpec g{{1e-3}, {0.1}, {1.0}};
  const auto r = grid_search(g, quick(1), world().dataset, world().synth.scores, *world().qa);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.rows[0].config.learning_rate, 1e-3);
}

TEST(Grid, FullGridReportHasEighteenRows) {
  std::size_t seen = 0;
  const auto r = grid_search(GridSpec{}, quick(1), world().dataset, world().synth.scores, *world().qa, {},
                             [&](const GridRow&) { ++seen; });
  EXPECT_EQ(r.rows.size(), 18u);
  EXPECT_EQ(seen, 18u);
  std::ostringstream out;
  write_grid_report(out, r.rows);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  EXPECT_EQ(lines, 19u);
  EXPECT_EQ(ranknet_grid().learning_rates.size(), 3u);
  EXPECT_EQ(ranknet_grid().margins.size(), 1u);
  EXPECT_EQ(ranknet_grid().kl_weights.size(), 1u);
}

}  // namespace
}  // namespace nqr

#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "nqr/cosine.hpp"
#include "nqr/metrics.hpp"
#include "nqr/model.hpp"

namespace nqr {
namespace {

PreferenceSet make_set(std::initializer_list<std::pair<EntityId, int>> pairs) {
  PreferenceSet p;
  for (auto [e, l] : pairs) p.pairs.push_back({e, static_cast<std::uint8_t>(l)});
  return p;
}

TEST(RevealOrder, AlternatesAndExhausts) {
  const auto p = make_set({{5, 1}, {6, 1}, {7, 0}});
  const auto order = reveal_order(p, 10);
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0], (Preference{5, 1}));
  EXPECT_EQ(order[1], (Preference{7, 0}));
  EXPECT_EQ(order[2], (Preference{6, 1}));
  const auto q = make_set({{1, 0}, {2, 0}, {3, 1}, {4, 0}, {9, 1}});
  const auto o2 = reveal_order(q, 4);
  ASSERT_EQ(o2.size(), 4u);
  EXPECT_EQ(o2[0].entity, 3u);
  EXPECT_EQ(o2[1].entity, 1u);
  EXPECT_EQ(o2[2].entity, 9u);
  EXPECT_EQ(o2[3].entity, 2u);
}

// Records every preference set it is asked to rerank with.
class Recorder final : public Reranker {
 public:
  mutable std::vector<PreferenceSet> calls;
  std::vector<double> rerank(std::span<const double> base, const PreferenceSet& p) const override {
    calls.push_back(p);
    return {base.begin(), base.end()};
  }
  std::string name() const override { return "recorder"; }
};

QueryInstance small_instance() {
  QueryInstance q;
  q.id = 4;
  q.query.structure = QueryStructure::k2i;
  q.answers.answers = {0, 1, 2};
  q.preference_sets = {make_set({{0, 1}, {1, 1}, {2, 0}})};
  return q;
}

TEST(Protocol, IdentityReproducesBase) {
  const auto q = small_instance();
  const std::vector<double> base{0.9, 0.2, 0.5, 0.4, 0.1};
  const auto trace = run_protocol(IdentityReranker(), q, 0, base);
  ASSERT_EQ(trace.steps.size(), 3u);
  EXPECT_EQ(trace.structure, QueryStructure::k2i);
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.metrics, trace.base);
    EXPECT_EQ(s.pa, trace.base_pa);
  }
  EXPECT_DOUBLE_EQ(*trace.base_pa, 0.5);
}

TEST(Protocol, CumulativeSetsFromOriginalBase) {
  const auto q = small_instance();
  const std::vector<double> base{0.9, 0.2, 0.5, 0.4, 0.1};
  Recorder rec;
  run_protocol(rec, q, 0, base);
  ASSERT_EQ(rec.calls.size(), 3u);
  EXPECT_EQ(rec.calls[0].size(), 1u);
  EXPECT_EQ(rec.calls[1].size(), 2u);
  EXPECT_EQ(rec.calls[2].pairs, (std::vector<Preference>{{0, 1}, {2, 0}, {1, 1}}));
}

TEST(Protocol, OneSidedSetHasNoPa) {
  auto q = small_instance();
  q.preference_sets = {make_set({{0, 1}, {1, 1}})};
  const std::vector<double> base{0.9, 0.2, 0.5};
  const auto trace = run_protocol(IdentityReranker(), q, 0, base);
  EXPECT_FALSE(trace.base_pa);
  EXPECT_FALSE(trace.av_pa());
  for (const auto& s : trace.steps) EXPECT_FALSE(s.pa);
}

TEST(Aggregate, AveragesOverSteps) {
  InteractionTrace t;
  t.structure = QueryStructure::k1p;
  t.base_pa = 0.3;
  t.steps.resize(2);
  t.steps[0].t = 1;
  t.steps[0].pa = 0.4;
  t.steps[0].metrics.mrr = 0.2;
  t.steps[1].t = 2;
  t.steps[1].pa = 0.6;
  t.steps[1].metrics.mrr = 0.4;
  EXPECT_DOUBLE_EQ(*t.av_pa(), 0.5);
  EXPECT_DOUBLE_EQ(t.av_mrr(), 0.3);
  const std::vector<InteractionTrace> one{t}, three{t, t, t};
  const auto a = aggregate(one);
  const auto b = aggregate(three);
  EXPECT_DOUBLE_EQ(a.overall.av_pa, 0.5);
  EXPECT_DOUBLE_EQ(b.overall.av_pa, 0.5);
  EXPECT_DOUBLE_EQ(b.overall.av_mrr, 0.3);
  ASSERT_EQ(b.curve.size(), 2u);
  EXPECT_DOUBLE_EQ(b.curve[1].pa, 0.6);
  EXPECT_EQ(b.curve[1].count, 3u);
}

TEST(Aggregate, PerStructureMeansMatchRecompute) {
  const auto w = testing::tiny_world(6);
  const auto test = w.dataset.split(Split::kTest);
  const CosineReranker r(std::make_shared<const SimilarityCache>(w.qa), {0.5, 0.5});
  const auto traces = run_protocol_all(r, test, w.synth.scores);
  std::stringstream buf;
  write_traces(buf, traces);
  const auto back = read_traces(buf);
  ASSERT_EQ(back.size(), traces.size());
  const auto agg = aggregate(back);
  for (auto s : kAllStructures) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& t : back) {
      if (t.structure != s) continue;
      sum += t.av_mrr();
      ++n;
    }
    const auto& m = agg.by_structure[structure_index(s)];
    EXPECT_EQ(m.traces, n);
    if (n) EXPECT_NEAR(m.av_mrr, sum / n, 1e-12) << to_string(s);
  }
  std::ostringstream csv, curve, svg;
  write_structure_csv(csv, agg);
  write_curve_csv(curve, agg);
  write_curve_svg(svg, {{"cosine", agg}});
  EXPECT_NE(csv.str().find("AvPA"), std::string::npos);
  EXPECT_NE(svg.str().find("<svg"), std::string::npos);
}

TEST(Protocol, CosinePaRisesWithInteractions) {
  const auto w = testing::tiny_world(7, 400);
  const CosineReranker r(std::make_shared<const SimilarityCache>(w.qa), {0.5, 0.5});
  const auto agg = aggregate(run_protocol_all(r, w.dataset.split(Split::kTest), w.synth.scores));
  ASSERT_GE(agg.curve.size(), 5u);
  EXPECT_GT(agg.curve[4].pa, agg.curve[0].pa);
  EXPECT_GT(agg.curve[0].pa, agg.overall.base_pa);
  for (std::size_t t = 1; t < 5; ++t) EXPECT_GE(agg.curve[t].pa, agg.curve[t - 1].pa - 0.02) << t;
}

}  // namespace
}  // namespace nqr

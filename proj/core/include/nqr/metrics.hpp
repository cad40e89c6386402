#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/dataset.hpp"
#include "nqr/model.hpp"
#include "nqr/scores.hpp"

namespace nqr {

// Fraction of (e+, e-) pairs with a[e+] > a[e-]; ties count as misses.
// Throws kUndefinedMetric when a side is empty.
double pairwise_accuracy(std::span<const double> scores, std::span<const EntityId> positives,
                         std::span<const EntityId> negatives);

struct RankingMetrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;

  bool operator==(const RankingMetrics&) const = default;
};

// Filtered ranks of every answer, averaged over the answers.
RankingMetrics ranking_metrics(std::span<const double> scores, std::span<const EntityId> answers);

// Spearman correlation of two equal-length samples (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

struct TraceStep {
  std::size_t t = 0;
  Preference revealed;
  std::optional<double> pa;  // absent when the set lacks one side
  RankingMetrics metrics;
};

struct InteractionTrace {
  QueryId query = 0;
  QueryStructure structure = QueryStructure::k1p;
  std::size_t set_index = 0;
  std::optional<double> base_pa;
  RankingMetrics base;
  std::vector<TraceStep> steps;

  std::optional<double> av_pa() const;
  double av_mrr() const;
};

// Order in which pairs are revealed: positives on odd steps, negatives on
// even steps, each side in stored order; when one side runs out the other
// continues. At most max_steps pairs.
std::vector<Preference> reveal_order(const PreferenceSet& p, std::size_t max_steps);

struct ProtocolOptions {
  std::size_t max_steps = 10;
};

// PA at every step is measured on the full preference set; MRR/Hits on the
// instance's answers. Each step reranks the base scores with the cumulative
// revealed set.
InteractionTrace run_protocol(const Reranker& reranker, const QueryInstance& instance, std::size_t set_index,
                              std::span<const double> base, const ProtocolOptions& options = {});

// Every preference set of every instance. Base rows come from `scores`.
std::vector<InteractionTrace> run_protocol_all(const Reranker& reranker,
                                               const std::vector<const QueryInstance*>& instances,
                                               const ScoreMatrix& scores, const ProtocolOptions& options = {});

struct MetricSummary {
  std::size_t traces = 0;
  std::size_t pa_traces = 0;
  double av_pa = 0.0;
  double av_mrr = 0.0;
  double base_pa = 0.0;
  double base_mrr = 0.0;
};

struct CurvePoint {
  std::size_t t = 0;
  std::size_t count = 0;
  std::size_t pa_count = 0;
  double pa = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
};

struct Aggregate {
  MetricSummary overall;
  std::array<MetricSummary, 14> by_structure{};
  std::vector<CurvePoint> curve;  // t = 1..max
};

Aggregate aggregate(std::span<const InteractionTrace> traces);

void to_json(nlohmann::json& j, const InteractionTrace& t);
void from_json(const nlohmann::json& j, InteractionTrace& t);
void write_traces(std::ostream& out, std::span<const InteractionTrace> traces);
std::vector<InteractionTrace> read_traces(std::istream& in);

// Rows AvPA / AvMRR, one column per structure present plus "avg" (mean of
// the structure columns).
void write_structure_csv(std::ostream& out, const Aggregate& agg);
// t, count, pa, mrr, hits1, hits3, hits10
void write_curve_csv(std::ostream& out, const Aggregate& agg);
// Two-panel line chart of PA(t) and MRR(t), one series per named aggregate.
void write_curve_svg(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& series);

}  // namespace nqr

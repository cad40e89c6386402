#include "nqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nqr/error.hpp"
#include "nqr/rank.hpp"

namespace nqr {

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double pairwise_accuracy(std::span<const double> scores, std::span<const EntityId> positives,
                         std::span<const EntityId> negatives) {
  if (positives.empty() || negatives.empty()) {
    fail(ErrorCode::kUndefinedMetric, "pairwise accuracy needs positives and negatives");
  }
  for (auto e : positives) {
    if (e >= scores.size()) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " not scored");
  }
  std::vector<double> neg;
  neg.reserve(negatives.size());
  for (auto e : negatives) {
    if (e >= scores.size()) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " not scored");
    neg.push_back(scores[e]);
  }
  std::sort(neg.begin(), neg.end());
  std::size_t wins = 0;
  for (auto e : positives) {
    wins += static_cast<std::size_t>(std::lower_bound(neg.begin(), neg.end(), scores[e]) - neg.begin());
  }
  return static_cast<double>(wins) / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

RankingMetrics ranking_metrics(std::span<const double> scores, std::span<const EntityId> answers) {
  if (answers.empty()) fail(ErrorCode::kUndefinedMetric, "ranking metrics need at least one answer");
  const auto ranks = filtered_ranks(scores, answers);
  RankingMetrics m;
  for (auto r : ranks) {
    m.mrr += 1.0 / static_cast<double>(r);
    m.hits1 += r <= 1 ? 1.0 : 0.0;
    m.hits3 += r <= 3 ? 1.0 : 0.0;
    m.hits10 += r <= 10 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::kInvalidArgument, "spearman needs two equal samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::kUndefinedMetric, "spearman of a constant sample");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace nqr

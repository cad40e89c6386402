#include "nqr/rank.hpp"

#include <algorithm>
#include <string>

#include "nqr/error.hpp"

namespace nqr {

namespace {

void check_entity(std::span<const double> scores, EntityId e) {
  if (e >= scores.size()) {
    fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " has no score");
  }
}

}  // namespace

std::size_t raw_rank(std::span<const double> scores, EntityId entity) {
  check_entity(scores, entity);
  const double s = scores[entity];
  std::size_t above = 0;
  for (std::size_t x = 0; x < scores.size(); ++x) {
    if (x != entity && scores[x] >= s) ++above;
  }
  return above + 1;
}

std::size_t filtered_rank(std::span<const double> scores, EntityId entity,
                          std::span<const EntityId> known_answers) {
  check_entity(scores, entity);
  std::vector<EntityId> known(known_answers.begin(), known_answers.end());
  std::sort(known.begin(), known.end());
  const double s = scores[entity];
  std::size_t above = 0;
  for (std::size_t x = 0; x < scores.size(); ++x) {
    if (x == entity || scores[x] < s) continue;
    if (std::binary_search(known.begin(), known.end(), static_cast<EntityId>(x))) continue;
    ++above;
  }
  return above + 1;
}

std::vector<std::size_t> filtered_ranks(std::span<const double> scores, std::span<const EntityId> answers) {
  for (auto e : answers) check_entity(scores, e);
  // Sorted (score ascending) view of the answers; a non-answer x is above
  // every answer whose score is <= scores[x].
  std::vector<double> answer_scores;
  answer_scores.reserve(answers.size());
  std::vector<EntityId> sorted_ids(answers.begin(), answers.end());
  std::sort(sorted_ids.begin(), sorted_ids.end());
  sorted_ids.erase(std::unique(sorted_ids.begin(), sorted_ids.end()), sorted_ids.end());
  for (auto e : sorted_ids) answer_scores.push_back(scores[e]);
  std::sort(answer_scores.begin(), answer_scores.end());

  // beaten[k] = number of non-answers scoring >= answer_scores[k].
  std::vector<std::size_t> hits(answer_scores.size() + 1, 0);
  auto id_it = sorted_ids.begin();
  for (std::size_t x = 0; x < scores.size(); ++x) {
    while (id_it != sorted_ids.end() && *id_it < x) ++id_it;
    if (id_it != sorted_ids.end() && *id_it == x) continue;
    // Number of answer scores <= scores[x].
    auto k = static_cast<std::size_t>(
        std::upper_bound(answer_scores.begin(), answer_scores.end(), scores[x]) - answer_scores.begin());
    ++hits[k];
  }
  // Non-answer with count k beats answer positions 0..k-1; suffix sums.
  std::vector<std::size_t> beaten(answer_scores.size(), 0);
  std::size_t running = 0;
  for (std::size_t k = answer_scores.size(); k-- > 0;) {
    running += hits[k + 1];
    beaten[k] = running;
  }
  std::vector<std::size_t> ranks;
  ranks.reserve(answers.size());
  for (auto e : answers) {
    // First position holding this score; equal scores share the same count.
    auto k = static_cast<std::size_t>(
        std::lower_bound(answer_scores.begin(), answer_scores.end(), scores[e]) - answer_scores.begin());
    ranks.push_back(beaten[k] + 1);
  }
  return ranks;
}

}  // namespace nqr

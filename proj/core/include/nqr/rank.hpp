#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nqr/types.hpp"

namespace nqr {

// Rank of `entity` by descending score once every other member of
// `known_answers` is removed. Ties are pessimistic: a competitor with an
// equal score counts as ranked above. Ranks start at 1.
std::size_t filtered_rank(std::span<const double> scores, EntityId entity,
                          std::span<const EntityId> known_answers);

// Unfiltered pessimistic rank: 1 + #{x != entity : scores[x] >= scores[entity]}.
std::size_t raw_rank(std::span<const double> scores, EntityId entity);

// filtered_rank for every answer at once, in the order of `answers`.
// O(|V| log |A| + |A| log |A|).
std::vector<std::size_t> filtered_ranks(std::span<const double> scores, std::span<const EntityId> answers);

}  // namespace nqr

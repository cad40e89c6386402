#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/types.hpp"

namespace nqr {

struct Preference {
  EntityId entity = 0;
  std::uint8_t label = 0;  // 1 = preferred, 0 = non-preferred

  bool operator==(const Preference&) const = default;
};

// Ordered interaction stream (e_1, l_1), ..., (e_t, l_t).
struct PreferenceSet {
  std::vector<Preference> pairs;
  std::optional<std::uint32_t> source_cluster;  // dendrogram node, when generated

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  std::vector<EntityId> positives() const;
  std::vector<EntityId> negatives() const;

  bool operator==(const PreferenceSet&) const = default;
};

// Throws kInvalidArgument on a label outside {0,1} or a repeated entity.
// An empty set is accepted here; operations that need one pair check it.
void validate(const PreferenceSet& p);

void to_json(nlohmann::json& j, const PreferenceSet& p);
void from_json(const nlohmann::json& j, PreferenceSet& p);

}  // namespace nqr

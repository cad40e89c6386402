#include "nqr/preference.hpp"

#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"

namespace nqr {

std::vector<EntityId> PreferenceSet::positives() const {
  std::vector<EntityId> out;
  for (const auto& p : pairs) {
    if (p.label == 1) out.push_back(p.entity);
  }
  return out;
}

std::vector<EntityId> PreferenceSet::negatives() const {
  std::vector<EntityId> out;
  for (const auto& p : pairs) {
    if (p.label == 0) out.push_back(p.entity);
  }
  return out;
}

void validate(const PreferenceSet& p) {
  std::unordered_set<EntityId> seen;
  for (const auto& pair : p.pairs) {
    if (pair.label > 1) fail(ErrorCode::kInvalidArgument, "preference label must be 0 or 1");
    if (!seen.insert(pair.entity).second) {
      fail(ErrorCode::kInvalidArgument, "entity " + std::to_string(pair.entity) + " labeled twice");
    }
  }
}

void to_json(nlohmann::json& j, const PreferenceSet& p) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pair : p.pairs) pairs.push_back({pair.entity, pair.label});
  j = nlohmann::json{{"pairs", pairs}};
  if (p.source_cluster) j["source_cluster"] = *p.source_cluster;
}

void from_json(const nlohmann::json& j, PreferenceSet& p) {
  p = {};
  try {
    const auto& pairs = j.is_array() ? j : j.at("pairs");
    for (const auto& jp : pairs) {
      Preference pref;
      if (jp.is_array()) {
        pref.entity = jp.at(0).get<EntityId>();
        pref.label = jp.at(1).get<std::uint8_t>();
      } else {
        pref.entity = jp.at("entity").get<EntityId>();
        pref.label = jp.at("label").get<std::uint8_t>();
      }
      p.pairs.push_back(pref);
    }
    if (j.is_object() && j.contains("source_cluster")) p.source_cluster = j.at("source_cluster").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed preference set: ") + e.what());
  }
  validate(p);
}

}  // namespace nqr

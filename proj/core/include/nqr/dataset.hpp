#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/preference.hpp"
#include "nqr/query.hpp"
#include "nqr/types.hpp"

namespace nqr {

enum class Split { kTrain, kValid, kTest };

std::string_view to_string(Split s);
Split parse_split(std::string_view name);

// One line of a dataset / queries file. Answers and preference sets are
// optional when the file only lists queries to be processed.
struct QueryInstance {
  QueryId id = 0;
  Split split = Split::kTest;
  QueryGraph query;
  AnswerSet answers;
  std::vector<PreferenceSet> preference_sets;
};

struct Dataset {
  std::vector<QueryInstance> instances;

  std::vector<const QueryInstance*> split(Split s) const;
};

void to_json(nlohmann::json& j, const QueryInstance& q);
void from_json(const nlohmann::json& j, QueryInstance& q);

// JSON lines, one QueryInstance per line. Parse errors carry the line number.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& d);
void write_dataset_file(const std::string& path, const Dataset& d);

}  // namespace nqr

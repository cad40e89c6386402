#include "nqr/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"

namespace nqr {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid" || name == "validation") return Split::kValid;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kParse, "unknown split '" + std::string(name) + "'");
}

std::vector<const QueryInstance*> Dataset::split(Split s) const {
  std::vector<const QueryInstance*> out;
  for (const auto& q : instances) {
    if (q.split == s) out.push_back(&q);
  }
  return out;
}

void to_json(nlohmann::json& j, const QueryInstance& q) {
  j = nlohmann::json{{"id", q.id},
                     {"split", to_string(q.split)},
                     {"query", q.query},
                     {"answers", q.answers.answers},
                     {"easy_answers", q.answers.easy_answers},
                     {"hard_answers", q.answers.hard_answers},
                     {"preference_sets", q.preference_sets}};
}

void from_json(const nlohmann::json& j, QueryInstance& q) {
  try {
    q.id = j.at("id").get<QueryId>();
    q.split = parse_split(j.value("split", std::string("test")));
    q.query = j.at("query").get<QueryGraph>();
    q.answers.answers = j.value("answers", std::vector<EntityId>{});
    q.answers.easy_answers = j.value("easy_answers", std::vector<EntityId>{});
    q.answers.hard_answers = j.value("hard_answers", std::vector<EntityId>{});
    q.preference_sets.clear();
    if (j.contains("preference_sets")) {
      for (const auto& jp : j.at("preference_sets")) q.preference_sets.push_back(jp.get<PreferenceSet>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed query instance: ") + e.what());
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      d.instances.push_back(nlohmann::json::parse(line).get<QueryInstance>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return d;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& d) {
  for (const auto& q : d.instances) out << nlohmann::json(q).dump() << '\n';
}

void write_dataset_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  write_dataset(out, d);
}

}  // namespace nqr

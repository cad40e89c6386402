#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/kg.hpp"
#include "nqr/types.hpp"

namespace nqr {

enum class QueryStructure {
  k1p, k2p, k3p, k2i, k3i, kIp, kPi, k2in, k3in, kInp, kPin, kPni, k2u, kUp,
};

inline constexpr std::array<QueryStructure, 14> kAllStructures = {
    QueryStructure::k1p,  QueryStructure::k2p,  QueryStructure::k3p,  QueryStructure::k2i,
    QueryStructure::k3i,  QueryStructure::kIp,  QueryStructure::kPi,  QueryStructure::k2in,
    QueryStructure::k3in, QueryStructure::kInp, QueryStructure::kPin, QueryStructure::kPni,
    QueryStructure::k2u,  QueryStructure::kUp,
};

std::string_view to_string(QueryStructure s);
QueryStructure parse_structure(std::string_view name);
std::size_t structure_index(QueryStructure s);
bool has_negation(QueryStructure s);
std::size_t anchor_count(QueryStructure s);
std::size_t relation_count(QueryStructure s);

struct Term {
  enum class Kind : std::uint8_t { kAnchor, kVariable };
  Kind kind = Kind::kAnchor;
  std::uint32_t index = 0;

  static Term anchor(std::uint32_t i) { return {Kind::kAnchor, i}; }
  static Term variable(std::uint32_t i) { return {Kind::kVariable, i}; }
  bool operator==(const Term&) const = default;
};

// r(subject, object) or its negation. The object is always a variable.
struct Atom {
  Term subject;
  RelationId relation = 0;
  std::uint32_t object = 0;
  bool negated = false;

  bool operator==(const Atom&) const = default;
};

// One query in disjunctive normal form. `dnf` lists, per conjunct, the
// indices of the atoms it contains.
struct QueryGraph {
  QueryStructure structure = QueryStructure::k1p;
  std::vector<EntityId> anchors;
  std::vector<Atom> atoms;
  std::uint32_t num_variables = 1;
  std::uint32_t target = 0;
  std::vector<std::vector<std::uint32_t>> dnf;

  bool operator==(const QueryGraph&) const = default;
};

// Canonical query of the given structure. `relations[i]` is the relation of
// atom i in the canonical atom order.
QueryGraph make_query(QueryStructure structure, std::span<const EntityId> anchors,
                      std::span<const RelationId> relations);

// Throws kInvalidArgument when the atom pattern does not match the structure
// tag, or when an id is outside the graph's vocabularies (when kg is given).
void validate(const QueryGraph& q, const KnowledgeGraph* kg = nullptr);

struct AnswerSet {
  std::vector<EntityId> answers;       // sorted
  std::vector<EntityId> easy_answers;  // reachable on the training graph
  std::vector<EntityId> hard_answers;  // answers \ easy_answers
};

// Exact answers by traversal. Negated atoms filter candidates produced by the
// positive atoms of the same variable; a variable with no positive atom makes
// the query unsafe and raises kUnsupportedQuery.
std::vector<EntityId> evaluate_query(const KnowledgeGraph& kg, const QueryGraph& q);

// Answers on `full`; the easy/hard split uses `train` when given, otherwise
// every answer is easy.
AnswerSet answer_query(const KnowledgeGraph& full, const KnowledgeGraph* train, const QueryGraph& q);

// Precomputed incoming-edge lists used to ground query patterns backwards.
class QuerySampler {
 public:
  explicit QuerySampler(const KnowledgeGraph& kg);

  // Grounds the structure's pattern starting from a random target with at
  // least one answer. Returns nullopt after `max_tries` failures.
  std::optional<QueryGraph> sample(QueryStructure structure, std::mt19937_64& rng,
                                   int max_tries = 100) const;

 private:
  const KnowledgeGraph& kg_;
  std::vector<std::vector<std::uint32_t>> incoming_;  // entity -> triple indices
  std::vector<EntityId> targets_;                       // entities with incoming edges
};

void to_json(nlohmann::json& j, const QueryGraph& q);
void from_json(const nlohmann::json& j, QueryGraph& q);

}  // namespace nqr

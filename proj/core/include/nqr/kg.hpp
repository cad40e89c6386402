#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nqr/types.hpp"

namespace nqr {

// Dense label <-> id mapping. Ids are assigned in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  // Anonymous vocabulary whose labels are the decimal ids "0".."n-1".
  static Vocabulary numbered(std::size_t n);

  std::uint32_t add(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // Order-sensitive fingerprint of the label list.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Immutable after construction; safe for concurrent reads.
class KnowledgeGraph {
 public:
  using Index = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

  KnowledgeGraph() = default;
  // Triples are deduplicated and sorted; every id must be in range.
  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> triples);

  static KnowledgeGraph from_triples(std::size_t num_entities, std::size_t num_relations,
                                     std::vector<Triple> triples);

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }

  // Sorted tail set of (head, relation); empty when absent.
  std::span<const EntityId> tails(EntityId head, RelationId relation) const;
  // Sorted head set of (tail, relation); empty when absent.
  std::span<const EntityId> heads(EntityId tail, RelationId relation) const;
  bool contains(const Triple& t) const;

  const Index& by_head_relation() const { return by_head_rel_; }
  const Index& by_tail_relation() const { return by_tail_rel_; }

  static std::uint64_t key(std::uint32_t entity, RelationId relation) {
    return (static_cast<std::uint64_t>(entity) << 32) | relation;
  }

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  Index by_head_rel_;
  Index by_tail_rel_;
};

struct GraphLoadOptions {
  // Pre-existing vocabularies. When absent, labels are added as they appear.
  const Vocabulary* entity_vocabulary = nullptr;
  const Vocabulary* relation_vocabulary = nullptr;
  // With a supplied vocabulary, reject labels it does not contain.
  bool strict = false;
};

// Reads tab-separated head/relation/tail lines. Lines without a tab are split
// on whitespace. Blank lines are skipped.
KnowledgeGraph load_graph(std::istream& in, const GraphLoadOptions& options = {});
KnowledgeGraph load_graph_file(const std::string& path, const GraphLoadOptions& options = {});

void save_graph(std::ostream& out, const KnowledgeGraph& kg);
void save_graph_file(const std::string& path, const KnowledgeGraph& kg);

// One label per line, in id order.
Vocabulary load_vocabulary_file(const std::string& path);
void save_vocabulary_file(const std::string& path, const Vocabulary& vocab);

}  // namespace nqr

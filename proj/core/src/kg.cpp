#include "nqr/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr {

Vocabulary::Vocabulary(std::vector<std::string> names) {
  for (auto& n : names) {
    if (index_.contains(n)) fail(ErrorCode::kVocabulary, "duplicate label '" + n + "'");
    add(n);
  }
}

Vocabulary Vocabulary::numbered(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.add(std::to_string(i));
  return v;
}

std::uint32_t Vocabulary::add(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::name(std::uint32_t id) const {
  if (id >= names_.size()) fail(ErrorCode::kMissingEntity, "id " + std::to_string(id) + " out of range");
  return names_[id];
}

std::uint64_t Vocabulary::fingerprint() const {
  io::Fnv1a h;
  for (const auto& n : names_) {
    h.update(n);
    h.update(std::string_view("\n", 1));
  }
  return h.digest();
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> triples)
    : entities_(std::move(entities)), relations_(std::move(relations)), triples_(std::move(triples)) {
  for (const auto& t : triples_) {
    if (t.head >= entities_.size() || t.tail >= entities_.size()) {
      fail(ErrorCode::kMissingEntity, "triple references unknown entity");
    }
    if (t.relation >= relations_.size()) {
      fail(ErrorCode::kVocabulary, "triple references unknown relation");
    }
  }
  std::sort(triples_.begin(), triples_.end());
  triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
  // Sorted (h, r, t) order keeps every tail list sorted on insertion.
  for (const auto& t : triples_) by_head_rel_[key(t.head, t.relation)].push_back(t.tail);
  for (const auto& t : triples_) by_tail_rel_[key(t.tail, t.relation)].push_back(t.head);
  for (auto& [_, heads] : by_tail_rel_) std::sort(heads.begin(), heads.end());
}

KnowledgeGraph KnowledgeGraph::from_triples(std::size_t num_entities, std::size_t num_relations,
                                            std::vector<Triple> triples) {
  return KnowledgeGraph(Vocabulary::numbered(num_entities), Vocabulary::numbered(num_relations),
                        std::move(triples));
}

std::span<const EntityId> KnowledgeGraph::tails(EntityId head, RelationId relation) const {
  auto it = by_head_rel_.find(key(head, relation));
  if (it == by_head_rel_.end()) return {};
  return it->second;
}

std::span<const EntityId> KnowledgeGraph::heads(EntityId tail, RelationId relation) const {
  auto it = by_tail_rel_.find(key(tail, relation));
  if (it == by_tail_rel_.end()) return {};
  return it->second;
}

bool KnowledgeGraph::contains(const Triple& t) const {
  auto ts = tails(t.head, t.relation);
  return std::binary_search(ts.begin(), ts.end(), t.tail);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  if (line.find('\t') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      auto pos = line.find('\t', start);
      fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return fields;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::uint32_t resolve(Vocabulary& vocab, std::string_view label, bool strict, bool have_vocab,
                      std::size_t line_no, const char* what) {
  if (strict && have_vocab) {
    auto id = vocab.find(label);
    if (!id) {
      fail(ErrorCode::kVocabulary, "line " + std::to_string(line_no) + ": unknown " + what + " '" +
                                       std::string(label) + "'");
    }
    return *id;
  }
  return vocab.add(label);
}

}  // namespace

KnowledgeGraph load_graph(std::istream& in, const GraphLoadOptions& options) {
  Vocabulary entities = options.entity_vocabulary ? *options.entity_vocabulary : Vocabulary{};
  Vocabulary relations = options.relation_vocabulary ? *options.relation_vocabulary : Vocabulary{};
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
    }
    Triple t;
    t.head = resolve(entities, fields[0], options.strict, options.entity_vocabulary, line_no, "entity");
    t.relation =
        resolve(relations, fields[1], options.strict, options.relation_vocabulary, line_no, "relation");
    t.tail = resolve(entities, fields[2], options.strict, options.entity_vocabulary, line_no, "entity");
    triples.push_back(t);
  }
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triples));
}

KnowledgeGraph load_graph_file(const std::string& path, const GraphLoadOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load_graph(in, options);
}

void save_graph(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& t : kg.triples()) {
    out << kg.entities().name(t.head) << '\t' << kg.relations().name(t.relation) << '\t'
        << kg.entities().name(t.tail) << '\n';
  }
}

void save_graph_file(const std::string& path, const KnowledgeGraph& kg) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  save_graph(out, kg);
}

Vocabulary load_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (v.find(line)) fail(ErrorCode::kParse, path + " line " + std::to_string(line_no) + ": duplicate label");
    v.add(line);
  }
  return v;
}

void save_vocabulary_file(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto& name : vocab.names()) out << name << '\n';
}

}  // namespace nqr

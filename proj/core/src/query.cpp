#include "nqr/query.hpp"

#include <algorithm>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"

namespace nqr {

namespace {

struct StructureInfo {
  QueryStructure structure;
  std::string_view name;
  std::size_t anchors;
  std::uint32_t variables;  // including the target, which is the last one
  // Atom pattern; subject "aN" = anchor N, "xN" = variable N; object is a variable.
  std::vector<Atom> atoms;
  std::vector<std::vector<std::uint32_t>> dnf;
};

Atom atom(Term subject, std::uint32_t object, bool negated = false) {
  return Atom{subject, 0, object, negated};
}

const std::vector<StructureInfo>& structure_table() {
  using T = Term;
  static const std::vector<StructureInfo> table = {
      {QueryStructure::k1p, "1p", 1, 1, {atom(T::anchor(0), 0)}, {{0}}},
      {QueryStructure::k2p, "2p", 1, 2, {atom(T::anchor(0), 0), atom(T::variable(0), 1)}, {{0, 1}}},
      {QueryStructure::k3p, "3p", 1, 3,
       {atom(T::anchor(0), 0), atom(T::variable(0), 1), atom(T::variable(1), 2)}, {{0, 1, 2}}},
      {QueryStructure::k2i, "2i", 2, 1, {atom(T::anchor(0), 0), atom(T::anchor(1), 0)}, {{0, 1}}},
      {QueryStructure::k3i, "3i", 3, 1,
       {atom(T::anchor(0), 0), atom(T::anchor(1), 0), atom(T::anchor(2), 0)}, {{0, 1, 2}}},
      {QueryStructure::kIp, "ip", 2, 2,
       {atom(T::anchor(0), 0), atom(T::anchor(1), 0), atom(T::variable(0), 1)}, {{0, 1, 2}}},
      {QueryStructure::kPi, "pi", 2, 2,
       {atom(T::anchor(0), 0), atom(T::variable(0), 1), atom(T::anchor(1), 1)}, {{0, 1, 2}}},
      {QueryStructure::k2in, "2in", 2, 1, {atom(T::anchor(0), 0), atom(T::anchor(1), 0, true)}, {{0, 1}}},
      {QueryStructure::k3in, "3in", 3, 1,
       {atom(T::anchor(0), 0), atom(T::anchor(1), 0), atom(T::anchor(2), 0, true)}, {{0, 1, 2}}},
      {QueryStructure::kInp, "inp", 2, 2,
       {atom(T::anchor(0), 0), atom(T::anchor(1), 0, true), atom(T::variable(0), 1)}, {{0, 1, 2}}},
      {QueryStructure::kPin, "pin", 2, 2,
       {atom(T::anchor(0), 0), atom(T::variable(0), 1), atom(T::anchor(1), 1, true)}, {{0, 1, 2}}},
      {QueryStructure::kPni, "pni", 2, 2,
       {atom(T::anchor(0), 0), atom(T::variable(0), 1, true), atom(T::anchor(1), 1)}, {{0, 1, 2}}},
      {QueryStructure::k2u, "2u", 2, 1, {atom(T::anchor(0), 0), atom(T::anchor(1), 0)}, {{0}, {1}}},
      {QueryStructure::kUp, "up", 2, 2,
       {atom(T::anchor(0), 0), atom(T::anchor(1), 0), atom(T::variable(0), 1)}, {{0, 2}, {1, 2}}},
  };
  return table;
}

const StructureInfo& info(QueryStructure s) { return structure_table()[structure_index(s)]; }

using EntitySet = std::vector<EntityId>;

EntitySet image(const KnowledgeGraph& kg, const EntitySet& subjects, RelationId r) {
  EntitySet out;
  for (EntityId s : subjects) {
    auto ts = kg.tails(s, r);
    out.insert(out.end(), ts.begin(), ts.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Entities v with r(u, v) for every u in subjects; subjects is nonempty.
EntitySet common_tails(const KnowledgeGraph& kg, const EntitySet& subjects, RelationId r) {
  auto first = kg.tails(subjects.front(), r);
  EntitySet acc(first.begin(), first.end());
  for (std::size_t i = 1; i < subjects.size() && !acc.empty(); ++i) {
    auto ts = kg.tails(subjects[i], r);
    EntitySet next;
    std::set_intersection(acc.begin(), acc.end(), ts.begin(), ts.end(), std::back_inserter(next));
    acc.swap(next);
  }
  return acc;
}

class ConjunctEvaluator {
 public:
  ConjunctEvaluator(const KnowledgeGraph& kg, const QueryGraph& q, std::span<const std::uint32_t> atom_ids)
      : kg_(kg), q_(q), incoming_(q.num_variables), outgoing_(q.num_variables, 0) {
    for (auto id : atom_ids) {
      const Atom& a = q.atoms[id];
      incoming_[a.object].push_back(id);
      if (a.subject.kind == Term::Kind::kVariable) ++outgoing_[a.subject.index];
    }
    for (std::uint32_t v = 0; v < q.num_variables; ++v) {
      if (v == q.target ? outgoing_[v] != 0 : outgoing_[v] > 1) {
        fail(ErrorCode::kUnsupportedQuery, "query variables must form a tree rooted at the target");
      }
    }
  }

  EntitySet evaluate() { return eval_var(q_.target, 0); }

 private:
  EntitySet eval_var(std::uint32_t v, int depth) {
    if (depth > static_cast<int>(q_.num_variables)) {
      fail(ErrorCode::kUnsupportedQuery, "cyclic query graph");
    }
    std::vector<EntitySet> positive;
    std::vector<EntitySet> negative;
    bool unsatisfiable = false;
    for (auto id : incoming_[v]) {
      const Atom& a = q_.atoms[id];
      EntitySet subjects = a.subject.kind == Term::Kind::kAnchor
                               ? EntitySet{q_.anchors[a.subject.index]}
                               : eval_var(a.subject.index, depth + 1);
      if (!a.negated) {
        positive.push_back(image(kg_, subjects, a.relation));
      } else if (subjects.empty()) {
        unsatisfiable = true;
      } else {
        // Some binding u of the subject must lack r(u, v): v survives unless
        // every admissible u links to it.
        negative.push_back(common_tails(kg_, subjects, a.relation));
      }
    }
    if (positive.empty()) {
      fail(ErrorCode::kUnsupportedQuery, "variable without a positive atom (negation-only is unsafe)");
    }
    if (unsatisfiable) return {};
    std::sort(positive.begin(), positive.end(),
              [](const EntitySet& a, const EntitySet& b) { return a.size() < b.size(); });
    EntitySet acc = std::move(positive.front());
    for (std::size_t i = 1; i < positive.size() && !acc.empty(); ++i) {
      EntitySet next;
      std::set_intersection(acc.begin(), acc.end(), positive[i].begin(), positive[i].end(),
                            std::back_inserter(next));
      acc.swap(next);
    }
    for (const auto& neg : negative) {
      EntitySet next;
      std::set_difference(acc.begin(), acc.end(), neg.begin(), neg.end(), std::back_inserter(next));
      acc.swap(next);
    }
    return acc;
  }

  const KnowledgeGraph& kg_;
  const QueryGraph& q_;
  std::vector<std::vector<std::uint32_t>> incoming_;
  std::vector<int> outgoing_;
};

}  // namespace

std::string_view to_string(QueryStructure s) { return info(s).name; }

QueryStructure parse_structure(std::string_view name) {
  for (const auto& i : structure_table()) {
    if (i.name == name) return i.structure;
  }
  fail(ErrorCode::kParse, "unknown query structure '" + std::string(name) + "'");
}

std::size_t structure_index(QueryStructure s) { return static_cast<std::size_t>(s); }

bool has_negation(QueryStructure s) {
  return s == QueryStructure::k2in || s == QueryStructure::k3in || s == QueryStructure::kInp ||
         s == QueryStructure::kPin || s == QueryStructure::kPni;
}

std::size_t anchor_count(QueryStructure s) { return info(s).anchors; }
std::size_t relation_count(QueryStructure s) { return info(s).atoms.size(); }

QueryGraph make_query(QueryStructure structure, std::span<const EntityId> anchors,
                      std::span<const RelationId> relations) {
  const auto& si = info(structure);
  if (anchors.size() != si.anchors || relations.size() != si.atoms.size()) {
    fail(ErrorCode::kInvalidArgument, std::string(si.name) + " query needs " + std::to_string(si.anchors) +
                                          " anchors and " + std::to_string(si.atoms.size()) + " relations");
  }
  QueryGraph q;
  q.structure = structure;
  q.anchors.assign(anchors.begin(), anchors.end());
  q.atoms = si.atoms;
  for (std::size_t i = 0; i < q.atoms.size(); ++i) q.atoms[i].relation = relations[i];
  q.num_variables = si.variables;
  q.target = si.variables - 1;
  q.dnf = si.dnf;
  return q;
}

void validate(const QueryGraph& q, const KnowledgeGraph* kg) {
  const auto& si = info(q.structure);
  if (q.anchors.size() != si.anchors || q.atoms.size() != si.atoms.size()) {
    fail(ErrorCode::kInvalidArgument, "atom pattern does not match structure " + std::string(si.name));
  }
  std::vector<RelationId> relations;
  for (const auto& a : q.atoms) relations.push_back(a.relation);
  if (!(make_query(q.structure, q.anchors, relations) == q)) {
    fail(ErrorCode::kInvalidArgument, "atom pattern does not match structure " + std::string(si.name));
  }
  if (kg) {
    for (auto e : q.anchors) {
      if (e >= kg->num_entities()) fail(ErrorCode::kMissingEntity, "anchor " + std::to_string(e) + " out of range");
    }
    for (auto r : relations) {
      if (r >= kg->num_relations()) fail(ErrorCode::kVocabulary, "relation " + std::to_string(r) + " out of range");
    }
  }
}

std::vector<EntityId> evaluate_query(const KnowledgeGraph& kg, const QueryGraph& q) {
  EntitySet result;
  for (const auto& conjunct : q.dnf) {
    for (auto id : conjunct) {
      if (id >= q.atoms.size()) fail(ErrorCode::kInvalidArgument, "dnf references missing atom");
    }
    EntitySet part = ConjunctEvaluator(kg, q, conjunct).evaluate();
    EntitySet merged;
    std::set_union(result.begin(), result.end(), part.begin(), part.end(), std::back_inserter(merged));
    result.swap(merged);
  }
  return result;
}

AnswerSet answer_query(const KnowledgeGraph& full, const KnowledgeGraph* train, const QueryGraph& q) {
  AnswerSet out;
  out.answers = evaluate_query(full, q);
  if (!train) {
    out.easy_answers = out.answers;
    return out;
  }
  auto reachable = evaluate_query(*train, q);
  std::set_intersection(out.answers.begin(), out.answers.end(), reachable.begin(), reachable.end(),
                        std::back_inserter(out.easy_answers));
  std::set_difference(out.answers.begin(), out.answers.end(), out.easy_answers.begin(),
                      out.easy_answers.end(), std::back_inserter(out.hard_answers));
  return out;
}

QuerySampler::QuerySampler(const KnowledgeGraph& kg) : kg_(kg), incoming_(kg.num_entities()) {
  const auto& triples = kg.triples();
  for (std::size_t i = 0; i < triples.size(); ++i) {
    incoming_[triples[i].tail].push_back(static_cast<std::uint32_t>(i));
  }
  for (EntityId e = 0; e < incoming_.size(); ++e) {
    if (!incoming_[e].empty()) targets_.push_back(e);
  }
}

std::optional<QueryGraph> QuerySampler::sample(QueryStructure structure, std::mt19937_64& rng,
                                               int max_tries) const {
  const auto& si = info(structure);
  const auto& triples = kg_.triples();
  if (targets_.empty()) return std::nullopt;
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  for (int attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<std::optional<EntityId>> vars(si.variables);
    std::vector<EntityId> anchors(si.anchors, 0);
    std::vector<RelationId> relations(si.atoms.size(), 0);
    std::vector<bool> grounded(si.atoms.size(), false);
    vars[si.variables - 1] = targets_[pick(targets_.size())];
    bool ok = true;
    std::size_t remaining = si.atoms.size();
    while (ok && remaining > 0) {
      bool progressed = false;
      for (std::size_t i = 0; i < si.atoms.size() && ok; ++i) {
        const Atom& a = si.atoms[i];
        if (grounded[i] || !vars[a.object]) continue;
        EntityId object = *vars[a.object];
        const Triple* chosen = nullptr;
        if (!a.negated) {
          const auto& in = incoming_[object];
          if (in.empty()) {
            ok = false;
            break;
          }
          chosen = &triples[in[pick(in.size())]];
        } else {
          for (int k = 0; k < 32; ++k) {
            const Triple& t = triples[pick(triples.size())];
            if (t.tail != object && !kg_.contains({t.head, t.relation, object})) {
              chosen = &t;
              break;
            }
          }
          if (!chosen) {
            ok = false;
            break;
          }
        }
        relations[i] = chosen->relation;
        if (a.subject.kind == Term::Kind::kAnchor) {
          anchors[a.subject.index] = chosen->head;
        } else {
          vars[a.subject.index] = chosen->head;
        }
        grounded[i] = true;
        --remaining;
        progressed = true;
      }
      if (!progressed) ok = false;
    }
    if (!ok) continue;
    // Reject degenerate intersections that repeat the same anchor/relation.
    bool duplicate = false;
    for (std::size_t i = 0; i < si.atoms.size(); ++i) {
      for (std::size_t j = i + 1; j < si.atoms.size(); ++j) {
        const Atom& a = si.atoms[i];
        const Atom& b = si.atoms[j];
        if (a.subject.kind == Term::Kind::kAnchor && b.subject.kind == Term::Kind::kAnchor &&
            a.object == b.object && relations[i] == relations[j] &&
            anchors[a.subject.index] == anchors[b.subject.index]) {
          duplicate = true;
        }
      }
    }
    if (duplicate) continue;
    QueryGraph q = make_query(structure, anchors, relations);
    if (!evaluate_query(kg_, q).empty()) return q;
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const QueryGraph& q) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : q.atoms) {
    nlohmann::json subject;
    if (a.subject.kind == Term::Kind::kAnchor) {
      subject["anchor"] = a.subject.index;
    } else {
      subject["var"] = a.subject.index;
    }
    atoms.push_back({{"subject", subject}, {"relation", a.relation}, {"object", a.object}, {"negated", a.negated}});
  }
  j = nlohmann::json{{"structure", to_string(q.structure)},
                     {"anchors", q.anchors},
                     {"atoms", atoms},
                     {"num_variables", q.num_variables},
                     {"target", q.target},
                     {"dnf", q.dnf}};
}

void from_json(const nlohmann::json& j, QueryGraph& q) {
  try {
    q.structure = parse_structure(j.at("structure").get<std::string>());
    q.anchors = j.at("anchors").get<std::vector<EntityId>>();
    q.atoms.clear();
    for (const auto& ja : j.at("atoms")) {
      Atom a;
      const auto& s = ja.at("subject");
      if (s.contains("anchor")) {
        a.subject = Term::anchor(s.at("anchor").get<std::uint32_t>());
      } else {
        a.subject = Term::variable(s.at("var").get<std::uint32_t>());
      }
      a.relation = ja.at("relation").get<RelationId>();
      a.object = ja.at("object").get<std::uint32_t>();
      a.negated = ja.value("negated", false);
      q.atoms.push_back(a);
    }
    q.num_variables = j.at("num_variables").get<std::uint32_t>();
    q.target = j.at("target").get<std::uint32_t>();
    q.dnf = j.at("dnf").get<std::vector<std::vector<std::uint32_t>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed query graph: ") + e.what());
  }
  validate(q);
}

}  // namespace nqr

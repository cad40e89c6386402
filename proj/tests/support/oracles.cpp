#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nqr::testing {

std::vector<EntityId> brute_force_answers(const KnowledgeGraph& kg, const QueryGraph& q) {
  const std::size_t n = kg.num_entities();
  const std::size_t nv = q.num_variables;
  std::vector<char> is_answer(n, 0);
  std::vector<EntityId> binding(nv, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i < nv; ++i) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < nv; ++i) {
      binding[i] = static_cast<EntityId>(c % n);
      c /= n;
    }
    if (is_answer[binding[q.target]]) continue;
    for (const auto& conj : q.dnf) {
      bool ok = true;
      for (auto id : conj) {
        const Atom& a = q.atoms[id];
        const EntityId s =
            a.subject.kind == Term::Kind::kAnchor ? q.anchors[a.subject.index] : binding[a.subject.index];
        const bool edge = kg.contains({s, a.relation, binding[a.object]});
        if (edge == a.negated) {
          ok = false;
          break;
        }
      }
      if (ok) {
        is_answer[binding[q.target]] = 1;
        break;
      }
    }
  }
  std::vector<EntityId> out;
  for (std::size_t e = 0; e < n; ++e) {
    if (is_answer[e]) out.push_back(static_cast<EntityId>(e));
  }
  return out;
}

Dendrogram naive_hac(const std::vector<std::vector<double>>& vectors) {
  const std::size_t n = vectors.size();
  auto cosine_distance = [&](std::size_t i, std::size_t j) {
    double dot = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < vectors[i].size(); ++k) {
      dot += vectors[i][k] * vectors[j][k];
      a += vectors[i][k] * vectors[i][k];
      b += vectors[j][k] * vectors[j][k];
    }
    return 1.0 - std::clamp(dot / std::sqrt(a * b), -1.0, 1.0);
  };
  struct Cluster {
    std::uint32_t node;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<std::uint32_t>(i), {i}});
  Dendrogram d;
  d.leaves.resize(n);
  std::iota(d.leaves.begin(), d.leaves.end(), 0);
  double last = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint32_t, std::uint32_t> best_key{};
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        double sum = 0.0;
        for (auto a : active[i].members) {
          for (auto b : active[j].members) sum += cosine_distance(a, b);
        }
        const double avg = sum / static_cast<double>(active[i].members.size() * active[j].members.size());
        std::pair<std::uint32_t, std::uint32_t> key{std::min(active[i].node, active[j].node),
                                                    std::max(active[i].node, active[j].node)};
        if (avg < best - 1e-12 || (std::abs(avg - best) <= 1e-12 && key < best_key)) {
          best = avg;
          best_key = key;
          bi = i;
          bj = j;
        }
      }
    }
    best = std::max(best, last);
    last = best;
    Cluster merged{static_cast<std::uint32_t>(n + step), active[bi].members};
    merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
    d.merges.push_back({best_key.first, best_key.second, best, static_cast<std::uint32_t>(merged.members.size())});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back(std::move(merged));
  }
  return d;
}

double brute_force_pa(std::span<const double> scores, std::span<const EntityId> pos, std::span<const EntityId> neg) {
  std::size_t wins = 0;
  for (auto p : pos) {
    for (auto q : neg) wins += scores[p] > scores[q] ? 1 : 0;
  }
  return static_cast<double>(wins) / static_cast<double>(pos.size() * neg.size());
}

std::size_t sort_scan_rank(std::span<const double> scores, EntityId e, std::span<const EntityId> known) {
  std::vector<EntityId> candidates;
  for (std::size_t x = 0; x < scores.size(); ++x) {
    const bool other_known = x != e && std::find(known.begin(), known.end(), x) != known.end();
    if (!other_known) candidates.push_back(static_cast<EntityId>(x));
  }
  // ties: competitors first, then e
  std::sort(candidates.begin(), candidates.end(), [&](EntityId a, EntityId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (a == e) return false;
    if (b == e) return true;
    return a < b;
  });
  return static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), e) - candidates.begin()) + 1;
}

RankingMetrics sort_scan_metrics(std::span<const double> scores, std::span<const EntityId> answers) {
  RankingMetrics m;
  for (auto a : answers) {
    const auto r = sort_scan_rank(scores, a, answers);
    m.mrr += 1.0 / static_cast<double>(r);
    m.hits1 += r <= 1;
    m.hits3 += r <= 3;
    m.hits10 += r <= 10;
  }
  const double n = static_cast<double>(answers.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

KnowledgeGraph random_graph(std::size_t num_entities, std::size_t num_relations, std::size_t num_triples,
                            std::mt19937_64& rng) {
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(num_entities - 1));
  std::uniform_int_distribution<RelationId> rel(0, static_cast<RelationId>(num_relations - 1));
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < num_triples; ++i) triples.push_back({ent(rng), rel(rng), ent(rng)});
  return KnowledgeGraph::from_triples(num_entities, num_relations, std::move(triples));
}

QueryGraph random_query(QueryStructure s, std::size_t num_entities, std::size_t num_relations, std::mt19937_64& rng) {
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(num_entities - 1));
  std::uniform_int_distribution<RelationId> rel(0, static_cast<RelationId>(num_relations - 1));
  std::vector<EntityId> anchors(anchor_count(s));
  for (auto& a : anchors) a = ent(rng);
  std::vector<RelationId> relations(relation_count(s));
  for (auto& r : relations) r = rel(rng);
  return make_query(s, anchors, relations);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace nqr::testing

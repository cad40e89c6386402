#include "nqr/prefgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "nqr/error.hpp"
#include "nqr/query.hpp"
#include "nqr/random.hpp"

namespace nqr {

std::uint32_t Dendrogram::node_size(std::uint32_t node) const {
  const std::size_t n = leaves.size();
  if (node < n) return 1;
  if (node - n >= merges.size()) fail(ErrorCode::kInvalidArgument, "node " + std::to_string(node) + " out of range");
  return merges[node - n].size;
}

std::vector<std::uint32_t> Dendrogram::members(std::uint32_t node) const {
  const std::size_t n = leaves.size();
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> stack{node};
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    if (cur < n) {
      out.push_back(cur);
      continue;
    }
    if (cur - n >= merges.size()) fail(ErrorCode::kInvalidArgument, "node " + std::to_string(cur) + " out of range");
    const auto& m = merges[cur - n];
    stack.push_back(m.left);
    stack.push_back(m.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dendrogram hac_average_linkage(const std::vector<std::vector<double>>& vectors, std::vector<EntityId> leaves) {
  const std::size_t n = vectors.size();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "clustering needs at least 2 vectors");
  if (leaves.empty()) {
    leaves.resize(n);
    for (std::size_t i = 0; i < n; ++i) leaves[i] = static_cast<EntityId>(i);
  }
  if (leaves.size() != n) fail(ErrorCode::kShapeMismatch, "leaf count does not match vector count");
  const std::size_t dim = vectors[0].size();
  for (const auto& v : vectors) {
    if (v.size() != dim) fail(ErrorCode::kShapeMismatch, "vectors differ in length");
  }

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - cosine_similarity(vectors[i], vectors[j]);
      dist[i * n + j] = dist[j * n + i] = d;
    }
  }

  // slot i holds one active cluster; merged clusters live in the lower slot
  std::vector<std::uint32_t> node(n);
  std::vector<std::uint32_t> size(n, 1);
  std::vector<char> active(n, 1);
  for (std::size_t i = 0; i < n; ++i) node[i] = static_cast<std::uint32_t>(i);

  Dendrogram out;
  out.leaves = std::move(leaves);
  out.merges.reserve(n - 1);
  double last = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t ba = 0, bb = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint32_t, std::uint32_t> best_key{};
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double d = dist[a * n + b];
        const std::pair<std::uint32_t, std::uint32_t> key{std::min(node[a], node[b]), std::max(node[a], node[b])};
        if (d < best || (d == best && key < best_key)) {
          best = d;
          best_key = key;
          ba = a;
          bb = b;
        }
      }
    }
    // roundoff in the averaged distances can dip below the previous merge
    best = std::max(best, last);
    last = best;
    const std::uint32_t merged_size = size[ba] + size[bb];
    out.merges.push_back({best_key.first, best_key.second, best, merged_size});

    const double wa = static_cast<double>(size[ba]) / merged_size;
    const double wb = static_cast<double>(size[bb]) / merged_size;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba || k == bb) continue;
      const double d = wa * dist[ba * n + k] + wb * dist[bb * n + k];
      dist[ba * n + k] = dist[k * n + ba] = d;
    }
    active[bb] = 0;
    size[ba] = merged_size;
    node[ba] = static_cast<std::uint32_t>(n + step);
  }
  check_dendrogram(out);
  return out;
}

Dendrogram cluster_answers(const EmbeddingTable& table, std::span<const EntityId> answers) {
  std::vector<EntityId> sorted(answers.begin(), answers.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCode::kInvalidArgument, "duplicate answer entity");
  }
  std::vector<std::vector<double>> vectors;
  vectors.reserve(sorted.size());
  for (EntityId e : sorted) {
    const auto row = table.row(e);
    vectors.emplace_back(row.begin(), row.end());
  }
  return hac_average_linkage(vectors, std::move(sorted));
}

void check_dendrogram(const Dendrogram& d) {
  const std::size_t n = d.leaves.size();
  if (n < 1 || d.merges.size() + 1 != n) fail(ErrorCode::kInvalidArgument, "dendrogram needs n-1 merges");
  std::vector<char> used(2 * n - 1, 0);
  double last = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    if (m.left >= n + k || m.right >= n + k || m.left == m.right || used[m.left] || used[m.right]) {
      fail(ErrorCode::kInvalidArgument, "merge " + std::to_string(k) + " has invalid children");
    }
    used[m.left] = used[m.right] = 1;
    if (m.size != d.node_size(m.left) + d.node_size(m.right)) {
      fail(ErrorCode::kInvalidArgument, "merge " + std::to_string(k) + " size mismatch");
    }
    if (m.distance < last) fail(ErrorCode::kInvalidArgument, "linkage distance decreases at merge " + std::to_string(k));
    last = m.distance;
  }
}

std::vector<PreferenceSet> partition_answers(const Dendrogram& dendrogram, std::span<const EntityId> answers,
                                             double min_fraction, std::size_t max_sets) {
  if (!(min_fraction > 0.0 && min_fraction < 1.0)) fail(ErrorCode::kInvalidArgument, "min_fraction must be in (0,1)");
  const std::size_t n = dendrogram.num_leaves();
  {
    std::vector<EntityId> a(answers.begin(), answers.end());
    std::vector<EntityId> l = dendrogram.leaves;
    std::sort(a.begin(), a.end());
    std::sort(l.begin(), l.end());
    if (a != l) fail(ErrorCode::kInvalidArgument, "answers do not match dendrogram leaves");
  }
  std::vector<PreferenceSet> out;
  if (n < 2 || max_sets == 0) return out;

  // guard so that e.g. 0.2 * 10 does not round up to 3
  const auto threshold = static_cast<std::size_t>(std::ceil(min_fraction * static_cast<double>(n) - 1e-9));

  std::vector<EntityId> all = dendrogram.leaves;
  std::sort(all.begin(), all.end());

  std::priority_queue<std::uint32_t> frontier;
  const auto& root = dendrogram.merges.back();
  frontier.push(root.left);
  frontier.push(root.right);
  std::set<std::vector<EntityId>> emitted;
  while (!frontier.empty() && out.size() < max_sets) {
    const std::uint32_t node = frontier.top();
    frontier.pop();
    if (dendrogram.node_size(node) < threshold) continue;
    if (node >= n) {
      const auto& m = dendrogram.merges[node - n];
      frontier.push(m.left);
      frontier.push(m.right);
    }
    std::vector<EntityId> positives;
    for (auto leaf : dendrogram.members(node)) positives.push_back(dendrogram.leaves[leaf]);
    std::sort(positives.begin(), positives.end());
    if (positives.size() == n || !emitted.insert(positives).second) continue;

    PreferenceSet set;
    set.source_cluster = node;
    set.pairs.reserve(n);
    for (EntityId e : all) {
      const bool pos = std::binary_search(positives.begin(), positives.end(), e);
      set.pairs.push_back({e, static_cast<std::uint8_t>(pos ? 1 : 0)});
    }
    out.push_back(std::move(set));
  }
  return out;
}

BenchmarkResult generate_benchmark(const KnowledgeGraph& kg, const KnowledgeGraph* train_kg,
                                   const std::vector<QueryInstance>& queries, const EmbeddingTable& table,
                                   const BenchmarkOptions& options) {
  if (options.min_answers > options.max_answers) fail(ErrorCode::kInvalidArgument, "min_answers > max_answers");
  BenchmarkResult result;
  for (const auto& input : queries) {
    ++result.stats.considered;
    if (input.split == Split::kTrain && input.query.structure != QueryStructure::k1p) {
      ++result.stats.non_1p_train;
      continue;
    }
    AnswerSet answers = answer_query(kg, train_kg, input.query);
    const std::size_t count = answers.answers.size();
    if (count < options.min_answers) {
      ++result.stats.too_few_answers;
      continue;
    }
    if (count > options.max_answers) {
      ++result.stats.too_many_answers;
      continue;
    }
    const Dendrogram dend = cluster_answers(table, answers.answers);
    auto sets = partition_answers(dend, answers.answers, options.min_fraction, options.per_query);
    if (sets.size() < options.per_query) {
      ++result.stats.insufficient_sets;
      continue;
    }
    const std::uint64_t qseed = derive_seed(options.seed, input.id);
    for (std::size_t s = 0; s < sets.size(); ++s) {
      std::mt19937_64 rng(derive_seed(qseed, s));
      std::shuffle(sets[s].pairs.begin(), sets[s].pairs.end(), rng);
    }
    QueryInstance inst;
    inst.id = input.id;
    inst.split = input.split;
    inst.query = input.query;
    inst.answers = std::move(answers);
    inst.preference_sets = std::move(sets);
    result.dataset.instances.push_back(std::move(inst));
    ++result.stats.kept;
  }
  return result;
}

DatasetCounts count_dataset(const Dataset& d) {
  DatasetCounts c;
  for (const auto& q : d.instances) {
    const auto s = static_cast<std::size_t>(q.split);
    const auto k = structure_index(q.query.structure);
    c.queries[s][k] += 1;
    c.preference_sets[s][k] += q.preference_sets.size();
  }
  return c;
}

std::string format_stats(const DatasetCounts& counts) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-6s %-12s", "split", "kind");
  out << buf;
  for (auto s : kAllStructures) {
    std::snprintf(buf, sizeof buf, " %7s", std::string(to_string(s)).c_str());
    out << buf;
  }
  out << "   Total\n";
  for (std::size_t sp = 0; sp < 3; ++sp) {
    for (int kind = 0; kind < 2; ++kind) {
      const auto& row = kind == 0 ? counts.queries[sp] : counts.preference_sets[sp];
      std::snprintf(buf, sizeof buf, "%-6s %-12s", std::string(to_string(static_cast<Split>(sp))).c_str(),
                    kind == 0 ? "Queries" : "Preferences");
      out << buf;
      std::size_t total = 0;
      for (auto v : row) {
        total += v;
        std::snprintf(buf, sizeof buf, " %7zu", v);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, " %7zu\n", total);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace nqr

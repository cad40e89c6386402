#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nqr/dataset.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/kg.hpp"
#include "nqr/preference.hpp"

namespace nqr {

struct Merge {
  std::uint32_t left = 0;   // smaller node id
  std::uint32_t right = 0;  // larger node id
  double distance = 0.0;
  std::uint32_t size = 0;
};

// Binary merge tree. Leaves are nodes 0..n-1 (in `leaves` order); merge k
// creates node n+k. The root is node 2n-2.
struct Dendrogram {
  std::vector<EntityId> leaves;
  std::vector<Merge> merges;

  std::size_t num_leaves() const { return leaves.size(); }
  std::uint32_t root() const { return static_cast<std::uint32_t>(2 * leaves.size() - 2); }
  std::uint32_t node_size(std::uint32_t node) const;
  // Leaf positions (0..n-1) under a node, ascending.
  std::vector<std::uint32_t> members(std::uint32_t node) const;
};

// Average-linkage agglomerative clustering under cosine distance
// (1 - cosine similarity). Ties go to the smallest (left id, right id).
// Requires n >= 2 nonzero vectors. `leaves` defaults to 0..n-1.
Dendrogram hac_average_linkage(const std::vector<std::vector<double>>& vectors,
                               std::vector<EntityId> leaves = {});

// Clusters the answer embeddings in ascending entity-id order, so the result
// does not depend on the order answers are listed in.
Dendrogram cluster_answers(const EmbeddingTable& table, std::span<const EntityId> answers);

// Throws kInvalidArgument if distances decrease or sizes are inconsistent.
void check_dendrogram(const Dendrogram& d);

// Top-down cut: visit clusters in descending node id below the root; a
// cluster holding at least ceil(min_fraction * n) answers yields a set that
// labels its members 1 and every other answer 0 (pairs in entity-id order).
std::vector<PreferenceSet> partition_answers(const Dendrogram& dendrogram, std::span<const EntityId> answers,
                                             double min_fraction = 0.2, std::size_t max_sets = 5);

struct BenchmarkOptions {
  std::size_t min_answers = 10;
  std::size_t max_answers = 100;
  std::size_t per_query = 5;
  double min_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct BenchmarkStats {
  std::size_t considered = 0;
  std::size_t too_few_answers = 0;
  std::size_t too_many_answers = 0;
  std::size_t non_1p_train = 0;
  std::size_t insufficient_sets = 0;
  std::size_t kept = 0;
};

struct BenchmarkResult {
  Dataset dataset;
  BenchmarkStats stats;
};

// Keeps queries whose exact answer count lies in [min_answers, max_answers]
// and that yield `per_query` preference sets; train-split queries must be 1p.
// Each set's interaction order is a seeded shuffle derived from (seed, id).
BenchmarkResult generate_benchmark(const KnowledgeGraph& kg, const KnowledgeGraph* train_kg,
                                   const std::vector<QueryInstance>& queries, const EmbeddingTable& table,
                                   const BenchmarkOptions& options);

// Per split x structure query / preference-set counts.
struct DatasetCounts {
  std::array<std::array<std::size_t, 14>, 3> queries{};
  std::array<std::array<std::size_t, 14>, 3> preference_sets{};
};

DatasetCounts count_dataset(const Dataset& d);
// Table with rows (split, Queries|Preferences) and one column per structure plus Total.
std::string format_stats(const DatasetCounts& counts);

}  // namespace nqr

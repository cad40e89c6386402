#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nqr/kg.hpp"
#include "nqr/types.hpp"

namespace nqr {

// One d-dimensional vector per entity, stored as 32-bit floats (the on-disk
// precision) and consumed in double precision.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws kLoad on a size mismatch or a non-finite value.
  EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(EntityId e) const;
  const std::vector<float>& data() const { return data_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

enum class MatrixFormat { kBinary, kText };

// Binary layout: magic "NQEM", u64 rows, u64 dim, rows*dim little-endian f32
// in entity-id order. Text layout: one tab-separated row per line.
// The format is detected from the magic on load.
EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> expected_rows = {});
void save_embeddings(const std::string& path, const EmbeddingTable& table,
                     MatrixFormat format = MatrixFormat::kBinary);

struct SynthEmbeddingOptions {
  std::size_t n_clusters = 5;
  std::size_t dim = 64;
  double spread = 0.1;
  std::uint64_t seed = 0;
  // Reuse a previous cluster assignment (e.g. a second table over the same
  // latent clusters). Empty means draw a balanced random assignment.
  std::vector<std::uint32_t> assignment;
};

struct SynthesizedEmbeddings {
  EmbeddingTable table;
  std::vector<std::uint32_t> assignment;  // entity -> cluster
};

// vector(e) = normalize(centroid[cluster(e)] + spread * N(0, I)).
// Centroids are orthonormal whenever n_clusters <= dim.
SynthesizedEmbeddings synthesize_embeddings(std::size_t num_entities, const SynthEmbeddingOptions& options);
SynthesizedEmbeddings synthesize_embeddings(const KnowledgeGraph& kg, const SynthEmbeddingOptions& options);

// u.v / (|u||v|), clamped to [-1, 1]. Throws kInvalidArgument on a zero
// vector or a length mismatch.
double cosine_similarity(std::span<const float> u, std::span<const float> v);
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Several named tables per run (e.g. "text" for clustering, "qa" for the reranker).
class EmbeddingStore {
 public:
  void put(const std::string& name, EmbeddingTable table);
  const EmbeddingTable& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tables_.contains(name); }

 private:
  std::map<std::string, EmbeddingTable> tables_;
};

}  // namespace nqr

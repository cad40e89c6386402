#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nqr/dataset.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/metrics.hpp"
#include "nqr/model.hpp"
#include "nqr/scores.hpp"

namespace nqr {

struct CosineConfig {
  double alpha_p = 0.5;
  double alpha_n = 0.5;
};

// Throws kInvalidArgument unless both weights lie in (0, 1).
void validate(const CosineConfig& cfg);

// a[e] = base[e] + alpha_p * sum_{P+} sim(x, e) - alpha_n * sum_{P-} sim(x, e).
std::vector<double> cosine_rerank(std::span<const double> base, const PreferenceSet& p, const EmbeddingTable& table,
                                  const CosineConfig& cfg);

// Memoizes sim(x, .) rows; thread-safe.
class SimilarityCache {
 public:
  explicit SimilarityCache(std::shared_ptr<const EmbeddingTable> table) : table_(std::move(table)) {}

  std::shared_ptr<const std::vector<double>> row(EntityId x) const;
  const EmbeddingTable& table() const { return *table_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  mutable std::mutex mu_;
  mutable std::unordered_map<EntityId, std::shared_ptr<const std::vector<double>>> rows_;
};

class CosineReranker final : public Reranker {
 public:
  CosineReranker(std::shared_ptr<const SimilarityCache> cache, CosineConfig cfg);

  std::vector<double> rerank(std::span<const double> base, const PreferenceSet& p) const override;
  std::string name() const override { return "cosine"; }
  const CosineConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<const SimilarityCache> cache_;
  CosineConfig cfg_;
};

struct CosineTuneRow {
  CosineConfig config;
  double av_pa = 0.0;
  double av_mrr = 0.0;
  double objective = 0.0;
};

struct CosineTuneResult {
  CosineConfig best;
  std::vector<CosineTuneRow> rows;
};

inline const std::vector<double> kCosineGrid = {0.1, 0.25, 0.5, 0.75, 0.9};

// Runs the protocol for every (alpha_p, alpha_n) pair and keeps the largest
// AvPA + AvMRR (first row wins ties).
CosineTuneResult tune_cosine(const std::vector<const QueryInstance*>& validation, const ScoreMatrix& scores,
                             std::shared_ptr<const SimilarityCache> cache, const std::vector<double>& alpha_p_grid,
                             const std::vector<double>& alpha_n_grid, const ProtocolOptions& options = {});

void write_cosine_report(std::ostream& out, const CosineTuneResult& result);

}  // namespace nqr

#include "nqr/cosine.hpp"

#include <cstdio>
#include <ostream>

#include "nqr/error.hpp"

namespace nqr {

void validate(const CosineConfig& cfg) {
  if (!(cfg.alpha_p > 0.0 && cfg.alpha_p < 1.0) || !(cfg.alpha_n > 0.0 && cfg.alpha_n < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "cosine weights must lie in (0, 1)");
  }
}

namespace {

std::vector<double> combine(std::span<const double> base, const std::vector<double>& pos,
                            const std::vector<double>& neg, const CosineConfig& cfg) {
  std::vector<double> out(base.size());
  for (std::size_t e = 0; e < base.size(); ++e) out[e] = base[e] + cfg.alpha_p * pos[e] - cfg.alpha_n * neg[e];
  return out;
}

void check_base(std::span<const double> base, const EmbeddingTable& table) {
  if (base.size() != table.size()) {
    fail(ErrorCode::kShapeMismatch, "base scores cover " + std::to_string(base.size()) + " entities, table has " +
                                        std::to_string(table.size()));
  }
}

}  // namespace

std::vector<double> cosine_rerank(std::span<const double> base, const PreferenceSet& p, const EmbeddingTable& table,
                                  const CosineConfig& cfg) {
  check_base(base, table);
  if (p.pairs.empty()) return {base.begin(), base.end()};
  std::vector<double> pos(base.size(), 0.0), neg(base.size(), 0.0);
  for (const auto& pair : p.pairs) {
    const auto x = table.row(pair.entity);
    auto& acc = pair.label == 1 ? pos : neg;
    for (std::size_t e = 0; e < base.size(); ++e) acc[e] += cosine_similarity(x, table.row(static_cast<EntityId>(e)));
  }
  return combine(base, pos, neg, cfg);
}

std::shared_ptr<const std::vector<double>> SimilarityCache::row(EntityId x) const {
  {
    std::lock_guard lock(mu_);
    auto it = rows_.find(x);
    if (it != rows_.end()) return it->second;
  }
  const auto ex = table_->row(x);
  auto r = std::make_shared<std::vector<double>>(table_->size());
  for (std::size_t e = 0; e < r->size(); ++e) (*r)[e] = cosine_similarity(ex, table_->row(static_cast<EntityId>(e)));
  std::lock_guard lock(mu_);
  return rows_.emplace(x, std::move(r)).first->second;
}

CosineReranker::CosineReranker(std::shared_ptr<const SimilarityCache> cache, CosineConfig cfg)
    : cache_(std::move(cache)), cfg_(cfg) {
  if (!cache_) fail(ErrorCode::kInvalidArgument, "cosine reranker needs a similarity cache");
  validate(cfg_);
}

std::vector<double> CosineReranker::rerank(std::span<const double> base, const PreferenceSet& p) const {
  check_base(base, cache_->table());
  if (p.pairs.empty()) return {base.begin(), base.end()};
  std::vector<double> pos(base.size(), 0.0), neg(base.size(), 0.0);
  for (const auto& pair : p.pairs) {
    const auto r = cache_->row(pair.entity);
    auto& acc = pair.label == 1 ? pos : neg;
    for (std::size_t e = 0; e < base.size(); ++e) acc[e] += (*r)[e];
  }
  return combine(base, pos, neg, cfg_);
}

CosineTuneResult tune_cosine(const std::vector<const QueryInstance*>& validation, const ScoreMatrix& scores,
                             std::shared_ptr<const SimilarityCache> cache, const std::vector<double>& alpha_p_grid,
                             const std::vector<double>& alpha_n_grid, const ProtocolOptions& options) {
  if (alpha_p_grid.empty() || alpha_n_grid.empty()) fail(ErrorCode::kInvalidArgument, "empty cosine grid");
  if (validation.empty()) fail(ErrorCode::kInvalidArgument, "cosine tuning needs validation queries");
  CosineTuneResult result;
  double best = -1.0;
  for (double ap : alpha_p_grid) {
    for (double an : alpha_n_grid) {
      CosineReranker rr(cache, {ap, an});
      const auto traces = run_protocol_all(rr, validation, scores, options);
      const auto agg = aggregate(traces);
      CosineTuneRow row{{ap, an}, agg.overall.av_pa, agg.overall.av_mrr, agg.overall.av_pa + agg.overall.av_mrr};
      if (row.objective > best) {
        best = row.objective;
        result.best = row.config;
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

void write_cosine_report(std::ostream& out, const CosineTuneResult& result) {
  out << "alpha_p,alpha_n,AvPA,AvMRR,objective\n";
  for (const auto& r : result.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%g,%g,%.6f,%.6f,%.6f\n", r.config.alpha_p, r.config.alpha_n, r.av_pa, r.av_mrr,
                  r.objective);
    out << buf;
  }
}

}  // namespace nqr

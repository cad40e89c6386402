#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nqr/types.hpp"

namespace nqr {

// Base scores a(q) for a batch of queries, one dense row of |V| values each.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t num_entities, std::vector<QueryId> ids, std::vector<double> data);

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return cols_; }
  const std::vector<QueryId>& ids() const { return ids_; }
  const std::vector<double>& data() const { return data_; }

  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);
  // Row of a query id, or nullopt.
  std::optional<std::size_t> find(QueryId id) const;
  std::span<const double> at(QueryId id) const;  // throws kNotFound

  void append(QueryId id, std::span<const double> scores);

  bool operator==(const ScoreMatrix& o) const { return cols_ == o.cols_ && ids_ == o.ids_ && data_ == o.data_; }

 private:
  std::size_t cols_ = 0;
  std::vector<QueryId> ids_;
  std::vector<double> data_;
  std::unordered_map<QueryId, std::size_t> index_;
};

// Binary layout: magic "NQSC", u64 rows, u64 cols, rows*cols little-endian
// f64. Query ids live in a sidecar `<path>.ids`, one decimal id per line.
// Rows with a NaN or infinite cell are rejected naming (query, entity).
ScoreMatrix load_scores(const std::string& path, std::optional<std::size_t> expected_entities = {});
void save_scores(const std::string& path, const ScoreMatrix& scores);

// Maps each row onto [0, 1]. Constant rows become all zeros.
void minmax_normalize(std::span<double> row);
void minmax_normalize(ScoreMatrix& scores);

struct SyntheticScoreOptions {
  double mu_true = 1.0;
  double mu_false = 0.0;
  double sigma = 0.3;
  std::uint64_t seed = 0;
};

// Answers draw mu_true + N(0, sigma^2), everything else mu_false + N(0, sigma^2).
// Draws happen in entity order, so the vector only depends on the seed and
// the answer set.
std::vector<double> synthetic_scores(std::size_t num_entities, std::span<const EntityId> answers,
                                     const SyntheticScoreOptions& options);

}  // namespace nqr

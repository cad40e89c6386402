#include "nqr/scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr {

namespace {

constexpr std::string_view kScoreMagic = "NQSC";

void check_finite(QueryId id, std::span<const double> row) {
  for (std::size_t e = 0; e < row.size(); ++e) {
    if (!std::isfinite(row[e])) {
      fail(ErrorCode::kLoad, "non-finite score for query " + std::to_string(id) + ", entity " + std::to_string(e));
    }
  }
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t num_entities, std::vector<QueryId> ids, std::vector<double> data)
    : cols_(num_entities) {
  if (data.size() != ids.size() * num_entities) {
    fail(ErrorCode::kShapeMismatch, "score data size does not match rows*cols");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    append(ids[i], std::span<const double>(data).subspan(i * num_entities, num_entities));
  }
}

std::span<const double> ScoreMatrix::row(std::size_t i) const {
  if (i >= rows()) fail(ErrorCode::kNotFound, "score row " + std::to_string(i) + " out of range");
  return std::span<const double>(data_).subspan(i * cols_, cols_);
}

std::span<double> ScoreMatrix::row(std::size_t i) {
  if (i >= rows()) fail(ErrorCode::kNotFound, "score row " + std::to_string(i) + " out of range");
  return std::span<double>(data_).subspan(i * cols_, cols_);
}

std::optional<std::size_t> ScoreMatrix::find(QueryId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> ScoreMatrix::at(QueryId id) const {
  auto i = find(id);
  if (!i) fail(ErrorCode::kNotFound, "no scores for query " + std::to_string(id));
  return row(*i);
}

void ScoreMatrix::append(QueryId id, std::span<const double> scores) {
  if (rows() == 0 && cols_ == 0) cols_ = scores.size();
  if (scores.size() != cols_) {
    fail(ErrorCode::kShapeMismatch, "query " + std::to_string(id) + ": expected " + std::to_string(cols_) +
                                        " scores, got " + std::to_string(scores.size()));
  }
  check_finite(id, scores);
  if (!index_.emplace(id, ids_.size()).second) fail(ErrorCode::kConflict, "duplicate query id " + std::to_string(id));
  ids_.push_back(id);
  data_.insert(data_.end(), scores.begin(), scores.end());
}

ScoreMatrix load_scores(const std::string& path, std::optional<std::size_t> expected_entities) {
  std::vector<QueryId> ids;
  {
    std::ifstream sidecar(path + ".ids");
    if (!sidecar) fail(ErrorCode::kIo, "cannot open " + path + ".ids");
    std::string line;
    while (std::getline(sidecar, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        ids.push_back(std::stoull(line));
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, path + ".ids: bad query id '" + line + "'");
      }
    }
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  if (io::read_bytes(in, 4) != kScoreMagic) fail(ErrorCode::kLoad, path + ": not a score matrix");
  const std::uint64_t rows = io::read_u64(in);
  const std::uint64_t cols = io::read_u64(in);
  if (rows != ids.size()) {
    fail(ErrorCode::kLoad, path + ": " + std::to_string(rows) + " rows but " + std::to_string(ids.size()) + " ids");
  }
  if (expected_entities && cols != *expected_entities) {
    fail(ErrorCode::kShapeMismatch, path + ": rows have " + std::to_string(cols) + " scores, vocabulary has " +
                                        std::to_string(*expected_entities));
  }
  ScoreMatrix out;
  std::vector<double> buf(cols);
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (auto& v : buf) v = io::read_f64(in);
    out.append(ids[r], buf);
  }
  if (rows == 0) out = ScoreMatrix(cols, {}, {});
  return out;
}

void save_scores(const std::string& path, const ScoreMatrix& scores) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path);
    io::write_bytes(out, kScoreMagic);
    io::write_u64(out, scores.rows());
    io::write_u64(out, scores.cols());
    for (double v : scores.data()) io::write_f64(out, v);
    if (!out) fail(ErrorCode::kIo, "write failed: " + path);
  }
  std::ofstream ids(path + ".ids");
  if (!ids) fail(ErrorCode::kIo, "cannot write " + path + ".ids");
  for (auto id : scores.ids()) ids << id << '\n';
}

void minmax_normalize(std::span<double> row) {
  if (row.empty()) return;
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  const double a = *lo, range = *hi - *lo;
  for (auto& v : row) v = range > 0.0 ? (v - a) / range : 0.0;
}

void minmax_normalize(ScoreMatrix& scores) {
  for (std::size_t i = 0; i < scores.rows(); ++i) minmax_normalize(scores.row(i));
}

std::vector<double> synthetic_scores(std::size_t num_entities, std::span<const EntityId> answers,
                                     const SyntheticScoreOptions& options) {
  if (!(options.sigma >= 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  std::vector<char> is_answer(num_entities, 0);
  for (EntityId e : answers) {
    if (e >= num_entities) fail(ErrorCode::kMissingEntity, "answer " + std::to_string(e) + " out of range");
    is_answer[e] = 1;
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out(num_entities);
  for (std::size_t e = 0; e < num_entities; ++e) {
    const double z = noise(rng);
    out[e] = (is_answer[e] ? options.mu_true : options.mu_false) + options.sigma * z;
  }
  return out;
}

}  // namespace nqr

#include "nqr/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr {

namespace {

constexpr std::string_view kEmbeddingMagic = "NQEM";

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) fail(ErrorCode::kInvalidArgument, "cosine similarity of unequal lengths");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) fail(ErrorCode::kInvalidArgument, "cosine similarity of a zero vector");
  return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 && rows_ > 0) fail(ErrorCode::kLoad, "embedding dimension must be positive");
  if (data_.size() != rows_ * dim_) fail(ErrorCode::kLoad, "embedding data size does not match rows*dim");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(ErrorCode::kLoad, "non-finite embedding value in row " + std::to_string(i / dim_));
    }
  }
}

std::span<const float> EmbeddingTable::row(EntityId e) const {
  if (e >= rows_) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " has no embedding");
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(e) * dim_, dim_);
}

EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> expected_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  std::size_t rows = 0, dim = 0;
  std::vector<float> data;
  if (in.gcount() == 4 && std::string_view(magic, 4) == kEmbeddingMagic) {
    rows = io::read_u64(in);
    dim = io::read_u64(in);
    data.resize(rows * dim);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        float v = io::read_f32(in);
        if (!std::isfinite(v)) fail(ErrorCode::kLoad, path + ": non-finite value in row " + std::to_string(r));
        data[r * dim + c] = v;
      }
    }
  } else {
    in.clear();
    in.seekg(0);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream fields(line);
      std::string tok;
      std::size_t cols = 0;
      while (fields >> tok) {
        float v = 0.0f;
        try {
          v = std::stof(tok);
        } catch (const std::exception&) {
          // stof rejects "nan" spelled differently on some platforms; treat as non-finite.
          v = std::numeric_limits<float>::quiet_NaN();
        }
        if (!std::isfinite(v)) fail(ErrorCode::kLoad, path + ": non-finite value in row " + std::to_string(rows));
        data.push_back(v);
        ++cols;
      }
      if (rows == 0) dim = cols;
      if (cols != dim) fail(ErrorCode::kLoad, path + ": row " + std::to_string(rows) + " has dimension " +
                                                  std::to_string(cols) + ", expected " + std::to_string(dim));
      ++rows;
    }
  }
  if (expected_rows && rows != *expected_rows) {
    fail(ErrorCode::kLoad, path + ": " + std::to_string(rows) + " rows, expected " + std::to_string(*expected_rows));
  }
  return EmbeddingTable(rows, dim, std::move(data));
}

void save_embeddings(const std::string& path, const EmbeddingTable& table, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  if (format == MatrixFormat::kBinary) {
    io::write_bytes(out, kEmbeddingMagic);
    io::write_u64(out, table.size());
    io::write_u64(out, table.dim());
    for (float v : table.data()) io::write_f32(out, v);
    return;
  }
  out << std::setprecision(9);
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto row = table.row(static_cast<EntityId>(r));
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << row[c];
    out << '\n';
  }
}

SynthesizedEmbeddings synthesize_embeddings(std::size_t num_entities, const SynthEmbeddingOptions& o) {
  if (o.n_clusters < 2) fail(ErrorCode::kInvalidArgument, "n_clusters must be at least 2");
  if (o.dim < 2) fail(ErrorCode::kInvalidArgument, "dim must be at least 2");
  if (!(o.spread >= 0.0)) fail(ErrorCode::kInvalidArgument, "spread must be non-negative");
  if (o.n_clusters > num_entities) fail(ErrorCode::kInvalidArgument, "more clusters than entities");

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Gram-Schmidt on Gaussian draws; falls back to plain unit vectors once
  // the clusters outnumber the dimensions.
  std::vector<std::vector<double>> centroids;
  for (std::size_t k = 0; k < o.n_clusters; ++k) {
    std::vector<double> c(o.dim);
    for (auto& x : c) x = normal(rng);
    if (k < o.dim) {
      for (const auto& prev : centroids) {
        double proj = std::inner_product(c.begin(), c.end(), prev.begin(), 0.0);
        for (std::size_t i = 0; i < o.dim; ++i) c[i] -= proj * prev[i];
      }
    }
    double norm = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
    for (auto& x : c) x /= norm;
    centroids.push_back(std::move(c));
  }

  std::vector<std::uint32_t> assignment = o.assignment;
  if (assignment.empty()) {
    std::vector<EntityId> order(num_entities);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    assignment.resize(num_entities);
    for (std::size_t i = 0; i < num_entities; ++i) {
      assignment[order[i]] = static_cast<std::uint32_t>(i % o.n_clusters);
    }
  } else if (assignment.size() != num_entities) {
    fail(ErrorCode::kInvalidArgument, "assignment length does not match entity count");
  }

  std::vector<float> data(num_entities * o.dim);
  std::vector<double> v(o.dim);
  for (std::size_t e = 0; e < num_entities; ++e) {
    if (assignment[e] >= o.n_clusters) fail(ErrorCode::kInvalidArgument, "assignment references unknown cluster");
    const auto& c = centroids[assignment[e]];
    for (std::size_t i = 0; i < o.dim; ++i) v[i] = c[i] + o.spread * normal(rng);
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t i = 0; i < o.dim; ++i) data[e * o.dim + i] = static_cast<float>(v[i] / norm);
  }
  return {EmbeddingTable(num_entities, o.dim, std::move(data)), std::move(assignment)};
}

SynthesizedEmbeddings synthesize_embeddings(const KnowledgeGraph& kg, const SynthEmbeddingOptions& options) {
  return synthesize_embeddings(kg.num_entities(), options);
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine_similarity(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

void EmbeddingStore::put(const std::string& name, EmbeddingTable table) { tables_[name] = std::move(table); }

const EmbeddingTable& EmbeddingStore::get(const std::string& name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) fail(ErrorCode::kNotFound, "no embedding table named '" + name + "'");
  return it->second;
}

}  // namespace nqr

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nqr/cosine.hpp"
#include "nqr/prefgen.hpp"
#include "nqr/synth.hpp"
#include "nqr/train.hpp"

namespace nqr::cli {

// Shared by every command that reads base scores.
struct ScoreInput {
  std::string path;
  bool raw = false;  // skip the [0,1] row normalization
};

struct SynthKgOptions {
  std::string out_dir;
  SynthConfig config;
};

struct GenDataOptions {
  std::string graph;
  std::string train_graph;
  std::string entities;
  std::string relations;
  std::string queries;
  std::string embeddings;
  std::string out;
  std::string stats_out;
  BenchmarkOptions benchmark;
};

struct TrainOptions {
  std::string data;
  ScoreInput scores;
  std::string embeddings;
  std::string entities;
  std::string out;
  std::string loss_csv;
  std::string loss = "margin+kl";
  TrainConfig config;
};

struct GridOptions {
  std::string data;
  ScoreInput scores;
  std::string embeddings;
  std::string entities;
  std::string report;
  std::string best_model;
  std::string loss = "margin+kl";
  std::vector<double> learning_rates;
  std::vector<double> margins;
  std::vector<double> kl_weights;
  std::size_t steps = 10;
  TrainConfig config;
};

struct TuneCosineOptions {
  std::string data;
  ScoreInput scores;
  std::string embeddings;
  std::string report;
  std::string out;
  std::string split = "valid";
  std::vector<double> alpha_p = kCosineGrid;
  std::vector<double> alpha_n = kCosineGrid;
  std::size_t steps = 10;
};

struct RerankerOptions {
  std::string kind = "identity";
  std::string model;
  std::string embeddings;
  std::string entities;
  double alpha_p = 0.5;
  double alpha_n = 0.5;
};

struct EvalOptions {
  std::string data;
  ScoreInput scores;
  RerankerOptions reranker;
  std::string split = "test";
  std::size_t steps = 10;
  std::string out_dir;
  bool svg = false;
};

struct RerankOptions {
  ScoreInput scores;
  std::uint64_t query_id = 0;
  bool has_query_id = false;
  std::string preferences;
  RerankerOptions reranker;
  std::string out;
  std::size_t top_k = 10;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data;
  ScoreInput scores;
  std::string embeddings;
  std::string model;
  std::string entities;
  std::string graph;
  std::string train_graph;
  std::string static_dir;
  std::string storage;
  double adhoc_sigma = 0.35;
  std::uint64_t seed = 0;
};

struct StatsOptions {
  std::string data;
};

// Each returns the process exit code; library errors propagate as nqr::Error.
// `config` is the TOML dump of the parsed options, recorded in the manifest.
int run_synth_kg(const SynthKgOptions& o, const std::string& config);
int run_gen_data(const GenDataOptions& o, const std::string& config);
int run_train(const TrainOptions& o, const std::string& config);
int run_grid(const GridOptions& o, const std::string& config);
int run_tune_cosine(const TuneCosineOptions& o, const std::string& config);
int run_eval(const EvalOptions& o, const std::string& config);
int run_rerank(const RerankOptions& o, const std::string& config);
int run_serve(const ServeOptions& o);
int run_stats(const StatsOptions& o);

}  // namespace nqr::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nqr/dataset.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/losses.hpp"
#include "nqr/metrics.hpp"
#include "nqr/model.hpp"
#include "nqr/scores.hpp"

namespace nqr {

enum class LossKind { kMarginKl, kRankNet };

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view name);

struct LossConfig {
  LossKind kind = LossKind::kMarginKl;
  double margin = 0.1;
  double kl_weight = 1.0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double margin = 0.1;
  double kl_weight = 1.0;
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kMarginKl;
  bool prefix_subsets = false;
  bool zero_head = false;

  LossConfig loss_config() const { return {loss, margin, kl_weight}; }
};

// Throws kInvalidArgument on margin <= 0 (margin loss), kl_weight < 0,
// epochs == 0, batch_size == 0 or a negative learning rate.
void validate(const TrainConfig& cfg);

struct TrainingSample {
  std::span<const double> base;
  PreferenceSet subset;
};

// Mean loss over the samples. With compute_grad the gradient of that mean is
// added to the parameters' accumulators.
double loss_and_gradient(NqrParameters& params, const EmbeddingTable& table, std::span<const TrainingSample> samples,
                         const LossConfig& loss, bool compute_grad);

struct TrainResult {
  NqrParameters params;
  std::vector<double> epoch_loss;
  std::size_t examples = 0;         // preference sets used per epoch
  std::size_t skipped_non_1p = 0;   // train-split queries dropped
  std::size_t skipped_one_sided = 0;
};

using TrainProgress = std::function<void(std::size_t epoch, double mean_loss)>;

// Trains on the train-split 1p instances of `data`.
TrainResult train(const Dataset& data, const ScoreMatrix& scores, const EmbeddingTable& table, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct GridSpec {
  std::vector<double> learning_rates = {1e-5, 1e-4};
  std::vector<double> margins = {0.05, 0.1, 0.25};
  std::vector<double> kl_weights = {0.1, 1.0, 10.0};
};

// The RankNet grid only varies the learning rate.
GridSpec ranknet_grid();

struct GridRow {
  TrainConfig config;
  double av_pa = 0.0;
  double av_mrr = 0.0;
  double objective = 0.0;
};

struct GridResult {
  std::size_t best = 0;
  std::vector<GridRow> rows;
  TrainResult best_model;
};

// Index of the largest AvPA + AvMRR; earlier rows win ties.
std::size_t select_best(std::span<const GridRow> rows);

// Trains one model per grid point (margin/KL axes are ignored for RankNet)
// and scores it on the valid split with the interactive protocol.
GridResult grid_search(const GridSpec& grid, const TrainConfig& base_config, const Dataset& data,
                       const ScoreMatrix& scores, const EmbeddingTable& table, const ProtocolOptions& options = {},
                       const std::function<void(const GridRow&)>& on_row = {});

void write_grid_report(std::ostream& out, std::span<const GridRow> rows);

}  // namespace nqr

#include "nqr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"
#include "nqr/random.hpp"

namespace nqr {

std::string_view to_string(LossKind k) { return k == LossKind::kRankNet ? "ranknet" : "margin+kl"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "margin+kl" || name == "margin" || name == "nqr") return LossKind::kMarginKl;
  if (name == "ranknet") return LossKind::kRankNet;
  fail(ErrorCode::kParse, "unknown loss kind '" + std::string(name) + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.loss == LossKind::kMarginKl && !(cfg.margin > 0.0)) fail(ErrorCode::kInvalidArgument, "margin must be > 0");
  if (!(cfg.kl_weight >= 0.0)) fail(ErrorCode::kInvalidArgument, "kl_weight must be >= 0");
  if (cfg.epochs == 0) fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) fail(ErrorCode::kInvalidArgument, "learning_rate must be >= 0");
}

double loss_and_gradient(NqrParameters& params, const EmbeddingTable& table, std::span<const TrainingSample> samples,
                         const LossConfig& loss, bool compute_grad) {
  if (samples.empty()) return 0.0;
  const std::size_t d = params.dim;
  const std::size_t V = table.size();
  if (table.dim() != d) fail(ErrorCode::kShapeMismatch, "embedding dim does not match model dim");

  std::vector<double> proj(V * d);
  for (std::size_t e = 0; e < V; ++e) {
    project_entity(params, table.row(static_cast<EntityId>(e)), std::span<double>(proj).subspan(e * d, d));
  }
  std::vector<double> delta;  // sum over samples of dL/dpre, per entity
  if (compute_grad) delta.assign(V * d, 0.0);

  const double scale = 1.0 / static_cast<double>(samples.size());
  std::vector<double> pre(V * d), out(V), adjusted(V), g(V);
  std::vector<double> gc(d), gwb(d), gw2(d), gm(d);
  double total = 0.0;
  auto& W1 = params.adjust1.weight;

  for (const auto& s : samples) {
    if (s.base.size() != V) fail(ErrorCode::kShapeMismatch, "base scores do not cover the embedding table");
    PreferenceForward fwd;
    embed_preferences_forward(params, table, s.subset, fwd);
    const auto ctx = make_adjust_context(params, fwd.m);
    for (std::size_t e = 0; e < V; ++e) {
      out[e] = adjust_head(ctx, std::span<const double>(proj).subspan(e * d, d), s.base[e], &pre[e * d]);
      adjusted[e] = s.base[e] + out[e];
    }
    const auto pos = s.subset.positives();
    const auto neg = s.subset.negatives();
    std::fill(g.begin(), g.end(), 0.0);
    std::span<double> grad = compute_grad ? std::span<double>(g) : std::span<double>();
    double l = 0.0;
    if (loss.kind == LossKind::kRankNet) {
      l = ranknet_loss(adjusted, pos, neg, grad);
    } else {
      l = total_loss(adjusted, s.base, pos, neg, loss.margin, loss.kl_weight, grad);
    }
    total += l * scale;
    if (!compute_grad) continue;

    std::fill(gc.begin(), gc.end(), 0.0);
    std::fill(gwb.begin(), gwb.end(), 0.0);
    std::fill(gw2.begin(), gw2.end(), 0.0);
    double gb2 = 0.0;
    for (std::size_t e = 0; e < V; ++e) {
      if (g[e] == 0.0) continue;
      const double gz = g[e] * scale * (1.0 - out[e] * out[e]);
      gb2 += gz;
      const double* p = &pre[e * d];
      double* de = &delta[e * d];
      for (std::size_t j = 0; j < d; ++j) {
        if (p[j] <= 0.0) continue;
        gw2[j] += gz * p[j];
        const double dj = gz * ctx.w2[j];
        gc[j] += dj;
        gwb[j] += dj * s.base[e];
        de[j] += dj;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      params.adjust2.grad_weight.data[j] += gw2[j];
      params.adjust1.grad_bias[j] += gc[j];
      double* gw = &params.adjust1.grad_weight.data[j * W1.cols];
      for (std::size_t k = 0; k < d; ++k) gw[k] += gc[j] * fwd.m[k];
      gw[2 * d] += gwb[j];
    }
    params.adjust2.grad_bias[0] += gb2;
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += gc[j] * W1.data[j * W1.cols + k];
      gm[k] = acc;
    }
    embed_preferences_backward(params, fwd, gm);
  }

  if (compute_grad) {
    // dW_e = delta^T E
    for (std::size_t e = 0; e < V; ++e) {
      const double* de = &delta[e * d];
      const auto emb = table.row(static_cast<EntityId>(e));
      for (std::size_t j = 0; j < d; ++j) {
        if (de[j] == 0.0) continue;
        double* gw = &params.adjust1.grad_weight.data[j * W1.cols + d];
        for (std::size_t k = 0; k < d; ++k) gw[k] += de[j] * static_cast<double>(emb[k]);
      }
    }
  }
  return total;
}

namespace {

struct Example {
  const QueryInstance* instance;
  std::size_t set;
};

PreferenceSet draw_two_sided(const PreferenceSet& p, std::mt19937_64& rng, bool prefix) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto s = sample_interaction_subset(p, rng, prefix);
    bool has_pos = false, has_neg = false;
    for (const auto& pair : s.pairs) (pair.label ? has_pos : has_neg) = true;
    if (has_pos && has_neg) return s;
  }
  return p;
}

}  // namespace

TrainResult train(const Dataset& data, const ScoreMatrix& scores, const EmbeddingTable& table, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  validate(cfg);
  TrainResult result;
  std::vector<Example> examples;
  for (const auto* inst : data.split(Split::kTrain)) {
    if (inst->query.structure != QueryStructure::k1p) {
      ++result.skipped_non_1p;
      continue;
    }
    for (std::size_t s = 0; s < inst->preference_sets.size(); ++s) {
      const auto& p = inst->preference_sets[s];
      bool has_pos = false, has_neg = false;
      for (const auto& pair : p.pairs) (pair.label ? has_pos : has_neg) = true;
      if (!has_pos || !has_neg) {
        ++result.skipped_one_sided;
        continue;
      }
      examples.push_back({inst, s});
    }
  }
  if (examples.empty()) fail(ErrorCode::kInvalidArgument, "no usable training examples (need 1p train queries)");
  result.examples = examples.size();

  result.params = NqrParameters::initialize(table.dim(), cfg.seed, cfg.zero_head);
  diff::Adam adam({cfg.learning_rate});
  std::mt19937_64 rng(derive_seed(cfg.seed, 1));
  const auto loss = cfg.loss_config();
  std::vector<TrainingSample> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(examples.begin(), examples.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(examples.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = examples[i];
        batch.push_back({scores.at(ex.instance->id),
                         draw_two_sided(ex.instance->preference_sets[ex.set], rng, cfg.prefix_subsets)});
      }
      result.params.zero_grad();
      const double l = loss_and_gradient(result.params, table, batch, loss, true);
      epoch_loss += l * static_cast<double>(batch.size());
      const auto refs = result.params.param_refs();
      adam.step(refs);
    }
    epoch_loss /= static_cast<double>(examples.size());
    result.epoch_loss.push_back(epoch_loss);
    if (progress) progress(epoch + 1, epoch_loss);
  }
  return result;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"margin", c.margin},
                     {"kl_weight", c.kl_weight},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed},
                     {"loss", to_string(c.loss)},
                     {"prefix_subsets", c.prefix_subsets},
                     {"zero_head", c.zero_head}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.margin = j.value("margin", d.margin);
  c.kl_weight = j.value("kl_weight", d.kl_weight);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  c.loss = parse_loss_kind(j.value("loss", std::string(to_string(d.loss))));
  c.prefix_subsets = j.value("prefix_subsets", d.prefix_subsets);
  c.zero_head = j.value("zero_head", d.zero_head);
}

GridSpec ranknet_grid() { return GridSpec{{1e-5, 1e-4, 1e-3}, {0.1}, {0.0}}; }

std::size_t select_best(std::span<const GridRow> rows) {
  if (rows.empty()) fail(ErrorCode::kInvalidArgument, "empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].objective > rows[best].objective) best = i;
  }
  return best;
}

GridResult grid_search(const GridSpec& grid, const TrainConfig& base_config, const Dataset& data,
                       const ScoreMatrix& scores, const EmbeddingTable& table, const ProtocolOptions& options,
                       const std::function<void(const GridRow&)>& on_row) {
  std::vector<TrainConfig> configs;
  if (base_config.loss == LossKind::kRankNet) {
    for (double lr : grid.learning_rates) {
      TrainConfig c = base_config;
      c.learning_rate = lr;
      configs.push_back(c);
    }
  } else {
    for (double lr : grid.learning_rates) {
      for (double m : grid.margins) {
        for (double kl : grid.kl_weights) {
          TrainConfig c = base_config;
          c.learning_rate = lr;
          c.margin = m;
          c.kl_weight = kl;
          configs.push_back(c);
        }
      }
    }
  }
  if (configs.empty()) fail(ErrorCode::kInvalidArgument, "empty grid");
  const auto valid = data.split(Split::kValid);
  if (valid.empty()) fail(ErrorCode::kInvalidArgument, "grid search needs valid-split queries");
  auto shared_table = std::make_shared<const EmbeddingTable>(table);

  GridResult result;
  double best_objective = -1.0;
  for (const auto& cfg : configs) {
    auto trained = train(data, scores, table, cfg);
    NqrReranker rr(NqrModel{trained.params, 0, 0}, shared_table);
    const auto agg = aggregate(run_protocol_all(rr, valid, scores, options));
    GridRow row{cfg, agg.overall.av_pa, agg.overall.av_mrr, agg.overall.av_pa + agg.overall.av_mrr};
    result.rows.push_back(row);
    if (on_row) on_row(row);
    if (row.objective > best_objective) {
      best_objective = row.objective;
      result.best_model = std::move(trained);
    }
  }
  result.best = select_best(result.rows);
  return result;
}

void write_grid_report(std::ostream& out, std::span<const GridRow> rows) {
  out << "loss,learning_rate,margin,kl_weight,epochs,AvPA,AvMRR,objective\n";
  for (const auto& r : rows) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s,%g,%g,%g,%zu,%.6f,%.6f,%.6f\n", std::string(to_string(r.config.loss)).c_str(),
                  r.config.learning_rate, r.config.margin, r.config.kl_weight, r.config.epochs, r.av_pa, r.av_mrr,
                  r.objective);
    out << buf;
  }
}

}  // namespace nqr

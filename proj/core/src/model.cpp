#include "nqr/model.hpp"

#include <cmath>
#include <random>

#include "nqr/error.hpp"

namespace nqr {

namespace {

constexpr const char* kTensorNames[] = {
    "attention.wq", "attention.wk", "attention.wv", "norm.gain",    "norm.bias",    "fc1.weight",
    "fc1.bias",     "adjust1.weight", "adjust1.bias", "adjust2.weight", "adjust2.bias",
};

diff::Tensor2 vector_tensor(const std::vector<double>& v) { return diff::Tensor2(1, v.size(), v); }

void check_shape(const diff::Tensor2& t, std::size_t rows, std::size_t cols, const std::string& name) {
  if (t.rows != rows || t.cols != cols) {
    fail(ErrorCode::kLoad, "checkpoint tensor '" + name + "' has shape " + std::to_string(t.rows) + "x" +
                               std::to_string(t.cols) + ", expected " + std::to_string(rows) + "x" +
                               std::to_string(cols));
  }
}

}  // namespace

NqrParameters NqrParameters::initialize(std::size_t d, std::uint64_t seed, bool zero_head) {
  if (d == 0) fail(ErrorCode::kInvalidArgument, "embedding dimension must be positive");
  NqrParameters p;
  p.dim = d;
  p.attention = diff::SelfAttention(d + 1);
  p.norm = diff::LayerNorm(d + 1);
  p.fc1 = diff::Linear(d + 1, d, diff::Activation::kRelu);
  p.adjust1 = diff::Linear(2 * d + 1, d, diff::Activation::kRelu);
  p.adjust2 = diff::Linear(d, 1, diff::Activation::kTanh);
  std::mt19937_64 rng(seed);
  p.attention.init_uniform(rng);
  p.fc1.init_uniform(rng);
  p.adjust1.init_uniform(rng);
  p.adjust2.init_uniform(rng);
  if (zero_head) {
    p.adjust2.weight.fill(0.0);
    p.adjust2.bias.assign(1, 0.0);
  }
  return p;
}

std::vector<diff::ParamRef> NqrParameters::param_refs() {
  return {
      {attention.wq.data, attention.grad_wq.data},
      {attention.wk.data, attention.grad_wk.data},
      {attention.wv.data, attention.grad_wv.data},
      {norm.gain, norm.grad_gain},
      {norm.bias, norm.grad_bias},
      {fc1.weight.data, fc1.grad_weight.data},
      {fc1.bias, fc1.grad_bias},
      {adjust1.weight.data, adjust1.grad_weight.data},
      {adjust1.bias, adjust1.grad_bias},
      {adjust2.weight.data, adjust2.grad_weight.data},
      {adjust2.bias, adjust2.grad_bias},
  };
}

std::size_t NqrParameters::num_parameters() const {
  return attention.wq.size() * 3 + norm.gain.size() * 2 + fc1.weight.size() + fc1.bias.size() +
         adjust1.weight.size() + adjust1.bias.size() + adjust2.weight.size() + adjust2.bias.size();
}

void NqrParameters::zero_grad() {
  attention.zero_grad();
  norm.zero_grad();
  fc1.zero_grad();
  adjust1.zero_grad();
  adjust2.zero_grad();
}

diff::Checkpoint NqrParameters::to_checkpoint() const {
  diff::Checkpoint c;
  c.metadata["dim"] = std::to_string(dim);
  c.metadata["layernorm_epsilon"] = std::to_string(norm.epsilon);
  const diff::Tensor2 tensors[] = {
      attention.wq,       attention.wk,         attention.wv,          vector_tensor(norm.gain),
      vector_tensor(norm.bias), fc1.weight,     vector_tensor(fc1.bias), adjust1.weight,
      vector_tensor(adjust1.bias), adjust2.weight, vector_tensor(adjust2.bias),
  };
  for (std::size_t i = 0; i < std::size(kTensorNames); ++i) c.tensors.push_back({kTensorNames[i], tensors[i]});
  return c;
}

NqrParameters NqrParameters::from_checkpoint(const diff::Checkpoint& ckpt) {
  auto it = ckpt.metadata.find("dim");
  if (it == ckpt.metadata.end()) fail(ErrorCode::kLoad, "checkpoint lacks 'dim'");
  const std::size_t d = std::stoull(it->second);
  NqrParameters p = initialize(d, 0);
  const std::size_t D = d + 1;
  auto take = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    const auto& t = ckpt.get(name);
    check_shape(t, rows, cols, name);
    return t;
  };
  p.attention.wq = take("attention.wq", D, D);
  p.attention.wk = take("attention.wk", D, D);
  p.attention.wv = take("attention.wv", D, D);
  p.norm.gain = take("norm.gain", 1, D).data;
  p.norm.bias = take("norm.bias", 1, D).data;
  p.fc1.weight = take("fc1.weight", d, D);
  p.fc1.bias = take("fc1.bias", 1, d).data;
  p.adjust1.weight = take("adjust1.weight", d, 2 * d + 1);
  p.adjust1.bias = take("adjust1.bias", 1, d).data;
  p.adjust2.weight = take("adjust2.weight", 1, d);
  p.adjust2.bias = take("adjust2.bias", 1, 1).data;
  return p;
}

diff::Tensor2 preference_matrix(const EmbeddingTable& table, const PreferenceSet& p) {
  if (p.pairs.empty()) fail(ErrorCode::kInvalidArgument, "empty preference set");
  const std::size_t d = table.dim();
  diff::Tensor2 M(p.pairs.size(), d + 1);
  for (std::size_t i = 0; i < p.pairs.size(); ++i) {
    const auto emb = table.row(p.pairs[i].entity);
    auto row = M.row(i);
    for (std::size_t k = 0; k < d; ++k) row[k] = emb[k];
    row[d] = p.pairs[i].label;
  }
  return M;
}

void embed_preferences_forward(const NqrParameters& params, const EmbeddingTable& table, const PreferenceSet& p,
                               PreferenceForward& out) {
  if (table.dim() != params.dim) {
    fail(ErrorCode::kShapeMismatch, "embedding dim " + std::to_string(table.dim()) + " does not match model dim " +
                                        std::to_string(params.dim));
  }
  const diff::Tensor2 M = preference_matrix(table, p);
  out.rows = M.rows;
  const auto a = params.attention.forward(M, &out.attention);
  const auto n = params.norm.forward(a, &out.norm);
  const auto h = params.fc1.forward(n, &out.fc1);
  out.m = diff::mean_pool(h).data;
}

void embed_preferences_backward(NqrParameters& params, const PreferenceForward& fwd, std::span<const double> grad_m) {
  diff::Tensor2 gm(1, grad_m.size(), std::vector<double>(grad_m.begin(), grad_m.end()));
  const auto gh = diff::mean_pool_backward(fwd.rows, gm);
  const auto gn = params.fc1.backward(fwd.fc1, gh);
  const auto ga = params.norm.backward(fwd.norm, gn);
  params.attention.backward(fwd.attention, ga);
}

std::vector<double> embed_preferences(const NqrParameters& params, const EmbeddingTable& table,
                                      const PreferenceSet& p) {
  if (table.dim() != params.dim) {
    fail(ErrorCode::kShapeMismatch, "embedding dim " + std::to_string(table.dim()) + " does not match model dim " +
                                        std::to_string(params.dim));
  }
  const diff::Tensor2 M = preference_matrix(table, p);
  const auto h = params.fc1.forward(params.norm.forward(params.attention.forward(M)));
  return diff::mean_pool(h).data;
}

AdjustContext make_adjust_context(const NqrParameters& params, std::span<const double> m) {
  const std::size_t d = params.dim;
  if (m.size() != d) fail(ErrorCode::kShapeMismatch, "preference embedding has wrong length");
  const auto& W = params.adjust1.weight;
  AdjustContext ctx;
  ctx.c.resize(d);
  ctx.wb.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double* w = &W.data[j * W.cols];
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += w[k] * m[k];
    ctx.c[j] = params.adjust1.bias[j] + s;
    ctx.wb[j] = w[2 * d];
  }
  ctx.w2 = params.adjust2.weight.data;
  ctx.b2 = params.adjust2.bias[0];
  return ctx;
}

void project_entity(const NqrParameters& params, std::span<const float> emb, std::span<double> proj) {
  const std::size_t d = params.dim;
  const auto& W = params.adjust1.weight;
  for (std::size_t j = 0; j < d; ++j) {
    const double* w = &W.data[j * W.cols + d];
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += w[k] * static_cast<double>(emb[k]);
    proj[j] = s;
  }
}

double adjust_head(const AdjustContext& ctx, std::span<const double> proj, double base, double* pre) {
  const std::size_t d = ctx.c.size();
  double z = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double p = (ctx.c[j] + proj[j]) + ctx.wb[j] * base;
    if (pre) pre[j] = p;
    if (p > 0.0) z += ctx.w2[j] * p;
  }
  return std::tanh(z + ctx.b2);
}

double adjust_score(const NqrParameters& params, EntityId e, double base, std::span<const double> m,
                    const EmbeddingTable& table) {
  const auto ctx = make_adjust_context(params, m);
  std::vector<double> proj(params.dim);
  project_entity(params, table.row(e), proj);
  return base + adjust_head(ctx, proj, base);
}

std::vector<double> rerank(const NqrParameters& params, std::span<const double> base, const PreferenceSet& p,
                           const EmbeddingTable& table) {
  if (base.size() != table.size()) {
    fail(ErrorCode::kShapeMismatch, "base scores cover " + std::to_string(base.size()) + " entities, table has " +
                                        std::to_string(table.size()));
  }
  std::vector<double> out(base.begin(), base.end());
  if (p.pairs.empty()) return out;
  const auto ctx = make_adjust_context(params, embed_preferences(params, table, p));
  std::vector<double> proj(params.dim);
  for (std::size_t e = 0; e < out.size(); ++e) {
    project_entity(params, table.row(static_cast<EntityId>(e)), proj);
    out[e] = base[e] + adjust_head(ctx, proj, base[e]);
  }
  return out;
}

void save_model(const std::string& path, const NqrModel& model) {
  auto ckpt = model.params.to_checkpoint();
  ckpt.metadata["vocabulary_hash"] = std::to_string(model.vocabulary_hash);
  ckpt.metadata["num_entities"] = std::to_string(model.num_entities);
  diff::save_checkpoint(path, ckpt);
}

NqrModel load_model(const std::string& path) {
  const auto ckpt = diff::load_checkpoint(path);
  NqrModel m;
  m.params = NqrParameters::from_checkpoint(ckpt);
  auto get = [&](const char* key) -> std::uint64_t {
    auto it = ckpt.metadata.find(key);
    return it == ckpt.metadata.end() ? 0 : std::stoull(it->second);
  };
  m.vocabulary_hash = get("vocabulary_hash");
  m.num_entities = get("num_entities");
  return m;
}

NqrReranker::NqrReranker(NqrModel model, std::shared_ptr<const EmbeddingTable> table,
                         std::uint64_t expected_vocabulary_hash)
    : model_(std::move(model)), table_(std::move(table)) {
  if (!table_) fail(ErrorCode::kInvalidArgument, "NQR reranker needs an embedding table");
  const std::size_t d = model_.params.dim;
  if (table_->dim() != d) {
    fail(ErrorCode::kConflict, "model dim " + std::to_string(d) + " does not match embedding dim " +
                                   std::to_string(table_->dim()));
  }
  if (model_.num_entities != 0 && model_.num_entities != table_->size()) {
    fail(ErrorCode::kConflict, "model was trained on " + std::to_string(model_.num_entities) + " entities, table has " +
                                   std::to_string(table_->size()));
  }
  if (expected_vocabulary_hash != 0 && model_.vocabulary_hash != 0 &&
      model_.vocabulary_hash != expected_vocabulary_hash) {
    fail(ErrorCode::kConflict, "model vocabulary hash does not match the loaded vocabulary");
  }
  proj_.resize(table_->size() * d);
  for (std::size_t e = 0; e < table_->size(); ++e) {
    project_entity(model_.params, table_->row(static_cast<EntityId>(e)), std::span<double>(proj_).subspan(e * d, d));
  }
}

std::vector<double> NqrReranker::rerank(std::span<const double> base, const PreferenceSet& p) const {
  if (base.size() != table_->size()) {
    fail(ErrorCode::kShapeMismatch, "base scores cover " + std::to_string(base.size()) + " entities, table has " +
                                        std::to_string(table_->size()));
  }
  std::vector<double> out(base.begin(), base.end());
  if (p.pairs.empty()) return out;
  const std::size_t d = model_.params.dim;
  const auto ctx = make_adjust_context(model_.params, embed_preferences(model_.params, *table_, p));
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = base[e] + adjust_head(ctx, std::span<const double>(proj_).subspan(e * d, d), base[e]);
  }
  return out;
}

}  // namespace nqr

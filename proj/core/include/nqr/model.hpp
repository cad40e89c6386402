#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nqr/diff/adam.hpp"
#include "nqr/diff/checkpoint.hpp"
#include "nqr/diff/layers.hpp"
#include "nqr/embeddings.hpp"
#include "nqr/preference.hpp"

namespace nqr {

// All learnable weights. With embedding dim d:
//   attention  SelfAttention(d+1)
//   norm       LayerNorm(d+1)
//   fc1        Linear(d+1 -> d), ReLU
//   adjust1    Linear(2d+1 -> d), ReLU, input [m | emb(e) | base]
//   adjust2    Linear(d -> 1), tanh
struct NqrParameters {
  std::size_t dim = 0;
  diff::SelfAttention attention;
  diff::LayerNorm norm;
  diff::Linear fc1;
  diff::Linear adjust1;
  diff::Linear adjust2;

  // Uniform +-1/sqrt(fan_in) weights; zero_head sets adjust2 to zero so the
  // model starts as the identity reranker.
  static NqrParameters initialize(std::size_t d, std::uint64_t seed, bool zero_head = false);

  std::vector<diff::ParamRef> param_refs();
  std::size_t num_parameters() const;
  void zero_grad();

  diff::Checkpoint to_checkpoint() const;
  static NqrParameters from_checkpoint(const diff::Checkpoint& ckpt);
};

// Rows [emb(e_i) | l_i] in preference order.
diff::Tensor2 preference_matrix(const EmbeddingTable& table, const PreferenceSet& p);

// m = MeanPool(fc1(LayerNorm(SelfAttention(M)))). Throws on an empty set or
// an entity without an embedding.
std::vector<double> embed_preferences(const NqrParameters& params, const EmbeddingTable& table,
                                      const PreferenceSet& p);

// Forward pass keeping every intermediate for backprop.
struct PreferenceForward {
  diff::SelfAttention::Cache attention;
  diff::LayerNorm::Cache norm;
  diff::Linear::Cache fc1;
  std::size_t rows = 0;
  std::vector<double> m;
};

void embed_preferences_forward(const NqrParameters& params, const EmbeddingTable& table, const PreferenceSet& p,
                               PreferenceForward& out);
// Accumulates parameter gradients of the embedding module given dL/dm.
void embed_preferences_backward(NqrParameters& params, const PreferenceForward& fwd, std::span<const double> grad_m);

// base + tanh(adjust2(relu(adjust1([m | emb(e) | base])))).
double adjust_score(const NqrParameters& params, EntityId e, double base, std::span<const double> m,
                    const EmbeddingTable& table);

// Computes m once and adjusts every entity. An empty set returns base.
std::vector<double> rerank(const NqrParameters& params, std::span<const double> base, const PreferenceSet& p,
                           const EmbeddingTable& table);

// Pieces of adjust1 that do not depend on the entity. Shared by the single
// entity path, the batch path and training so all three agree bit for bit.
struct AdjustContext {
  std::vector<double> c;   // adjust1.bias + W_m m
  std::vector<double> wb;  // adjust1 column of the base score
  std::vector<double> w2;  // adjust2 weights
  double b2 = 0.0;
};

AdjustContext make_adjust_context(const NqrParameters& params, std::span<const double> m);
// proj = W_e emb(e), length d.
void project_entity(const NqrParameters& params, std::span<const float> emb, std::span<double> proj);
// tanh(b2 + w2 . relu(c + proj + wb * base)). `pre` receives the d
// pre-activations when given.
double adjust_head(const AdjustContext& ctx, std::span<const double> proj, double base, double* pre = nullptr);

// Model file = checkpoint with metadata: dim, entity count, vocabulary hash.
struct NqrModel {
  NqrParameters params;
  std::uint64_t vocabulary_hash = 0;
  std::size_t num_entities = 0;
};

void save_model(const std::string& path, const NqrModel& model);
NqrModel load_model(const std::string& path);

// Interface shared by the evaluation protocol, the CLI and the session service.
class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::vector<double> rerank(std::span<const double> base, const PreferenceSet& p) const = 0;
  virtual std::string name() const = 0;
};

class IdentityReranker final : public Reranker {
 public:
  std::vector<double> rerank(std::span<const double> base, const PreferenceSet&) const override {
    return {base.begin(), base.end()};
  }
  std::string name() const override { return "identity"; }
};

// Caches W_e emb(e) for every entity at construction.
class NqrReranker final : public Reranker {
 public:
  // Throws kConflict when the model was trained against another vocabulary
  // (when expected_vocabulary_hash is non-zero) or another dimension.
  NqrReranker(NqrModel model, std::shared_ptr<const EmbeddingTable> table, std::uint64_t expected_vocabulary_hash = 0);

  std::vector<double> rerank(std::span<const double> base, const PreferenceSet& p) const override;
  std::string name() const override { return "nqr"; }
  const NqrParameters& params() const { return model_.params; }

 private:
  NqrModel model_;
  std::shared_ptr<const EmbeddingTable> table_;
  std::vector<double> proj_;  // |V| x d
};

}  // namespace nqr

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nqr/diff/tensor.hpp"

namespace nqr::diff {

enum class Activation { kNone, kRelu, kTanh };

// Each layer owns its parameters and gradient accumulators. forward() fills
// an optional cache; backward() adds into the accumulators and returns the
// gradient with respect to the input.

struct Linear {
  Tensor2 weight;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kNone;
  Tensor2 grad_weight;
  std::vector<double> grad_bias;

  struct Cache {
    Tensor2 x;
    Tensor2 y;  // post-activation
  };

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Activation act = Activation::kNone);

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }

  // uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias
  void init_uniform(std::mt19937_64& rng);
  Tensor2 forward(const Tensor2& x, Cache* cache = nullptr) const;
  Tensor2 backward(const Cache& cache, const Tensor2& grad_y);
  void zero_grad();
};

struct LayerNorm {
  std::vector<double> gain;
  std::vector<double> bias;
  double epsilon = 1e-5;
  std::vector<double> grad_gain;
  std::vector<double> grad_bias;

  struct Cache {
    Tensor2 xhat;
    std::vector<double> inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim, double eps = 1e-5);

  Tensor2 forward(const Tensor2& x, Cache* cache = nullptr) const;
  Tensor2 backward(const Cache& cache, const Tensor2& grad_y);
  void zero_grad();
};

// Single head, no output projection: y = softmax(Q K^T / sqrt(dim)) V with
// Q = x Wq^T, K = x Wk^T, V = x Wv^T.
struct SelfAttention {
  Tensor2 wq, wk, wv;
  Tensor2 grad_wq, grad_wk, grad_wv;

  struct Cache {
    Tensor2 x, q, k, v, attn;
  };

  SelfAttention() = default;
  explicit SelfAttention(std::size_t dim);

  std::size_t dim() const { return wq.rows; }
  void init_uniform(std::mt19937_64& rng);
  Tensor2 forward(const Tensor2& x, Cache* cache = nullptr) const;
  Tensor2 backward(const Cache& cache, const Tensor2& grad_y);
  void zero_grad();
};

// Number of SelfAttention::forward calls in this process.
std::uint64_t attention_forward_count();

// Column-wise mean over rows: (t x c) -> (1 x c).
Tensor2 mean_pool(const Tensor2& x);
Tensor2 mean_pool_backward(std::size_t rows, const Tensor2& grad_y);

}  // namespace nqr::diff

#include "nqr/diff/layers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "nqr/error.hpp"

namespace nqr::diff {

namespace {

std::atomic<std::uint64_t> g_attention_calls{0};

void check_cols(const Tensor2& x, std::size_t expected, const char* layer) {
  if (x.cols != expected) {
    fail(ErrorCode::kShapeMismatch, std::string(layer) + ": input has " + std::to_string(x.cols) +
                                        " columns, expected " + std::to_string(expected));
  }
}

void check_same(const Tensor2& a, const Tensor2& b, const char* layer) {
  if (a.rows != b.rows || a.cols != b.cols) fail(ErrorCode::kShapeMismatch, std::string(layer) + ": gradient shape");
}

void fill_uniform(std::vector<double>& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& x : v) x = u(rng);
}

}  // namespace

Linear::Linear(std::size_t in, std::size_t out, Activation act)
    : weight(out, in), bias(out, 0.0), activation(act), grad_weight(out, in), grad_bias(out, 0.0) {}

void Linear::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  fill_uniform(weight.data, bound, rng);
  fill_uniform(bias, bound, rng);
}

Tensor2 Linear::forward(const Tensor2& x, Cache* cache) const {
  check_cols(x, in_dim(), "Linear");
  Tensor2 y = matmul_bt(x, weight);
  for (std::size_t r = 0; r < y.rows; ++r) {
    auto row = y.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      double v = row[j] + bias[j];
      if (activation == Activation::kRelu) v = v > 0.0 ? v : 0.0;
      else if (activation == Activation::kTanh) v = std::tanh(v);
      row[j] = v;
    }
  }
  if (cache) {
    cache->x = x;
    cache->y = y;
  }
  return y;
}

Tensor2 Linear::backward(const Cache& cache, const Tensor2& grad_y) {
  check_same(cache.y, grad_y, "Linear");
  Tensor2 g = grad_y;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    if (activation == Activation::kRelu) {
      if (cache.y.data[i] <= 0.0) g.data[i] = 0.0;
    } else if (activation == Activation::kTanh) {
      const double y = cache.y.data[i];
      g.data[i] *= 1.0 - y * y;
    }
  }
  add_matmul_at(grad_weight, g, cache.x);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t j = 0; j < g.cols; ++j) grad_bias[j] += g(r, j);
  }
  return matmul(g, weight);
}

void Linear::zero_grad() {
  grad_weight.fill(0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

LayerNorm::LayerNorm(std::size_t dim, double eps)
    : gain(dim, 1.0), bias(dim, 0.0), epsilon(eps), grad_gain(dim, 0.0), grad_bias(dim, 0.0) {}

Tensor2 LayerNorm::forward(const Tensor2& x, Cache* cache) const {
  check_cols(x, gain.size(), "LayerNorm");
  const std::size_t d = x.cols;
  Tensor2 y(x.rows, d);
  if (cache) {
    cache->xhat = Tensor2(x.rows, d);
    cache->inv_std.assign(x.rows, 0.0);
  }
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto xr = x.row(r);
    double mu = 0.0;
    for (double v : xr) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xr[j] - mu) * inv;
      y(r, j) = gain[j] * xh + bias[j];
      if (cache) cache->xhat(r, j) = xh;
    }
    if (cache) cache->inv_std[r] = inv;
  }
  return y;
}

Tensor2 LayerNorm::backward(const Cache& cache, const Tensor2& grad_y) {
  check_same(cache.xhat, grad_y, "LayerNorm");
  const std::size_t d = grad_y.cols;
  Tensor2 gx(grad_y.rows, d);
  std::vector<double> gxh(d);
  for (std::size_t r = 0; r < grad_y.rows; ++r) {
    double mean_g = 0.0, mean_gx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = grad_y(r, j);
      const double xh = cache.xhat(r, j);
      grad_gain[j] += g * xh;
      grad_bias[j] += g;
      gxh[j] = g * gain[j];
      mean_g += gxh[j];
      mean_gx += gxh[j] * xh;
    }
    mean_g /= static_cast<double>(d);
    mean_gx /= static_cast<double>(d);
    const double inv = cache.inv_std[r];
    for (std::size_t j = 0; j < d; ++j) gx(r, j) = inv * (gxh[j] - mean_g - cache.xhat(r, j) * mean_gx);
  }
  return gx;
}

void LayerNorm::zero_grad() {
  std::fill(grad_gain.begin(), grad_gain.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

SelfAttention::SelfAttention(std::size_t dim)
    : wq(dim, dim), wk(dim, dim), wv(dim, dim), grad_wq(dim, dim), grad_wk(dim, dim), grad_wv(dim, dim) {}

void SelfAttention::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim()));
  fill_uniform(wq.data, bound, rng);
  fill_uniform(wk.data, bound, rng);
  fill_uniform(wv.data, bound, rng);
}

Tensor2 SelfAttention::forward(const Tensor2& x, Cache* cache) const {
  check_cols(x, dim(), "SelfAttention");
  g_attention_calls.fetch_add(1, std::memory_order_relaxed);
  Tensor2 q = matmul_bt(x, wq);
  Tensor2 k = matmul_bt(x, wk);
  Tensor2 v = matmul_bt(x, wv);
  Tensor2 s = matmul_bt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim()));
  for (auto& e : s.data) e *= scale;
  Tensor2 a = softmax_rows(s);
  Tensor2 y = matmul(a, v);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(a);
  }
  return y;
}

Tensor2 SelfAttention::backward(const Cache& c, const Tensor2& grad_y) {
  if (grad_y.rows != c.x.rows || grad_y.cols != dim()) fail(ErrorCode::kShapeMismatch, "SelfAttention: gradient shape");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim()));
  Tensor2 ga = matmul_bt(grad_y, c.v);
  Tensor2 gv = matmul_at(c.attn, grad_y);
  Tensor2 gs(ga.rows, ga.cols);
  for (std::size_t r = 0; r < ga.rows; ++r) {
    double inner = 0.0;
    for (std::size_t j = 0; j < ga.cols; ++j) inner += ga(r, j) * c.attn(r, j);
    for (std::size_t j = 0; j < ga.cols; ++j) gs(r, j) = c.attn(r, j) * (ga(r, j) - inner) * scale;
  }
  Tensor2 gq = matmul(gs, c.k);
  Tensor2 gk = matmul_at(gs, c.q);
  add_matmul_at(grad_wq, gq, c.x);
  add_matmul_at(grad_wk, gk, c.x);
  add_matmul_at(grad_wv, gv, c.x);
  Tensor2 gx = matmul(gq, wq);
  const Tensor2 gxk = matmul(gk, wk);
  const Tensor2 gxv = matmul(gv, wv);
  for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gxk.data[i] + gxv.data[i];
  return gx;
}

void SelfAttention::zero_grad() {
  grad_wq.fill(0.0);
  grad_wk.fill(0.0);
  grad_wv.fill(0.0);
}

std::uint64_t attention_forward_count() { return g_attention_calls.load(std::memory_order_relaxed); }

Tensor2 mean_pool(const Tensor2& x) {
  if (x.rows == 0) fail(ErrorCode::kShapeMismatch, "mean_pool of zero rows");
  Tensor2 y(1, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t j = 0; j < x.cols; ++j) y(0, j) += x(r, j);
  }
  for (auto& v : y.data) v /= static_cast<double>(x.rows);
  return y;
}

Tensor2 mean_pool_backward(std::size_t rows, const Tensor2& grad_y) {
  if (grad_y.rows != 1) fail(ErrorCode::kShapeMismatch, "mean_pool gradient must have one row");
  Tensor2 gx(rows, grad_y.cols);
  const double s = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < grad_y.cols; ++j) gx(r, j) = grad_y(0, j) * s;
  }
  return gx;
}

}  // namespace nqr::diff

#include "nqr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nqr/diff/tensor.hpp"
#include "nqr/error.hpp"

namespace nqr {

namespace {

void check_sides(std::span<const double> scores, std::span<const EntityId> pos, std::span<const EntityId> neg) {
  if (pos.empty() || neg.empty()) fail(ErrorCode::kInvalidArgument, "preference loss needs both positives and negatives");
  for (auto e : pos) {
    if (e >= scores.size()) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " not scored");
  }
  for (auto e : neg) {
    if (e >= scores.size()) fail(ErrorCode::kMissingEntity, "entity " + std::to_string(e) + " not scored");
  }
}

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double margin_preference_loss(std::span<const double> adjusted, std::span<const EntityId> positives,
                              std::span<const EntityId> negatives, double margin, std::span<double> grad) {
  check_sides(adjusted, positives, negatives);
  double loss = 0.0;
  for (auto ep : positives) {
    for (auto en : negatives) {
      const double v = margin + adjusted[en] - adjusted[ep];
      if (v > 0.0) {
        loss += v;
        if (!grad.empty()) {
          grad[en] += 1.0;
          grad[ep] -= 1.0;
        }
      }
    }
  }
  return loss;
}

double kl_answer_loss(std::span<const double> base, std::span<const double> adjusted, std::span<double> grad) {
  if (base.size() != adjusted.size()) fail(ErrorCode::kShapeMismatch, "KL over vectors of different length");
  if (base.empty()) return 0.0;
  const double lse_u = diff::logsumexp(base);
  const double lse_v = diff::logsumexp(adjusted);
  double kl = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double log_u = base[i] - lse_u;
    const double log_v = adjusted[i] - lse_v;
    const double u = std::exp(log_u);
    kl += u * (log_u - log_v);
    if (!grad.empty()) grad[i] += std::exp(log_v) - u;
  }
  return std::max(kl, 0.0);
}

double ranknet_loss(std::span<const double> adjusted, std::span<const EntityId> positives,
                    std::span<const EntityId> negatives, std::span<double> grad) {
  check_sides(adjusted, positives, negatives);
  double loss = 0.0;
  for (auto ep : positives) {
    for (auto en : negatives) {
      const double diff = adjusted[ep] - adjusted[en];
      loss += softplus(-diff);
      if (!grad.empty()) {
        const double s = sigmoid(-diff);
        grad[ep] -= s;
        grad[en] += s;
      }
    }
  }
  return loss;
}

double total_loss(std::span<const double> adjusted, std::span<const double> base, std::span<const EntityId> positives,
                  std::span<const EntityId> negatives, double margin, double kl_weight, std::span<double> grad) {
  const double pref = margin_preference_loss(adjusted, positives, negatives, margin, grad);
  if (kl_weight == 0.0) return pref;
  std::vector<double> kl_grad;
  if (!grad.empty()) kl_grad.assign(grad.size(), 0.0);
  const double kl = kl_answer_loss(base, adjusted, kl_grad);
  for (std::size_t i = 0; i < kl_grad.size(); ++i) grad[i] += kl_weight * kl_grad[i];
  return pref + kl_weight * kl;
}

PreferenceSet sample_interaction_subset(const PreferenceSet& p, std::mt19937_64& rng, bool prefix) {
  if (p.pairs.empty()) fail(ErrorCode::kInvalidArgument, "cannot sample from an empty preference set");
  const std::size_t T = p.pairs.size();
  const std::size_t t = std::uniform_int_distribution<std::size_t>(1, T)(rng);
  PreferenceSet out;
  out.source_cluster = p.source_cluster;
  if (prefix) {
    out.pairs.assign(p.pairs.begin(), p.pairs.begin() + static_cast<std::ptrdiff_t>(t));
    return out;
  }
  std::vector<std::size_t> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, T - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t));
  out.pairs.reserve(t);
  for (std::size_t i = 0; i < t; ++i) out.pairs.push_back(p.pairs[idx[i]]);
  return out;
}

}  // namespace nqr

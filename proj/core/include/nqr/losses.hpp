#pragma once

#include <random>
#include <span>

#include "nqr/preference.hpp"
#include "nqr/types.hpp"

namespace nqr {

// Each loss optionally adds its gradient with respect to `adjusted` into
// `grad` (same length as `adjusted`) when `grad` is non-empty.

// sum over (e+, e-) of max(0, margin + a[e-] - a[e+]). Pairs inside the
// margin contribute no gradient. Throws kInvalidArgument on an empty side.
double margin_preference_loss(std::span<const double> adjusted, std::span<const EntityId> positives,
                              std::span<const EntityId> negatives, double margin, std::span<double> grad = {});

// KL(softmax(base) || softmax(adjusted)) computed in log space.
double kl_answer_loss(std::span<const double> base, std::span<const double> adjusted, std::span<double> grad = {});

// sum over (e+, e-) of -log sigmoid(a[e+] - a[e-]).
double ranknet_loss(std::span<const double> adjusted, std::span<const EntityId> positives,
                    std::span<const EntityId> negatives, std::span<double> grad = {});

// margin loss + kl_weight * KL.
double total_loss(std::span<const double> adjusted, std::span<const double> base, std::span<const EntityId> positives,
                  std::span<const EntityId> negatives, double margin, double kl_weight, std::span<double> grad = {});

// Draws t uniformly from 1..|p| and a uniform size-t subset, kept in the
// set's order. With `prefix`, returns the first t pairs instead.
PreferenceSet sample_interaction_subset(const PreferenceSet& p, std::mt19937_64& rng, bool prefix = false);

}  // namespace nqr

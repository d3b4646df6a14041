#pragma once

#include "crl/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace crl {

// r_k = n_k / n per attribute.
struct ClassRatios {
  std::vector<std::vector<double>> per_attribute;
};

ClassRatios class_ratios(const Dataset& dataset);

/// Random replication (with replacement) of every class of `target` up to the
/// largest class count. Replicas are appended and keep their original ids.
Dataset over_sample(const Dataset& dataset, std::size_t target, std::uint64_t seed);

/// Multi-label replication: repeatedly replicate a random member of the
/// smallest class of the most imbalanced label, keeping the replica only if
/// the mean imbalance measure over labels drops. Stops when no replica
/// improves it or the set reaches `max_growth` times its original size.
Dataset over_sample_multilabel(const Dataset& dataset, std::uint64_t seed, double max_growth = 4.0);

/// Uniform random removal down to the smallest non-empty class of `target`.
/// Survivors keep their original order.
Dataset down_sample(const Dataset& dataset, std::size_t target, std::uint64_t seed);

// w_k = exp(-r_k)
std::vector<double> cost_weights(std::span<const double> ratios);

struct AdjustedScores {
  std::vector<double> scores;
  int prediction = 0;
};

/// p~_k = p_k * exp(-r_k)^T with T a positive integer; the prediction is the
/// arg max (lowest class id on ties).
AdjustedScores threshold_adjust(std::span<const double> scores, std::span<const double> ratios, int temperature);

} // namespace crl

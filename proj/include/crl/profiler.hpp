#pragma once

#include "crl/dataset.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace crl {

std::vector<std::size_t> class_histogram(std::span<const int> labels, std::size_t num_classes);

struct ClassPartition {
  std::vector<std::size_t> minority; // admitted under the rho cap, ascending by (count, id)
  std::vector<std::size_t> minable;  // minority classes with at least two samples
  std::vector<std::size_t> majority; // ascending class id
};

/// Admits the smallest classes while their cumulative count stays within
/// rho * batch_size. Equal counts are admitted in ascending class id.
ClassPartition minority_classes(std::span<const std::size_t> histogram, double rho, std::size_t batch_size);

/// Fraction of samples missing from a uniform distribution at the largest
/// class size: sum_k (n_max - n_k) / (c * n_max). Zero for balanced counts.
double imbalance_measure(std::span<const std::size_t> counts);

struct AttributeProfile {
  std::vector<std::size_t> histogram;
  ClassPartition partition;
};

struct BatchProfile {
  std::size_t batch_size = 0;
  std::vector<AttributeProfile> attributes;
};

BatchProfile profile_batch(const Dataset& batch, double rho);

struct ImbalanceWeights {
  double eta = 0.0;
  std::vector<double> omega;
  std::vector<double> alpha; // eta * omega per attribute
};

// Weights from the full training-set label marginals.
ImbalanceWeights imbalance_weights(const Dataset& training, double eta);

} // namespace crl

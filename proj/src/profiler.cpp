#include "crl/profiler.hpp"

#include "crl/error.hpp"

#include <algorithm>
#include <numeric>

namespace crl {

std::vector<std::size_t> class_histogram(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::size_t> histogram(num_classes, 0);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw ContractError("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++histogram[static_cast<std::size_t>(label)];
  }
  return histogram;
}

ClassPartition minority_classes(std::span<const std::size_t> histogram, double rho, std::size_t batch_size) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ContractError("rho must lie in (0, 1]");
  if (std::accumulate(histogram.begin(), histogram.end(), std::size_t{0}) != batch_size) {
    throw ContractError("histogram does not sum to the batch size");
  }
  std::vector<std::size_t> order(histogram.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return histogram[a] < histogram[b]; });

  const double cap = rho * static_cast<double>(batch_size);
  ClassPartition out;
  std::vector<bool> admitted(histogram.size(), false);
  std::size_t cumulative = 0;
  for (auto k : order) {
    if (static_cast<double>(cumulative + histogram[k]) > cap) break;
    cumulative += histogram[k];
    admitted[k] = true;
    out.minority.push_back(k);
    if (histogram[k] >= 2) out.minable.push_back(k);
  }
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    if (!admitted[k]) out.majority.push_back(k);
  }
  return out;
}

double imbalance_measure(std::span<const std::size_t> counts) {
  if (counts.empty()) throw ContractError("imbalance measure needs at least one class");
  const auto n_max = *std::max_element(counts.begin(), counts.end());
  if (n_max == 0) throw ContractError("imbalance measure of all-zero counts");
  std::size_t deficit = 0;
  for (auto n : counts) deficit += n_max - n;
  return static_cast<double>(deficit) / (static_cast<double>(counts.size()) * static_cast<double>(n_max));
}

BatchProfile profile_batch(const Dataset& batch, double rho) {
  BatchProfile profile;
  profile.batch_size = batch.size();
  for (std::size_t j = 0; j < batch.num_attributes(); ++j) {
    AttributeProfile attr;
    attr.histogram = class_histogram(batch.label_column(j), batch.class_counts[j]);
    attr.partition = minority_classes(attr.histogram, rho, batch.size());
    profile.attributes.push_back(std::move(attr));
  }
  return profile;
}

ImbalanceWeights imbalance_weights(const Dataset& training, double eta) {
  if (eta < 0.0) throw ConfigError("eta must be non-negative");
  ImbalanceWeights weights;
  weights.eta = eta;
  for (std::size_t j = 0; j < training.num_attributes(); ++j) {
    const double omega = imbalance_measure(training.class_totals(j));
    weights.omega.push_back(omega);
    weights.alpha.push_back(eta * omega);
  }
  return weights;
}

} // namespace crl

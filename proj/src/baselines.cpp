#include "crl/baselines.hpp"

#include "crl/error.hpp"
#include "crl/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

namespace crl {

ClassRatios class_ratios(const Dataset& dataset) {
  if (dataset.empty()) throw ContractError("class ratios of an empty dataset");
  ClassRatios ratios;
  for (std::size_t j = 0; j < dataset.num_attributes(); ++j) {
    std::vector<double> r;
    for (auto n : dataset.class_totals(j)) r.push_back(static_cast<double>(n) / static_cast<double>(dataset.size()));
    ratios.per_attribute.push_back(std::move(r));
  }
  return ratios;
}

namespace {

std::vector<std::vector<std::size_t>> members_by_class(const Dataset& dataset, std::size_t target) {
  std::vector<std::vector<std::size_t>> members(dataset.class_counts.at(target));
  for (std::size_t i = 0; i < dataset.size(); ++i) members[static_cast<std::size_t>(dataset.label(i, target))].push_back(i);
  return members;
}

} // namespace

Dataset over_sample(const Dataset& dataset, std::size_t target, std::uint64_t seed) {
  if (dataset.empty()) throw ContractError("cannot over-sample an empty dataset");
  const auto members = members_by_class(dataset, target);
  std::size_t largest = 0;
  for (const auto& m : members) largest = std::max(largest, m.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) {
      std::cerr << "warning: class " << k << " of attribute " << target << " is empty; not over-sampled\n";
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, members[k].size() - 1);
    for (std::size_t extra = members[k].size(); extra < largest; ++extra) order.push_back(members[k][pick(rng)]);
  }
  return dataset.subset(order);
}

Dataset over_sample_multilabel(const Dataset& dataset, std::uint64_t seed, double max_growth) {
  if (dataset.empty()) throw ContractError("cannot over-sample an empty dataset");
  const std::size_t attrs = dataset.num_attributes();
  std::vector<std::vector<std::size_t>> counts;
  for (std::size_t j = 0; j < attrs; ++j) counts.push_back(dataset.class_totals(j));

  auto mean_omega = [&](const std::vector<std::vector<std::size_t>>& c) {
    double total = 0.0;
    for (const auto& row : c) total += imbalance_measure(row);
    return total / static_cast<double>(c.size());
  };

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto limit = static_cast<std::size_t>(max_growth * static_cast<double>(dataset.size()));
  double current = mean_omega(counts);
  while (order.size() < limit && current > 0.0) {
    std::size_t worst = 0;
    double worst_omega = -1.0;
    for (std::size_t j = 0; j < attrs; ++j) {
      const double omega = imbalance_measure(counts[j]);
      if (omega > worst_omega) {
        worst_omega = omega;
        worst = j;
      }
    }
    std::size_t smallest = dataset.class_counts[worst];
    for (std::size_t k = 0; k < counts[worst].size(); ++k) {
      if (counts[worst][k] > 0 && (smallest == dataset.class_counts[worst] || counts[worst][k] < counts[worst][smallest])) {
        smallest = k;
      }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (static_cast<std::size_t>(dataset.label(i, worst)) == smallest) candidates.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const auto chosen = candidates[pick(rng)];
    for (std::size_t j = 0; j < attrs; ++j) ++counts[j][static_cast<std::size_t>(dataset.label(chosen, j))];
    const double next = mean_omega(counts);
    if (next >= current) break;
    current = next;
    order.push_back(chosen);
  }
  return dataset.subset(order);
}

Dataset down_sample(const Dataset& dataset, std::size_t target, std::uint64_t seed) {
  auto members = members_by_class(dataset, target);
  std::size_t smallest = dataset.size();
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) {
      std::cerr << "warning: class " << k << " of attribute " << target << " is empty; ignored when down-sampling\n";
      continue;
    }
    smallest = std::min(smallest, members[k].size());
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    keep.insert(keep.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(std::min(smallest, m.size())));
  }
  std::sort(keep.begin(), keep.end());
  return dataset.subset(keep);
}

std::vector<double> cost_weights(std::span<const double> ratios) {
  std::vector<double> weights;
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw ContractError("class ratio outside [0, 1]");
    weights.push_back(std::exp(-r));
  }
  return weights;
}

AdjustedScores threshold_adjust(std::span<const double> scores, std::span<const double> ratios, int temperature) {
  if (temperature < 1) throw ConfigError("threshold temperature must be a positive integer");
  if (scores.size() != ratios.size() || scores.empty()) throw ContractError("one ratio per class score is required");
  AdjustedScores out;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out.scores.push_back(scores[k] * std::exp(-ratios[k] * static_cast<double>(temperature)));
    if (out.scores[k] > out.scores[static_cast<std::size_t>(out.prediction)]) out.prediction = static_cast<int>(k);
  }
  return out;
}

} // namespace crl

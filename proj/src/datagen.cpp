#include "crl/datagen.hpp"

#include "crl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crl {

namespace {

void validate(const BlobSpec& spec, std::size_t& total) {
  if (spec.input_dim == 0) throw ContractError("blob input dimension must be positive");
  if (spec.attributes.empty()) throw ContractError("blob spec needs at least one attribute");
  total = 0;
  for (std::size_t j = 0; j < spec.attributes.size(); ++j) {
    const auto& attr = spec.attributes[j];
    if (attr.centers.size() < 2) throw ContractError("attribute " + std::to_string(j) + " needs two or more classes");
    if (!(attr.sigma > 0.0)) throw ContractError("blob spread must be positive");
    for (std::size_t k = 0; k < attr.centers.size(); ++k) {
      if (attr.centers[k].size() != spec.input_dim) throw ContractError("center dimension mismatch");
      for (std::size_t l = 0; l < k; ++l) {
        if (attr.centers[k] == attr.centers[l]) throw ContractError("class centers must be pairwise distinct");
      }
    }
    if (spec.joint.empty()) {
      if (attr.counts.size() != attr.centers.size()) throw ContractError("one count per class is required");
      const auto n = std::accumulate(attr.counts.begin(), attr.counts.end(), std::size_t{0});
      if (j == 0) total = n;
      if (n != total) throw ContractError("per-attribute counts must sum to the same sample total");
    }
  }
  if (!spec.joint.empty()) {
    for (const auto& [tuple, count] : spec.joint) {
      if (tuple.size() != spec.attributes.size()) throw ContractError("joint label tuple has wrong arity");
      for (std::size_t j = 0; j < tuple.size(); ++j) {
        if (tuple[j] < 0 || static_cast<std::size_t>(tuple[j]) >= spec.attributes[j].centers.size()) {
          throw ContractError("joint label out of range");
        }
      }
      total += count;
    }
  }
}

} // namespace

Dataset synth_blobs(const BlobSpec& spec) {
  std::size_t total = 0;
  validate(spec, total);
  const std::size_t n_attr = spec.attributes.size();
  std::mt19937_64 rng(spec.seed);

  std::vector<int> labels(total * n_attr);
  if (spec.joint.empty()) {
    for (std::size_t j = 0; j < n_attr; ++j) {
      std::vector<int> column;
      column.reserve(total);
      const auto& counts = spec.attributes[j].counts;
      for (std::size_t k = 0; k < counts.size(); ++k) column.insert(column.end(), counts[k], static_cast<int>(k));
      std::shuffle(column.begin(), column.end(), rng);
      for (std::size_t i = 0; i < total; ++i) labels[i * n_attr + j] = column[i];
    }
  } else {
    std::vector<std::size_t> order;
    for (std::size_t t = 0; t < spec.joint.size(); ++t) order.insert(order.end(), spec.joint[t].second, t);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < total; ++i) {
      const auto& tuple = spec.joint[order[i]].first;
      std::copy(tuple.begin(), tuple.end(), labels.begin() + static_cast<std::ptrdiff_t>(i * n_attr));
    }
  }

  std::vector<std::size_t> class_counts;
  for (const auto& attr : spec.attributes) class_counts.push_back(attr.centers.size());
  Dataset dataset(spec.input_dim, class_counts);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(spec.input_dim);
  for (std::size_t i = 0; i < total; ++i) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t j = 0; j < n_attr; ++j) {
      const auto& attr = spec.attributes[j];
      const auto& center = attr.centers[static_cast<std::size_t>(labels[i * n_attr + j])];
      for (std::size_t d = 0; d < spec.input_dim; ++d) x[d] += center[d] + attr.sigma * noise(rng);
    }
    dataset.append(static_cast<std::int64_t>(i), x,
                   std::span<const int>(labels).subspan(i * n_attr, n_attr));
  }
  return dataset;
}

std::vector<std::vector<double>> random_centers(std::size_t num_classes, std::size_t dim, double scale,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-scale, scale);
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim));
  for (auto& c : centers) {
    for (auto& v : c) v = coord(rng);
  }
  return centers;
}

PowerLawSizes power_law_sizes(const PowerLawSpec& spec) {
  if (spec.num_classes < 2) throw ContractError("power law needs at least two classes");
  if (!(spec.gamma > 0.0)) throw ContractError("power law exponent must be positive");
  if (spec.n_min == 0 || spec.n_max <= spec.n_min) {
    throw ContractError("infeasible power law: need n_max > n_min > 0");
  }
  const double hi = static_cast<double>(spec.n_max);
  const double lo = static_cast<double>(spec.n_min);
  const double tail = std::pow(static_cast<double>(spec.num_classes), spec.gamma);
  // a/(1+b) = hi and a/(tail+b) = lo.
  PowerLawSizes out;
  out.b = (lo * tail - hi) / (hi - lo);
  out.a = hi * (1.0 + out.b);
  // 1 + b = lo (tail - 1) / (hi - lo) > 0, so every denominator i^gamma + b is positive.
  out.sizes.resize(spec.num_classes);
  for (std::size_t i = 1; i <= spec.num_classes; ++i) {
    const double f = out.a / (std::pow(static_cast<double>(i), spec.gamma) + out.b);
    out.sizes[i - 1] = static_cast<std::size_t>(std::floor(f + 0.5));
  }
  out.sizes.front() = spec.n_max;
  out.sizes.back() = spec.n_min;
  return out;
}

Dataset subsample_to_sizes(const Dataset& dataset, std::size_t attribute, const std::vector<std::size_t>& sizes,
                           std::uint64_t seed) {
  const auto classes = dataset.class_counts.at(attribute);
  if (sizes.size() != classes) throw ContractError("one target size per class is required");
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    members[static_cast<std::size_t>(dataset.label(i, attribute))].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < classes; ++k) {
    if (sizes[k] > members[k].size()) {
      throw ContractError("class " + std::to_string(k) + " has " + std::to_string(members[k].size()) +
                          " samples, cannot draw " + std::to_string(sizes[k]));
    }
    std::shuffle(members[k].begin(), members[k].end(), rng);
    keep.insert(keep.end(), members[k].begin(), members[k].begin() + static_cast<std::ptrdiff_t>(sizes[k]));
  }
  std::sort(keep.begin(), keep.end());
  return dataset.subset(keep);
}

std::vector<std::size_t> balanced_sizes(std::size_t total, std::size_t num_classes) {
  if (num_classes == 0) throw ContractError("need at least one class");
  // Every quota total/c has the same fractional part, so the remainder goes to the lowest ids.
  std::vector<std::size_t> sizes(num_classes, total / num_classes);
  for (std::size_t k = 0; k < total % num_classes; ++k) ++sizes[k];
  return sizes;
}

Dataset balanced_companion(const Dataset& dataset, std::size_t attribute, std::size_t total, std::uint64_t seed) {
  return subsample_to_sizes(dataset, attribute, balanced_sizes(total, dataset.class_counts.at(attribute)), seed);
}

} // namespace crl

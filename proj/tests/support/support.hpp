#pragma once

// Random generators and brute-force oracles shared by the unit and acceptance tests.

#include "crl/dataset.hpp"
#include "crl/mining.hpp"
#include "crl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace crl::testing {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) { // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  int label(int classes) { return std::uniform_int_distribution<int>(0, classes - 1)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  Tensor matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = uniform(lo, hi);
    return Tensor::matrix(rows, cols, std::move(v));
  }

  // Values on a coarse grid so that ties actually occur.
  std::vector<double> gridded(std::size_t n, int levels) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(label(levels)) / static_cast<double>(levels);
    return v;
  }

  std::vector<int> labels(std::size_t n, int classes) {
    std::vector<int> v(n);
    for (auto& x : v) x = label(classes);
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

inline double softmax_row_sum(const Tensor& scores, std::size_t r) {
  double s = 0.0;
  for (double v : scores.row(r)) s += v;
  return s;
}

inline Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double top = logits.at(r, 0);
    for (std::size_t c = 1; c < logits.cols(); ++c) top = std::max(top, logits.at(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) total += std::exp(logits.at(r, c) - top);
    for (std::size_t c = 0; c < logits.cols(); ++c) out.at(r, c) = std::exp(logits.at(r, c) - top) / total;
  }
  return out;
}

inline double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Full stable sort of (key, id) and truncation: the reference for top-kappa mining.
inline std::vector<std::size_t> sorted_prefix(std::vector<std::pair<double, std::size_t>> items, std::size_t kappa) {
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size() && i < kappa; ++i) out.push_back(items[i].second);
  return out;
}

struct OracleSets {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

inline OracleSets class_level_oracle(const std::vector<double>& scores, const std::vector<int>& labels, int cls,
                                     std::size_t kappa) {
  std::vector<std::pair<double, std::size_t>> same, other;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cls) same.emplace_back(scores[i], i);
    else other.emplace_back(-scores[i], i);
  }
  return {sorted_prefix(same, kappa), sorted_prefix(other, kappa)};
}

inline OracleSets instance_level_oracle(const Tensor& features, const std::vector<int>& labels, std::size_t anchor,
                                        std::size_t kappa) {
  std::vector<std::pair<double, std::size_t>> same, other;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i == anchor) continue;
    const double d = euclid(features.row(anchor), features.row(i));
    if (labels[i] == labels[anchor]) same.emplace_back(-d, i);
    else other.emplace_back(d, i);
  }
  return {sorted_prefix(same, kappa), sorted_prefix(other, kappa)};
}

/// Exhaustive search over all class subsets whose total count fits the cap.
/// Among the subsets of maximum cardinality it returns the one whose classes,
/// listed in ascending (count, id) order, form the lexicographically smallest
/// sequence.
inline std::vector<std::size_t> minority_oracle(const std::vector<std::size_t>& histogram, double cap) {
  const std::size_t c = histogram.size();
  auto rank = [&](std::size_t k) { return std::make_pair(histogram[k], k); };
  std::vector<std::size_t> best;
  bool found = false;
  for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
    std::size_t total = 0;
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < c; ++k) {
      if (mask & (1u << k)) {
        total += histogram[k];
        members.push_back(k);
      }
    }
    if (static_cast<double>(total) > cap) continue;
    std::sort(members.begin(), members.end(), [&](auto a, auto b) { return rank(a) < rank(b); });
    auto key = [&](const std::vector<std::size_t>& v) {
      std::vector<std::pair<std::size_t, std::size_t>> out;
      for (auto k : v) out.push_back(rank(k));
      return out;
    };
    if (!found || members.size() > best.size() || (members.size() == best.size() && key(members) < key(best))) {
      best = members;
      found = true;
    }
  }
  return best;
}

// P(d_neg <= d_pos) over all positive/negative combinations.
inline double pairwise_order_probability(const std::vector<double>& d_pos, const std::vector<double>& d_neg) {
  std::size_t hits = 0;
  for (double p : d_pos) {
    for (double n : d_neg) hits += n <= p ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(d_pos.size() * d_neg.size());
}

inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim, std::vector<std::size_t> classes) {
  Dataset ds(dim, classes);
  std::vector<double> x(dim);
  std::vector<int> y(classes.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    for (std::size_t j = 0; j < classes.size(); ++j) y[j] = rng.label(static_cast<int>(classes[j]));
    ds.append(static_cast<std::int64_t>(i), x, y);
  }
  return ds;
}

} // namespace crl::testing

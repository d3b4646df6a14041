#pragma once

#include "crl/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace crl {

struct AttributeBlobs {
  std::vector<std::vector<double>> centers; // one per class
  double sigma = 1.0;
  std::vector<std::size_t> counts; // samples per class
};

/// Gaussian blobs. A sample's features are the sum over attributes of its
/// class center plus isotropic noise of that attribute's spread. Labels are
/// drawn independently per attribute with exact per-class counts, unless
/// `joint` lists explicit label tuples with multiplicities.
struct BlobSpec {
  std::size_t input_dim = 0;
  std::vector<AttributeBlobs> attributes;
  std::vector<std::pair<std::vector<int>, std::size_t>> joint;
  std::uint64_t seed = 0;
};

Dataset synth_blobs(const BlobSpec& spec);

// Centers drawn uniformly in [-scale, scale]^dim.
std::vector<std::vector<double>> random_centers(std::size_t num_classes, std::size_t dim, double scale,
                                                std::uint64_t seed);

struct PowerLawSpec {
  std::size_t num_classes = 0;
  double gamma = 1.0;
  std::size_t n_max = 0;
  std::size_t n_min = 0;
};

struct PowerLawSizes {
  double a = 0.0;
  double b = 0.0;
  std::vector<std::size_t> sizes; // index 0 is class 1
};

/// Class sizes f(i) = a / (i^gamma + b) with f(1) = n_max and f(c) = n_min,
/// rounded half-up with both endpoints pinned exactly.
PowerLawSizes power_law_sizes(const PowerLawSpec& spec);

/// Uniform random subsample to `sizes` per class of `attribute`; surviving
/// samples keep their original order.
Dataset subsample_to_sizes(const Dataset& dataset, std::size_t attribute, const std::vector<std::size_t>& sizes,
                           std::uint64_t seed);

// Largest-remainder split of `total` over `num_classes`; ties go to lower class ids.
std::vector<std::size_t> balanced_sizes(std::size_t total, std::size_t num_classes);

// Equal-size class-balanced set with the same total as `sizes`.
Dataset balanced_companion(const Dataset& dataset, std::size_t attribute, std::size_t total, std::uint64_t seed);

} // namespace crl

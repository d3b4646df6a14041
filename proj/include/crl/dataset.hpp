#pragma once

#include "crl/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace crl {

/// Feature vectors with one class label per attribute.
///
/// File format (comma-delimited UTF-8):
///   dim=<d>,attrs=<n_attr>,classes=<|Z_1|;...;|Z_n|>
///   <id>,<f_0>,...,<f_{d-1}>,<a_1>,...,<a_{n_attr}>
/// Features are printed with 17 significant digits; labels are zero-based.
struct Dataset {
  std::size_t dim = 0;
  std::vector<std::size_t> class_counts;
  std::vector<std::int64_t> ids;
  std::vector<double> features;
  std::vector<int> labels;

  Dataset() = default;
  Dataset(std::size_t dim, std::vector<std::size_t> class_counts);

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  std::size_t num_attributes() const { return class_counts.size(); }

  std::span<const double> feature(std::size_t i) const;
  int label(std::size_t i, std::size_t attribute) const { return labels[i * num_attributes() + attribute]; }
  std::vector<int> label_column(std::size_t attribute) const;
  // Per-class sample counts for one attribute.
  std::vector<std::size_t> class_totals(std::size_t attribute) const;

  void append(std::int64_t id, std::span<const double> x, std::span<const int> y);
  Dataset subset(std::span<const std::size_t> indices) const;
  Tensor feature_matrix(std::span<const std::size_t> indices) const;
  Tensor feature_matrix() const;

  // Throws ContractError when labels or extents are inconsistent.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

} // namespace crl

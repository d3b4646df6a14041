#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace crl {

/// counts(i, j): samples of true class i predicted as class j.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const { return classes_; }
  std::size_t operator()(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted);
  std::size_t row_total(std::size_t truth) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes);

struct Sensitivity {
  std::vector<double> per_class;        // NaN for excluded classes
  std::vector<std::size_t> excluded;    // classes with no test samples
  double balanced_accuracy = 0.0;       // mean over included classes
};

// S_i = n_(i,i) / n_i; classes with n_i = 0 are excluded from the mean with a warning.
Sensitivity sensitivity(const ConfusionMatrix& matrix);

double mean_balanced_accuracy(std::span<const double> per_label);

struct LabelMetrics {
  std::string name;
  std::size_t num_classes = 0;
  std::vector<double> sensitivity;
  std::vector<std::size_t> excluded;
  double balanced_accuracy = 0.0;
  ConfusionMatrix matrix{2};
};

struct MetricsReport {
  std::vector<LabelMetrics> labels;
  double mean_balanced_accuracy = 0.0;

  friend bool operator==(const MetricsReport& a, const MetricsReport& b);
};

// predictions/labels are row-major [samples x attributes].
MetricsReport build_report(std::span<const int> predictions, std::span<const int> labels,
                           std::span<const std::size_t> class_counts);

void write_metrics_table(const MetricsReport& report, std::ostream& out);
// label,classes,S_0;S_1;...,A_bln per attribute, then a mean row.
void write_metrics_csv(const MetricsReport& report, std::ostream& out);

} // namespace crl

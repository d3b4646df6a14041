#include "crl/metrics.hpp"

#include "crl/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>

namespace crl {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : classes_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ContractError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) throw ContractError("class id outside the confusion matrix");
  ++counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t total = 0;
  for (std::size_t j = 0; j < classes_; ++j) total += (*this)(truth, j);
  return total;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes) {
  if (predictions.size() != labels.size()) throw ContractError("predictions and labels differ in length");
  ConfusionMatrix matrix(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes ||
        static_cast<std::size_t>(predictions[i]) >= num_classes) {
      throw ContractError("class id at position " + std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                          ")");
    }
    matrix.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(predictions[i]));
  }
  return matrix;
}

Sensitivity sensitivity(const ConfusionMatrix& matrix) {
  Sensitivity out;
  double total = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < matrix.num_classes(); ++i) {
    const auto n = matrix.row_total(i);
    if (n == 0) {
      out.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      out.excluded.push_back(i);
      std::cerr << "warning: class " << i << " has no test samples; excluded from balanced accuracy\n";
      continue;
    }
    const double s = static_cast<double>(matrix(i, i)) / static_cast<double>(n);
    out.per_class.push_back(s);
    total += s;
    ++included;
  }
  if (included == 0) throw ContractError("no class has test samples");
  out.balanced_accuracy = total / static_cast<double>(included);
  return out;
}

double mean_balanced_accuracy(std::span<const double> per_label) {
  if (per_label.empty()) throw ContractError("mean balanced accuracy of an empty label list");
  return std::accumulate(per_label.begin(), per_label.end(), 0.0) / static_cast<double>(per_label.size());
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  if (a.labels.size() != b.labels.size() || a.mean_balanced_accuracy != b.mean_balanced_accuracy) return false;
  for (std::size_t j = 0; j < a.labels.size(); ++j) {
    const auto& x = a.labels[j];
    const auto& y = b.labels[j];
    if (x.name != y.name || x.num_classes != y.num_classes || x.excluded != y.excluded ||
        x.balanced_accuracy != y.balanced_accuracy || !(x.matrix == y.matrix)) {
      return false;
    }
  }
  return true;
}

MetricsReport build_report(std::span<const int> predictions, std::span<const int> labels,
                           std::span<const std::size_t> class_counts) {
  const std::size_t attrs = class_counts.size();
  if (attrs == 0 || predictions.size() != labels.size() || labels.size() % attrs != 0) {
    throw ContractError("prediction and label matrices do not match the attribute count");
  }
  const std::size_t n = labels.size() / attrs;
  MetricsReport report;
  std::vector<double> accuracies;
  for (std::size_t j = 0; j < attrs; ++j) {
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = predictions[i * attrs + j];
      y[i] = labels[i * attrs + j];
    }
    LabelMetrics label;
    label.name = "attr" + std::to_string(j);
    label.num_classes = class_counts[j];
    label.matrix = confusion(p, y, class_counts[j]);
    auto s = sensitivity(label.matrix);
    label.sensitivity = s.per_class;
    label.excluded = s.excluded;
    label.balanced_accuracy = s.balanced_accuracy;
    accuracies.push_back(s.balanced_accuracy);
    report.labels.push_back(std::move(label));
  }
  report.mean_balanced_accuracy = mean_balanced_accuracy(accuracies);
  return report;
}

void write_metrics_table(const MetricsReport& report, std::ostream& out) {
  char buffer[64];
  out << "label      classes  A_bln     sensitivities\n";
  for (const auto& label : report.labels) {
    std::snprintf(buffer, sizeof buffer, "%-10s %7zu  %.6f ", label.name.c_str(), label.num_classes,
                  label.balanced_accuracy);
    out << buffer;
    for (double s : label.sensitivity) {
      if (std::isnan(s)) {
        out << " -";
      } else {
        std::snprintf(buffer, sizeof buffer, " %.4f", s);
        out << buffer;
      }
    }
    out << '\n';
  }
  std::snprintf(buffer, sizeof buffer, "mean A_bln %.6f\n", report.mean_balanced_accuracy);
  out << buffer;
}

void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
  char buffer[40];
  out << "label,classes,sensitivity,balanced_accuracy\n";
  for (const auto& label : report.labels) {
    out << label.name << ',' << label.num_classes << ',';
    for (std::size_t k = 0; k < label.sensitivity.size(); ++k) {
      if (k) out << ';';
      if (std::isnan(label.sensitivity[k])) {
        out << "nan";
      } else {
        *std::to_chars(buffer, buffer + sizeof buffer - 1, label.sensitivity[k]).ptr = '\0';
        out << buffer;
      }
    }
    *std::to_chars(buffer, buffer + sizeof buffer - 1, label.balanced_accuracy).ptr = '\0';
    out << ',' << buffer << '\n';
  }
  *std::to_chars(buffer, buffer + sizeof buffer - 1, report.mean_balanced_accuracy).ptr = '\0';
  out << "mean,," << ',' << buffer << '\n';
}

} // namespace crl

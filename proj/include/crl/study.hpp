#pragma once

#include "crl/config.hpp"
#include "crl/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace crl {

enum class StudyKind { GammaSweep, KappaSweep, RhoSweep, LossMatrix, ClassScope };

std::string to_string(StudyKind kind);
StudyKind parse_study(const std::string& text);

struct StudyOptions {
  StudyKind kind = StudyKind::LossMatrix;
  RunConfig base;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t threads = 1;

  // Empty grids fall back to the defaults of each study.
  std::vector<double> gammas;
  std::vector<std::size_t> kappas;
  std::vector<double> rhos;

  // Gamma sweep: power-law subsets of the training pool on base.target_label.
  // n_max = 0 uses the smallest class of the pool; n_min = 0 uses n_max / ratio.
  std::size_t n_max = 0;
  std::size_t n_min = 0;
  double imbalance_ratio = 20.0;

  void validate() const;
};

std::vector<double> default_gammas();
std::vector<std::size_t> default_kappas();
std::vector<double> default_rhos();

/// One grid point and training variant. A_bln and minority sensitivity are
/// averaged over the seeds that finished; failed seeds are counted.
struct StudyRow {
  std::string point;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  std::vector<double> balanced_accuracy; // per seed, NaN when the run failed
  std::vector<double> minority_sensitivity;
  double mean_balanced_accuracy = 0.0;
  double std_balanced_accuracy = 0.0;
  double mean_minority_sensitivity = 0.0;
  std::size_t failures = 0;
  std::string note;
  double seconds = 0.0;
};

struct StudyReport {
  StudyKind kind = StudyKind::LossMatrix;
  std::vector<StudyRow> rows;
};

/// Runs every grid point for every seed, optionally on `threads` workers.
/// Rows are assembled in grid order, so the report does not depend on the
/// thread count. Minority sensitivity averages the per-class sensitivity of
/// the classes that are smallest in the training data for base.target_label.
StudyReport run_study(const StudyOptions& options, const Dataset& training, const Dataset& test,
                      const Dataset* validation = nullptr);

// Deterministic columns only; timing goes to write_study_timing_csv.
void write_study_csv(const StudyReport& report, std::ostream& out);
void write_study_timing_csv(const StudyReport& report, std::ostream& out);
void write_study_table(const StudyReport& report, std::ostream& out);

} // namespace crl

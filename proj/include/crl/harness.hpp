#pragma once

#include "crl/baselines.hpp"
#include "crl/config.hpp"
#include "crl/dataset.hpp"
#include "crl/metrics.hpp"
#include "crl/model.hpp"
#include "crl/profiler.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace crl {

struct IterationLog {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  std::size_t batch_size = 0;
  std::vector<double> ce;  // per attribute
  std::vector<double> crl; // per attribute, 0 when no rectification term was built
  std::vector<double> alpha;
  double total = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::optional<double> validation_accuracy;
};

struct PhaseTimes {
  double forward = 0.0;
  double mining = 0.0;
  double backward = 0.0;
  double update = 0.0;
  double validation = 0.0;
};

struct TrainLog {
  ImbalanceWeights weights;
  std::vector<IterationLog> iterations;
  std::vector<EpochLog> epochs;
  PhaseTimes seconds;
};

// Test-time prior correction for the threshold-adjustment baseline.
struct ThresholdSetting {
  int temperature = 1;
  ClassRatios ratios;
};

struct TrainResult {
  Model model;
  TrainLog log;
  std::optional<ThresholdSetting> threshold;
  bool diverged = false;
};

/// Mini-batch SGD with momentum and L2 weight decay. Each batch runs
/// forward, batch profiling, hard mining, the imbalance-weighted loss and
/// backward. Deterministic for a fixed config seed. On a non-finite loss the
/// parameters of the last good step are returned with `diverged` set.
TrainResult train(const RunConfig& config, const Dataset& training, const Dataset* validation = nullptr);

// Arg max per attribute (lowest class id on ties); row-major [samples x attributes].
std::vector<int> predict(const Model& model, const Dataset& dataset, const ThresholdSetting* threshold = nullptr);

MetricsReport evaluate(const Model& model, const Dataset& dataset, const ThresholdSetting* threshold = nullptr);

// Picks T in {1..5} maximising mean balanced accuracy on `validation` (lowest T on ties).
ThresholdSetting select_temperature(const Model& model, const Dataset& validation, const ClassRatios& ratios);

void write_trainlog_csv(const TrainLog& log, std::ostream& out);

/// File-driven run used by the CLI: reads the datasets named in `config`,
/// trains, evaluates on the test split when given, and writes model.ckpt,
/// trainlog.csv, metrics.csv, report.json and config.txt under out_dir.
/// Returns false when training diverged.
bool run_training(const RunConfig& config);

} // namespace crl

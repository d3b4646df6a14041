#include "crl/study.hpp"

#include "crl/datagen.hpp"
#include "crl/error.hpp"
#include "crl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace crl {

std::string to_string(StudyKind kind) {
  switch (kind) {
  case StudyKind::GammaSweep: return "gamma-sweep";
  case StudyKind::KappaSweep: return "kappa-sweep";
  case StudyKind::RhoSweep: return "rho-sweep";
  case StudyKind::LossMatrix: return "loss-matrix";
  case StudyKind::ClassScope: return "class-scope";
  }
  return "?";
}

StudyKind parse_study(const std::string& text) {
  for (auto kind : {StudyKind::GammaSweep, StudyKind::KappaSweep, StudyKind::RhoSweep, StudyKind::LossMatrix,
                    StudyKind::ClassScope}) {
    if (to_string(kind) == text) return kind;
  }
  throw ConfigError("unknown study '" + text + "'");
}

std::vector<double> default_gammas() { return {0.2, 0.4, 0.6, 0.8, 1.0}; }
std::vector<std::size_t> default_kappas() { return {1, 5, 25, 75, 175}; }
std::vector<double> default_rhos() { return {0.1, 0.3, 0.5}; }

void StudyOptions::validate() const {
  base.validate();
  if (seeds.empty()) throw ConfigError("a study needs at least one seed");
  if (threads == 0) throw ConfigError("threads must be at least 1");
  for (double g : gammas) {
    if (!(g > 0.0)) throw ConfigError("gamma must be positive");
  }
  for (auto k : kappas) {
    if (k == 0) throw ConfigError("kappa must be at least 1");
  }
  for (double r : rhos) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  }
  if (!(imbalance_ratio > 1.0)) throw ConfigError("imbalance ratio must exceed 1");
}

namespace {

struct Job {
  std::size_t row = 0;
  std::size_t seed_index = 0;
  RunConfig config;
  std::shared_ptr<const Dataset> training;
  std::string setup_error;
};

struct Outcome {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double minority = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct Point {
  std::string point;
  std::string variant;
  std::string note;
  std::vector<std::size_t> minority; // evaluation classes of the target label
};

// Classes with fewer than half the samples of the largest class; when there
// are none (balanced data) the smallest class stands in.
std::vector<std::size_t> minority_of(const Dataset& training, std::size_t attribute) {
  const auto totals = training.class_totals(attribute);
  const std::size_t largest = *std::max_element(totals.begin(), totals.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    if (2 * totals[k] < largest) out.push_back(k);
  }
  if (out.empty()) out.push_back(static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin()));
  return out;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Outcome run_job(const Job& job, const Dataset& test, const Dataset* validation, const std::vector<std::size_t>& minority) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  if (!job.setup_error.empty()) throw ContractError(job.setup_error);
  const auto result = train(job.config, *job.training, validation);
  if (!result.diverged) {
    const auto report = evaluate(result.model, test, result.threshold ? &*result.threshold : nullptr);
    outcome.accuracy = report.mean_balanced_accuracy;
    const auto& sens = report.labels[job.config.target_label].sensitivity;
    double total = 0.0;
    std::size_t used = 0;
    for (auto k : minority) {
      if (!std::isnan(sens[k])) {
        total += sens[k];
        ++used;
      }
    }
    if (used > 0) outcome.minority = total / static_cast<double>(used);
  }
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

void summarise(StudyRow& row) {
  double sum = 0.0, sum_minority = 0.0;
  std::size_t ok = 0, ok_minority = 0;
  for (std::size_t s = 0; s < row.seeds.size(); ++s) {
    if (std::isnan(row.balanced_accuracy[s])) continue;
    sum += row.balanced_accuracy[s];
    ++ok;
    if (!std::isnan(row.minority_sensitivity[s])) {
      sum_minority += row.minority_sensitivity[s];
      ++ok_minority;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.failures = row.seeds.size() - ok;
  row.mean_balanced_accuracy = ok > 0 ? sum / static_cast<double>(ok) : nan;
  row.mean_minority_sensitivity = ok_minority > 0 ? sum_minority / static_cast<double>(ok_minority) : nan;
  double var = 0.0;
  for (double v : row.balanced_accuracy) {
    if (!std::isnan(v)) var += (v - row.mean_balanced_accuracy) * (v - row.mean_balanced_accuracy);
  }
  row.std_balanced_accuracy = ok > 1 ? std::sqrt(var / static_cast<double>(ok - 1)) : 0.0;
}

} // namespace

StudyReport run_study(const StudyOptions& options, const Dataset& training, const Dataset& test,
                      const Dataset* validation) {
  options.validate();
  training.validate();
  const std::size_t target = options.base.target_label;
  if (target >= training.num_attributes()) throw ConfigError("target label out of range");

  std::vector<Point> points;
  std::vector<Job> jobs;
  const auto shared_training = std::make_shared<const Dataset>(training);
  const auto training_minority = minority_of(training, target);

  auto add_point = [&](Point point, const RunConfig& config) {
    const std::size_t row = points.size();
    for (std::size_t s = 0; s < options.seeds.size(); ++s) {
      RunConfig c = config;
      c.seed = options.seeds[s];
      jobs.push_back({row, s, c, shared_training, {}});
    }
    points.push_back(std::move(point));
  };

  RunConfig crl_base = options.base;
  crl_base.use_crl = true;

  switch (options.kind) {
  case StudyKind::LossMatrix:
    for (auto level : {MiningLevel::Class, MiningLevel::Instance}) {
      for (auto family : {CrlFamily::Relative, CrlFamily::Absolute, CrlFamily::Distribution}) {
        RunConfig c = crl_base;
        c.loss.family = family;
        c.loss.level = level;
        add_point({to_string(family) + "/" + to_string(level), "ce+crl", "", training_minority}, c);
      }
    }
    break;
  case StudyKind::KappaSweep:
    for (auto kappa : options.kappas.empty() ? default_kappas() : options.kappas) {
      RunConfig c = crl_base;
      c.kappa = kappa;
      add_point({"kappa=" + std::to_string(kappa), "ce+crl", kappa == 1 ? "unstable-convergence" : "",
                 training_minority},
                c);
    }
    break;
  case StudyKind::RhoSweep:
    for (double rho : options.rhos.empty() ? default_rhos() : options.rhos) {
      RunConfig c = crl_base;
      c.rho = rho;
      add_point({"rho=" + format_number(rho), "ce+crl", "", training_minority}, c);
    }
    break;
  case StudyKind::ClassScope:
    for (auto scope : {ClassScope::Minority, ClassScope::All}) {
      RunConfig c = crl_base;
      c.scope = scope;
      add_point({"scope=" + to_string(scope), "ce+crl", "", training_minority}, c);
    }
    break;
  case StudyKind::GammaSweep: {
    const auto totals = training.class_totals(target);
    const std::size_t c = totals.size();
    const std::size_t n_max = options.n_max > 0 ? options.n_max : *std::min_element(totals.begin(), totals.end());
    const std::size_t n_min = options.n_min > 0
                                  ? options.n_min
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                                 static_cast<double>(n_max) / options.imbalance_ratio)));
    for (double gamma : options.gammas.empty() ? default_gammas() : options.gammas) {
      const auto sizes = power_law_sizes({c, gamma, n_max, n_min}).sizes;
      std::size_t total = 0;
      for (auto s : sizes) total += s;
      const std::string point = "gamma=" + format_number(gamma);
      std::vector<std::size_t> minority;
      for (std::size_t k = 0; k < c; ++k) {
        if (2 * sizes[k] < sizes[0]) minority.push_back(k);
      }
      if (minority.empty()) minority.push_back(c - 1);

      const std::size_t first = points.size();
      points.push_back({point, "imb-ce", "", minority});
      points.push_back({point, "imb-crl", "", minority});
      points.push_back({point, "bln-ce", "", minority});
      for (std::size_t s = 0; s < options.seeds.size(); ++s) {
        const std::uint64_t seed = options.seeds[s];
        std::shared_ptr<const Dataset> imbalanced, balanced;
        std::string imbalanced_error, balanced_error;
        try {
          imbalanced = std::make_shared<const Dataset>(subsample_to_sizes(training, target, sizes, seed));
        } catch (const ContractError& e) {
          imbalanced_error = e.what();
        }
        try {
          balanced = std::make_shared<const Dataset>(balanced_companion(training, target, total, seed));
        } catch (const ContractError& e) {
          balanced_error = e.what();
        }
        RunConfig ce = options.base;
        ce.use_crl = false;
        ce.seed = seed;
        RunConfig with_crl = crl_base;
        with_crl.seed = seed;
        jobs.push_back({first, s, ce, imbalanced, imbalanced_error});
        jobs.push_back({first + 1, s, with_crl, imbalanced, imbalanced_error});
        jobs.push_back({first + 2, s, ce, balanced, balanced_error});
      }
    }
    break;
  }
  }

  std::vector<std::vector<Outcome>> outcomes(points.size(), std::vector<Outcome>(options.seeds.size()));
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        outcomes[job.row][job.seed_index] = run_job(job, test, validation, points[job.row].minority);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::min(options.threads, jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  StudyReport report{options.kind, {}};
  for (std::size_t r = 0; r < points.size(); ++r) {
    StudyRow row;
    row.point = points[r].point;
    row.variant = points[r].variant;
    row.note = points[r].note;
    row.seeds = options.seeds;
    for (const auto& o : outcomes[r]) {
      row.balanced_accuracy.push_back(o.accuracy);
      row.minority_sensitivity.push_back(o.minority);
      row.seconds += o.seconds;
    }
    summarise(row);
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i].empty()) continue;
    auto& row = report.rows[jobs[i].row];
    const std::string text = "seed " + std::to_string(jobs[i].config.seed) + " failed: " + errors[i];
    row.note = row.note.empty() ? text : row.note + "; " + text;
  }
  return report;
}

namespace {

std::string real(double v) {
  if (std::isnan(v)) return "nan";
  char buffer[40];
  *std::to_chars(buffer, buffer + sizeof buffer - 1, v).ptr = '\0';
  return buffer;
}

std::string quoted(const std::string& text) {
  if (text.find_first_of(",\"") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

} // namespace

void write_study_csv(const StudyReport& report, std::ostream& out) {
  out << "study,point,variant,seeds,failures,mean_balanced_accuracy,std_balanced_accuracy,"
         "mean_minority_sensitivity,per_seed_balanced_accuracy,note\n";
  for (const auto& row : report.rows) {
    std::string per_seed;
    for (std::size_t s = 0; s < row.balanced_accuracy.size(); ++s) {
      if (s > 0) per_seed += ';';
      per_seed += real(row.balanced_accuracy[s]);
    }
    out << to_string(report.kind) << ',' << quoted(row.point) << ',' << row.variant << ',' << row.seeds.size()
        << ',' << row.failures << ',' << real(row.mean_balanced_accuracy) << ','
        << real(row.std_balanced_accuracy) << ',' << real(row.mean_minority_sensitivity) << ',' << per_seed
        << ',' << quoted(row.note) << '\n';
  }
}

void write_study_timing_csv(const StudyReport& report, std::ostream& out) {
  out << "study,point,variant,seconds\n";
  for (const auto& row : report.rows) {
    out << to_string(report.kind) << ',' << quoted(row.point) << ',' << row.variant << ',' << row.seconds << '\n';
  }
}

void write_study_table(const StudyReport& report, std::ostream& out) {
  out << to_string(report.kind) << '\n';
  out << std::left << std::setw(28) << "point" << std::setw(10) << "variant" << std::right << std::setw(10)
      << "A_bln" << std::setw(9) << "std" << std::setw(10) << "minority" << std::setw(6) << "fail"
      << std::setw(10) << "seconds"
      << "  note\n";
  out << std::fixed;
  for (const auto& row : report.rows) {
    out << std::left << std::setw(28) << row.point << std::setw(10) << row.variant << std::right
        << std::setprecision(4) << std::setw(10) << row.mean_balanced_accuracy << std::setw(9)
        << row.std_balanced_accuracy << std::setw(10) << row.mean_minority_sensitivity << std::setw(6)
        << row.failures << std::setprecision(1) << std::setw(10) << row.seconds << "  " << row.note << '\n';
  }
  out << std::defaultfloat;
}

} // namespace crl

#include "crl/harness.hpp"

#include "crl/error.hpp"
#include "crl/losses.hpp"
#include "crl/mining.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace crl {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

Dataset resample(const RunConfig& config, const Dataset& training) {
  switch (config.baseline) {
  case Baseline::OverSampling:
    return training.num_attributes() == 1 ? over_sample(training, config.target_label, config.seed)
                                          : over_sample_multilabel(training, config.seed);
  case Baseline::DownSampling:
    return down_sample(training, config.target_label, config.seed);
  default:
    return training;
  }
}

struct Snapshot {
  std::vector<Parameter> parameters;
  std::vector<Tensor> velocity;
};

NodeId rectification_term(Graph& graph, const RunConfig& config, const BranchNodes& branch, const Tensor& scores,
                          const Tensor& features, std::span<const int> labels, const AttributeProfile& profile,
                          std::size_t attribute, std::size_t num_classes) {
  const auto& loss = config.loss;
  const auto mined =
      mine_attribute(scores, features, labels, profile, attribute, loss.level, config.kappa, config.scope);
  const NodeId source = loss.level == MiningLevel::Class ? branch.scores : branch.features;
  switch (loss.family) {
  case CrlFamily::Relative:
    return crl_relative(graph, source, loss.level, mined.triplets, loss.relative_margin(num_classes));
  case CrlFamily::Absolute:
    return crl_absolute(graph, source, loss.level, mined.pairs, loss.absolute_margin());
  case CrlFamily::Distribution:
    return crl_distribution(graph, source, loss.level, mined.pairs, loss.bins,
                            distribution_range(loss.level, features, mined.pairs));
  }
  throw ContractError("unknown CRL family");
}

} // namespace

TrainResult train(const RunConfig& config, const Dataset& input, const Dataset* validation) {
  config.validate();
  input.validate();
  if (config.target_label >= input.num_attributes()) throw ConfigError("target label out of range");
  const Dataset training = resample(config, input);
  if (training.size() < 2) throw ContractError("training needs at least two samples");
  const std::size_t attrs = training.num_attributes();

  ModelSpec spec{training.dim, config.trunk_widths, config.feature_dim, training.class_counts};
  TrainResult result{build_model(spec, config.seed), {}, std::nullopt, false};
  Model& model = result.model;
  TrainLog& log = result.log;
  log.weights = imbalance_weights(training, config.use_crl ? config.loss.eta : 0.0);
  for (double alpha : log.weights.alpha) check_alpha(alpha);

  std::vector<std::vector<double>> class_weights(attrs);
  if (config.baseline == Baseline::CostSensitive) {
    const auto ratios = class_ratios(training);
    for (std::size_t j = 0; j < attrs; ++j) class_weights[j] = cost_weights(ratios.per_attribute[j]);
  }

  std::vector<Tensor> velocity;
  for (const auto& p : model.parameters()) velocity.push_back(Tensor::zeros(p.value.shape()));

  const auto& opt = config.optimizer;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t iteration = 0;

  for (std::size_t epoch = 0; epoch < opt.epochs && !result.diverged; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      if (stop - start < 2) continue;
      const Dataset batch = training.subset(std::span<const std::size_t>(order).subspan(start, stop - start));

      Snapshot snapshot{model.parameters(), velocity};
      IterationLog entry;
      entry.epoch = epoch;
      entry.iteration = iteration++;
      entry.batch_size = batch.size();
      entry.alpha = log.weights.alpha;
      try {
        auto t0 = Clock::now();
        Graph graph;
        const auto nodes = build_forward(graph, model, batch.feature_matrix());
        graph.eval(nodes.branches.back().scores);
        log.seconds.forward += since(t0);

        t0 = Clock::now();
        std::vector<NodeId> ce(attrs);
        std::vector<std::optional<NodeId>> crl(attrs);
        for (std::size_t j = 0; j < attrs; ++j) {
          const auto labels = batch.label_column(j);
          ce[j] = cross_entropy(graph, nodes.branches[j].scores, labels, class_weights[j]);
          if (config.use_crl && log.weights.alpha[j] > 0.0) {
            AttributeProfile profile;
            profile.histogram = class_histogram(labels, batch.class_counts[j]);
            profile.partition = minority_classes(profile.histogram, config.rho, batch.size());
            crl[j] = rectification_term(graph, config, nodes.branches[j], graph.value(nodes.branches[j].scores),
                                        graph.value(nodes.branches[j].features), labels, profile, j,
                                        batch.class_counts[j]);
          }
        }
        const NodeId total = combined_loss(graph, ce, crl, log.weights.alpha);
        entry.total = graph.eval(total).item();
        for (std::size_t j = 0; j < attrs; ++j) {
          entry.ce.push_back(graph.value(ce[j]).item());
          entry.crl.push_back(crl[j] ? graph.value(*crl[j]).item() : 0.0);
        }
        log.seconds.mining += since(t0);

        t0 = Clock::now();
        const auto grads = graph.backward(total);
        log.seconds.backward += since(t0);

        t0 = Clock::now();
        auto& params = model.parameters();
        for (std::size_t k = 0; k < params.size(); ++k) {
          const Tensor& g = grads.at(nodes.parameters[k]);
          Tensor& w = params[k].value;
          Tensor& v = velocity[k];
          for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = opt.momentum * v[i] - opt.learning_rate * (g[i] + opt.weight_decay * w[i]);
            w[i] += v[i];
          }
          if (!w.all_finite()) throw NumericError("parameter " + params[k].name + " became non-finite");
        }
        log.seconds.update += since(t0);
      } catch (const NumericError& e) {
        std::cerr << "training diverged at iteration " << entry.iteration << ": " << e.what() << '\n';
        model.parameters() = std::move(snapshot.parameters);
        velocity = std::move(snapshot.velocity);
        result.diverged = true;
        break;
      }
      log.iterations.push_back(std::move(entry));
    }

    EpochLog epoch_log{epoch, std::nullopt};
    if (validation != nullptr && !result.diverged) {
      const auto t0 = Clock::now();
      epoch_log.validation_accuracy = evaluate(model, *validation).mean_balanced_accuracy;
      log.seconds.validation += since(t0);
    }
    log.epochs.push_back(epoch_log);
  }

  if (config.baseline == Baseline::ThresholdAdjustment) {
    const auto ratios = class_ratios(training);
    if (config.temperature > 0) {
      result.threshold = ThresholdSetting{config.temperature, ratios};
    } else {
      result.threshold = select_temperature(model, validation != nullptr ? *validation : training, ratios);
    }
  }
  return result;
}

std::vector<int> predict(const Model& model, const Dataset& dataset, const ThresholdSetting* threshold) {
  const auto& spec = model.spec();
  if (dataset.dim != spec.input_dim || dataset.class_counts != spec.class_counts) {
    throw ShapeError("dataset layout does not match the model");
  }
  const std::size_t attrs = dataset.num_attributes();
  std::vector<int> predictions(dataset.size() * attrs);
  constexpr std::size_t chunk = 512;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < dataset.size(); start += chunk) {
    const std::size_t stop = std::min(dataset.size(), start + chunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto outputs = forward(model, dataset.feature_matrix(rows));
    for (std::size_t j = 0; j < attrs; ++j) {
      const Tensor& scores = outputs[j].scores;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = scores.row(r);
        int best = 0;
        if (threshold != nullptr) {
          best = threshold_adjust(row, threshold->ratios.per_attribute[j], threshold->temperature).prediction;
        } else {
          for (std::size_t k = 1; k < row.size(); ++k) {
            if (row[k] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
          }
        }
        predictions[(start + r) * attrs + j] = best;
      }
    }
  }
  return predictions;
}

MetricsReport evaluate(const Model& model, const Dataset& dataset, const ThresholdSetting* threshold) {
  if (dataset.empty()) throw ContractError("cannot evaluate on an empty dataset");
  return build_report(predict(model, dataset, threshold), dataset.labels, dataset.class_counts);
}

ThresholdSetting select_temperature(const Model& model, const Dataset& validation, const ClassRatios& ratios) {
  ThresholdSetting best{1, ratios};
  double best_accuracy = -1.0;
  for (int t = 1; t <= 5; ++t) {
    ThresholdSetting candidate{t, ratios};
    const double accuracy = evaluate(model, validation, &candidate).mean_balanced_accuracy;
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best = candidate;
    }
  }
  return best;
}

void write_trainlog_csv(const TrainLog& log, std::ostream& out) {
  const std::size_t attrs = log.weights.alpha.size();
  out << "epoch,iteration,batch_size";
  for (std::size_t j = 0; j < attrs; ++j) out << ",ce_" << j;
  for (std::size_t j = 0; j < attrs; ++j) out << ",crl_" << j;
  for (std::size_t j = 0; j < attrs; ++j) out << ",alpha_" << j;
  out << ",total,val_balanced_accuracy\n";
  char buffer[40];
  auto real = [&](double v) {
    *std::to_chars(buffer, buffer + sizeof buffer - 1, v).ptr = '\0';
    return std::string(buffer);
  };
  for (std::size_t i = 0; i < log.iterations.size(); ++i) {
    const auto& it = log.iterations[i];
    out << it.epoch << ',' << it.iteration << ',' << it.batch_size;
    for (double v : it.ce) out << ',' << real(v);
    for (double v : it.crl) out << ',' << real(v);
    for (double v : it.alpha) out << ',' << real(v);
    out << ',' << real(it.total) << ',';
    const bool epoch_end = i + 1 == log.iterations.size() || log.iterations[i + 1].epoch != it.epoch;
    if (epoch_end && it.epoch < log.epochs.size() && log.epochs[it.epoch].validation_accuracy) {
      out << real(*log.epochs[it.epoch].validation_accuracy);
    }
    out << '\n';
  }
}

namespace {

nlohmann::json metrics_json(const MetricsReport& report) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& label : report.labels) {
    nlohmann::json s = nlohmann::json::array();
    for (double v : label.sensitivity) s.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    labels.push_back({{"label", label.name},
                      {"classes", label.num_classes},
                      {"sensitivity", s},
                      {"excluded_classes", label.excluded},
                      {"balanced_accuracy", label.balanced_accuracy}});
  }
  return {{"labels", labels}, {"mean_balanced_accuracy", report.mean_balanced_accuracy}};
}

} // namespace

bool run_training(const RunConfig& config) {
  if (config.train_path.empty()) throw ConfigError("a training dataset is required");
  if (config.out_dir.empty()) throw ConfigError("an output directory is required");
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);

  const Dataset training = read_dataset(std::filesystem::path(config.train_path));
  std::optional<Dataset> validation;
  if (!config.val_path.empty()) validation = read_dataset(std::filesystem::path(config.val_path));

  const auto start = Clock::now();
  const auto result = train(config, training, validation ? &*validation : nullptr);
  const double train_seconds = since(start);

  save_model(result.model, out / (result.diverged ? "model.last_good.ckpt" : "model.ckpt"));
  write_config(config, out / "config.txt");
  {
    std::ofstream log_file(out / "trainlog.csv");
    write_trainlog_csv(result.log, log_file);
  }

  nlohmann::json report;
  report["config"] = to_key_values(config);
  report["diverged"] = result.diverged;
  report["omega"] = result.log.weights.omega;
  report["alpha"] = result.log.weights.alpha;
  report["iterations"] = result.log.iterations.size();
  if (result.threshold) report["temperature"] = result.threshold->temperature;
  report["seconds"] = {{"total", train_seconds},
                       {"forward", result.log.seconds.forward},
                       {"loss_and_mining", result.log.seconds.mining},
                       {"backward", result.log.seconds.backward},
                       {"update", result.log.seconds.update},
                       {"validation", result.log.seconds.validation}};
  if (!config.test_path.empty()) {
    const Dataset test = read_dataset(std::filesystem::path(config.test_path));
    const auto metrics = evaluate(result.model, test, result.threshold ? &*result.threshold : nullptr);
    std::ofstream csv(out / "metrics.csv");
    write_metrics_csv(metrics, csv);
    report["metrics"] = metrics_json(metrics);
    write_metrics_table(metrics, std::cout);
  }
  std::ofstream json_file(out / "report.json");
  json_file << report.dump(2) << '\n';
  return !result.diverged;
}

} // namespace crl

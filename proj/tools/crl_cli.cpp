#include "crl/config.hpp"
#include "crl/datagen.hpp"
#include "crl/error.hpp"
#include "crl/harness.hpp"
#include "crl/study.hpp"

#include <algorithm>
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace crl;

// One option per config key. Values given on the command line override the
// --config file, which overrides the built-in defaults.
struct RunFlags {
  std::string config_path;
  KeyValues given;
  std::map<std::string, std::string> storage;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
    for (const auto& [key, value] : to_key_values(RunConfig{})) {
      storage[key];
      const std::string help = value.empty() ? std::string{} : "default: " + value;
      app.add_option("--" + key, storage[key], help);
    }
  }

  RunConfig resolve(const CLI::App& app) {
    RunConfig config = config_path.empty() ? RunConfig{} : read_config(config_path);
    for (const auto& [key, value] : storage) {
      if (app.count("--" + key) > 0) given[key] = value;
    }
    config = from_key_values(given, config);
    config.validate();
    return config;
  }
};

std::vector<std::size_t> split_sizes(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const auto value = std::stoull(item, &pos);
    if (pos != item.size()) throw ConfigError("invalid count '" + item + "'");
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError("empty count list '" + text + "'");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Class rectification loss training and evaluation harness"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write model.ckpt, trainlog.csv, report.json");
  RunFlags train_flags;
  train_flags.attach(*train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string eval_model, eval_data, eval_out, eval_ratios_from;
  int eval_temperature = 0;
  eval_cmd->add_option("--model", eval_model, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", eval_data, "dataset file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "directory for metrics.csv");
  eval_cmd->add_option("--temperature", eval_temperature, "threshold adjustment with T in 1..5 (0 = off)")
      ->check(CLI::Range(0, 5));
  eval_cmd->add_option("--train", eval_ratios_from, "training set providing the class ratios for thresholding")
      ->check(CLI::ExistingFile);

  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a Gaussian-blob dataset");
  std::string gen_out;
  std::size_t gen_dim = 2;
  std::vector<std::string> gen_counts;
  double gen_sigma = 1.0, gen_scale = 3.0;
  std::uint64_t gen_seed = 1, gen_center_seed = 1;
  gen_cmd->add_option("--out", gen_out, "output dataset file")->required();
  gen_cmd->add_option("--dim", gen_dim, "feature dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--counts", gen_counts, "per-class counts of one attribute, e.g. 500,500,10 (repeatable)")
      ->required();
  gen_cmd->add_option("--sigma", gen_sigma, "isotropic spread of each blob")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--center-scale", gen_scale, "spread of the random class centres")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "random seed of the samples");
  gen_cmd->add_option("--center-seed", gen_center_seed,
                      "random seed of the class centres; keep it fixed to draw train and test splits of one problem");

  auto* sim_cmd = app.add_subcommand("simulate-imbalance", "Power-law subsample plus its balanced companion");
  std::string sim_data, sim_out, sim_balanced_out;
  std::size_t sim_attribute = 0, sim_n_max = 0, sim_n_min = 0;
  double sim_gamma = 1.0;
  std::uint64_t sim_seed = 1;
  sim_cmd->add_option("--data", sim_data, "source dataset")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim_out, "imbalanced output dataset")->required();
  sim_cmd->add_option("--balanced-out", sim_balanced_out, "balanced companion of equal total size");
  sim_cmd->add_option("--attribute", sim_attribute, "attribute whose classes are resized");
  sim_cmd->add_option("--gamma", sim_gamma, "power-law exponent")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n-max", sim_n_max, "largest class size")->required();
  sim_cmd->add_option("--n-min", sim_n_min, "smallest class size")->required();
  sim_cmd->add_option("--seed", sim_seed, "random seed");

  auto* study_cmd = app.add_subcommand("study", "Run a controlled study over a parameter grid");
  RunFlags study_flags;
  study_flags.attach(*study_cmd);
  std::string study_kind = "loss-matrix";
  StudyOptions study_options;
  study_cmd->add_option("--kind", study_kind, "gamma-sweep, kappa-sweep, rho-sweep, loss-matrix or class-scope")
      ->check(CLI::IsMember({"gamma-sweep", "kappa-sweep", "rho-sweep", "loss-matrix", "class-scope"}));
  study_cmd->add_option("--seeds", study_options.seeds, "seeds averaged per grid point")->delimiter(',');
  study_cmd->add_option("--threads", study_options.threads, "parallel training runs")->check(CLI::PositiveNumber);
  study_cmd->add_option("--gammas", study_options.gammas, "gamma grid")->delimiter(',');
  study_cmd->add_option("--kappas", study_options.kappas, "kappa grid")->delimiter(',');
  study_cmd->add_option("--rhos", study_options.rhos, "rho grid")->delimiter(',');
  study_cmd->add_option("--n-max", study_options.n_max, "gamma sweep: largest class size");
  study_cmd->add_option("--n-min", study_options.n_min, "gamma sweep: smallest class size");

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) {
    const auto config = train_flags.resolve(*train_cmd);
    if (!run_training(config)) {
      std::cerr << "training diverged; last good parameters written to model.last_good.ckpt\n";
      return 3;
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Model model = load_model(std::filesystem::path(eval_model));
    const Dataset test = read_dataset(std::filesystem::path(eval_data));
    std::unique_ptr<ThresholdSetting> threshold;
    if (eval_temperature > 0) {
      if (eval_ratios_from.empty()) throw ConfigError("--temperature needs --train for the class ratios");
      threshold = std::make_unique<ThresholdSetting>(
          ThresholdSetting{eval_temperature, class_ratios(read_dataset(std::filesystem::path(eval_ratios_from)))});
    }
    const auto report = evaluate(model, test, threshold.get());
    write_metrics_table(report, std::cout);
    if (!eval_out.empty()) {
      std::filesystem::create_directories(eval_out);
      std::ofstream csv(std::filesystem::path(eval_out) / "metrics.csv");
      write_metrics_csv(report, csv);
    }
    return 0;
  }

  if (gen_cmd->parsed()) {
    BlobSpec spec;
    spec.input_dim = gen_dim;
    spec.seed = gen_seed;
    for (std::size_t j = 0; j < gen_counts.size(); ++j) {
      AttributeBlobs blobs;
      blobs.counts = split_sizes(gen_counts[j]);
      blobs.sigma = gen_sigma;
      blobs.centers = random_centers(blobs.counts.size(), gen_dim, gen_scale, gen_center_seed + 1000 * (j + 1));
      spec.attributes.push_back(std::move(blobs));
    }
    const Dataset data = synth_blobs(spec);
    write_dataset(data, std::filesystem::path(gen_out));
    std::cout << "wrote " << data.size() << " samples to " << gen_out << '\n';
    return 0;
  }

  if (sim_cmd->parsed()) {
    const Dataset source = read_dataset(std::filesystem::path(sim_data));
    if (sim_attribute >= source.num_attributes()) throw ConfigError("attribute out of range");
    const auto sizes =
        power_law_sizes({source.class_counts[sim_attribute], sim_gamma, sim_n_max, sim_n_min});
    const Dataset imbalanced = subsample_to_sizes(source, sim_attribute, sizes.sizes, sim_seed);
    write_dataset(imbalanced, std::filesystem::path(sim_out));
    std::cout << "a=" << sizes.a << " b=" << sizes.b << " sizes=";
    for (std::size_t k = 0; k < sizes.sizes.size(); ++k) std::cout << (k ? ";" : "") << sizes.sizes[k];
    std::cout << '\n';
    if (!sim_balanced_out.empty()) {
      const Dataset balanced = balanced_companion(source, sim_attribute, imbalanced.size(), sim_seed);
      write_dataset(balanced, std::filesystem::path(sim_balanced_out));
    }
    return 0;
  }

  if (study_cmd->parsed()) {
    study_options.kind = parse_study(study_kind);
    study_options.base = study_flags.resolve(*study_cmd);
    const auto& base = study_options.base;
    if (base.train_path.empty() || base.test_path.empty()) throw ConfigError("a study needs --train and --test");
    if (base.out_dir.empty()) throw ConfigError("a study needs --out");
    const Dataset training = read_dataset(std::filesystem::path(base.train_path));
    const Dataset test = read_dataset(std::filesystem::path(base.test_path));
    std::unique_ptr<Dataset> validation;
    if (!base.val_path.empty()) validation = std::make_unique<Dataset>(read_dataset(std::filesystem::path(base.val_path)));

    const auto report = run_study(study_options, training, test, validation.get());
    const std::filesystem::path out(base.out_dir);
    std::filesystem::create_directories(out);
    std::ofstream csv(out / "study.csv");
    write_study_csv(report, csv);
    std::ofstream timing(out / "study_timing.csv");
    write_study_timing_csv(report, timing);
    std::ofstream table(out / "summary.txt");
    write_study_table(report, table);
    write_study_table(report, std::cout);
    return 0;
  }
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 2;
}

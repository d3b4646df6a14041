#pragma once

#include "crl/losses.hpp"
#include "crl/mining.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace crl {

enum class Baseline { None, OverSampling, DownSampling, CostSensitive, ThresholdAdjustment };

struct OptimizerConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch_size = 256;
  std::size_t epochs = 30;
};

struct RunConfig {
  std::string train_path;
  std::string val_path;
  std::string test_path;
  std::string out_dir;

  std::vector<std::size_t> trunk_widths{32};
  std::size_t feature_dim = 64;

  bool use_crl = true;
  LossConfig loss;
  double rho = 0.5;
  std::size_t kappa = 25;
  ClassScope scope = ClassScope::Minority;

  Baseline baseline = Baseline::None;
  std::size_t target_label = 0;
  // 0 selects T in {1..5} on the validation split.
  int temperature = 0;

  OptimizerConfig optimizer;
  std::uint64_t seed = 1;

  void validate() const;
};

std::string to_string(CrlFamily family);
std::string to_string(MiningLevel level);
std::string to_string(ClassScope scope);
std::string to_string(Baseline baseline);
CrlFamily parse_family(const std::string& text);
MiningLevel parse_level(const std::string& text);
ClassScope parse_scope(const std::string& text);
Baseline parse_baseline(const std::string& text);

using KeyValues = std::map<std::string, std::string>;

/// Keys are the CLI long-option names (lr, eta, kappa, crl-family, ...).
/// "crl-family=none" disables the rectification term.
KeyValues to_key_values(const RunConfig& config);
RunConfig from_key_values(const KeyValues& values, RunConfig base = {});

/// key=value per line; blank lines and lines starting with '#' or '[' are ignored.
KeyValues read_key_values(std::istream& in);
void write_key_values(const KeyValues& values, std::ostream& out);

RunConfig read_config(const std::filesystem::path& path);
void write_config(const RunConfig& config, const std::filesystem::path& path);

} // namespace crl

#include "crl/config.hpp"

#include "crl/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crl {

void RunConfig::validate() const {
  if (optimizer.batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (optimizer.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(optimizer.weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (kappa < 1) throw ConfigError("kappa must be at least 1");
  if (temperature < 0 || temperature > 5) throw ConfigError("temperature must be 0 (auto) or in 1..5");
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  loss.validate();
}

std::string to_string(CrlFamily family) {
  switch (family) {
  case CrlFamily::Relative: return "relative";
  case CrlFamily::Absolute: return "absolute";
  case CrlFamily::Distribution: return "distribution";
  }
  return "?";
}

std::string to_string(MiningLevel level) { return level == MiningLevel::Class ? "class" : "instance"; }

std::string to_string(ClassScope scope) { return scope == ClassScope::Minority ? "minority" : "all"; }

std::string to_string(Baseline baseline) {
  switch (baseline) {
  case Baseline::None: return "none";
  case Baseline::OverSampling: return "over-sampling";
  case Baseline::DownSampling: return "down-sampling";
  case Baseline::CostSensitive: return "cost-sensitive";
  case Baseline::ThresholdAdjustment: return "threshold-adjustment";
  }
  return "?";
}

CrlFamily parse_family(const std::string& text) {
  if (text == "relative") return CrlFamily::Relative;
  if (text == "absolute") return CrlFamily::Absolute;
  if (text == "distribution") return CrlFamily::Distribution;
  throw ConfigError("unknown CRL family '" + text + "'");
}

MiningLevel parse_level(const std::string& text) {
  if (text == "class") return MiningLevel::Class;
  if (text == "instance") return MiningLevel::Instance;
  throw ConfigError("unknown CRL level '" + text + "'");
}

ClassScope parse_scope(const std::string& text) {
  if (text == "minority") return ClassScope::Minority;
  if (text == "all") return ClassScope::All;
  throw ConfigError("unknown class scope '" + text + "'");
}

Baseline parse_baseline(const std::string& text) {
  for (auto b : {Baseline::None, Baseline::OverSampling, Baseline::DownSampling, Baseline::CostSensitive,
                 Baseline::ThresholdAdjustment}) {
    if (text == to_string(b)) return b;
  }
  throw ConfigError("unknown baseline '" + text + "'");
}

namespace {

std::string format_real(double v) {
  char buffer[40];
  *std::to_chars(buffer, buffer + sizeof buffer - 1, v).ptr = '\0';
  return buffer;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

double to_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid number for '" + key + "': " + text);
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
    auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid non-negative integer for '" + key + "': " + text);
  }
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(to_unsigned(key, part));
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  auto out = s.substr(first, last - first + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

} // namespace

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv;
  kv["train"] = c.train_path;
  kv["val"] = c.val_path;
  kv["test"] = c.test_path;
  kv["out"] = c.out_dir;
  kv["trunk"] = join_sizes(c.trunk_widths);
  kv["feature-dim"] = std::to_string(c.feature_dim);
  kv["crl-family"] = c.use_crl ? to_string(c.loss.family) : "none";
  kv["crl-level"] = to_string(c.loss.level);
  kv["eta"] = format_real(c.loss.eta);
  kv["bins"] = std::to_string(c.loss.bins);
  kv["margin-relative"] = format_real(c.loss.relative_class_margin);
  kv["margin-absolute-class"] = format_real(c.loss.absolute_class_margin);
  kv["margin-absolute-instance"] = format_real(c.loss.absolute_instance_margin);
  kv["rho"] = format_real(c.rho);
  kv["kappa"] = std::to_string(c.kappa);
  kv["class-scope"] = to_string(c.scope);
  kv["baseline"] = to_string(c.baseline);
  kv["target-label"] = std::to_string(c.target_label);
  kv["temperature"] = std::to_string(c.temperature);
  kv["lr"] = format_real(c.optimizer.learning_rate);
  kv["momentum"] = format_real(c.optimizer.momentum);
  kv["weight-decay"] = format_real(c.optimizer.weight_decay);
  kv["batch-size"] = std::to_string(c.optimizer.batch_size);
  kv["epochs"] = std::to_string(c.optimizer.epochs);
  kv["seed"] = std::to_string(c.seed);
  return kv;
}

RunConfig from_key_values(const KeyValues& values, RunConfig c) {
  for (const auto& [key, value] : values) {
    if (key == "train") c.train_path = value;
    else if (key == "val") c.val_path = value;
    else if (key == "test") c.test_path = value;
    else if (key == "out") c.out_dir = value;
    else if (key == "trunk") c.trunk_widths = to_sizes(key, value);
    else if (key == "feature-dim") c.feature_dim = to_unsigned(key, value);
    else if (key == "crl-family") {
      c.use_crl = value != "none";
      if (c.use_crl) c.loss.family = parse_family(value);
    } else if (key == "crl-level") c.loss.level = parse_level(value);
    else if (key == "eta") c.loss.eta = to_real(key, value);
    else if (key == "bins") c.loss.bins = to_unsigned(key, value);
    else if (key == "margin-relative") c.loss.relative_class_margin = to_real(key, value);
    else if (key == "margin-absolute-class") c.loss.absolute_class_margin = to_real(key, value);
    else if (key == "margin-absolute-instance") c.loss.absolute_instance_margin = to_real(key, value);
    else if (key == "rho") c.rho = to_real(key, value);
    else if (key == "kappa") c.kappa = to_unsigned(key, value);
    else if (key == "class-scope") c.scope = parse_scope(value);
    else if (key == "baseline") c.baseline = parse_baseline(value);
    else if (key == "target-label") c.target_label = to_unsigned(key, value);
    else if (key == "temperature") c.temperature = static_cast<int>(to_unsigned(key, value));
    else if (key == "lr") c.optimizer.learning_rate = to_real(key, value);
    else if (key == "momentum") c.optimizer.momentum = to_real(key, value);
    else if (key == "weight-decay") c.optimizer.weight_decay = to_real(key, value);
    else if (key == "batch-size") c.optimizer.batch_size = to_unsigned(key, value);
    else if (key == "epochs") c.optimizer.epochs = to_unsigned(key, value);
    else if (key == "seed") c.seed = to_unsigned(key, value);
    else throw ConfigError("unknown configuration key '" + key + "'");
  }
  return c;
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';' || text[0] == '[') continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    kv[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const KeyValues& values, std::ostream& out) {
  for (const auto& [key, value] : values) out << key << '=' << (value.empty() ? "\"\"" : value) << '\n';
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return from_key_values(read_key_values(in));
}

void write_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_key_values(to_key_values(config), out);
}

} // namespace crl

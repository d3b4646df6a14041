#include "crl/model.hpp"

#include "crl/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace crl {

void ModelSpec::validate() const {
  if (input_dim == 0) throw ContractError("model input dimension must be positive");
  if (feature_dim == 0) throw ContractError("branch feature dimension must be positive");
  for (auto w : trunk_widths) {
    if (w == 0) throw ContractError("trunk layer widths must be positive");
  }
  if (class_counts.empty()) throw ContractError("model needs at least one attribute");
  for (auto c : class_counts) {
    if (c < 2) throw ContractError("every attribute needs at least two classes");
  }
}

Model::Model(ModelSpec spec, std::vector<Parameter> parameters, std::uint64_t seed)
    : spec_(std::move(spec)), parameters_(std::move(parameters)), seed_(seed) {
  spec_.validate();
}

const Tensor& Model::parameter(std::string_view name) const {
  for (const auto& p : parameters_) {
    if (p.name == name) return p.value;
  }
  throw ContractError("model has no parameter '" + std::string(name) + "'");
}

Tensor& Model::parameter(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const Model&>(*this).parameter(name));
}

namespace {

struct Layer {
  std::string prefix;
  std::size_t in;
  std::size_t out;
  bool bias;
};

std::vector<Layer> layout(const ModelSpec& spec) {
  std::vector<Layer> layers;
  std::size_t width = spec.input_dim;
  for (std::size_t i = 0; i < spec.trunk_widths.size(); ++i) {
    layers.push_back({"trunk." + std::to_string(i), width, spec.trunk_widths[i], true});
    width = spec.trunk_widths[i];
  }
  for (std::size_t j = 0; j < spec.class_counts.size(); ++j) {
    const auto branch = "branch." + std::to_string(j);
    layers.push_back({branch + ".hidden0", width, spec.feature_dim, true});
    layers.push_back({branch + ".hidden1", spec.feature_dim, spec.feature_dim, true});
    layers.push_back({branch + ".classifier", spec.feature_dim, spec.class_counts[j], false});
  }
  return layers;
}

} // namespace

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<Parameter> params;
  for (const auto& layer : layout(spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    std::vector<double> w(layer.in * layer.out);
    for (auto& v : w) v = uniform(rng);
    params.push_back({layer.prefix + ".weight", Tensor::matrix(layer.in, layer.out, std::move(w))});
    if (layer.bias) params.push_back({layer.prefix + ".bias", Tensor::zeros({1, layer.out})});
  }
  return Model(spec, std::move(params), seed);
}

ForwardNodes build_forward(Graph& graph, const Model& model, const Tensor& batch) {
  const auto& spec = model.spec();
  if (batch.rank() != 2 || batch.cols() != spec.input_dim) {
    throw ShapeError("batch of shape " + shape_to_string(batch.shape()) + " does not match model input dimension " +
                     std::to_string(spec.input_dim));
  }
  ForwardNodes nodes;
  for (const auto& p : model.parameters()) nodes.parameters.push_back(graph.leaf(p.value, p.name));

  const std::size_t n = batch.rows();
  const NodeId input = graph.constant(batch);
  const NodeId ones = graph.constant(Tensor::filled({n, 1}, 1.0));
  std::size_t next = 0;
  auto dense = [&](NodeId x, bool bias) {
    NodeId y = graph.matmul(x, nodes.parameters[next++]);
    if (bias) y = graph.add(y, graph.matmul(ones, nodes.parameters[next++]));
    return y;
  };

  NodeId h = input;
  for (std::size_t i = 0; i < spec.trunk_widths.size(); ++i) h = graph.relu(dense(h, true));
  for (std::size_t j = 0; j < spec.class_counts.size(); ++j) {
    NodeId b = graph.relu(dense(h, true));
    NodeId features = graph.relu(dense(b, true));
    NodeId logits = dense(features, false);
    nodes.branches.push_back({features, logits, graph.softmax(logits)});
  }
  return nodes;
}

std::vector<AttributeOutput> forward(const Model& model, const Tensor& batch) {
  Graph graph;
  auto nodes = build_forward(graph, model, batch);
  graph.eval(nodes.branches.back().scores);
  std::vector<AttributeOutput> out;
  for (const auto& branch : nodes.branches) out.push_back({graph.value(branch.features), graph.value(branch.scores)});
  return out;
}

double feature_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("feature vectors differ in dimension: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (!part.empty()) out.push_back(std::stoul(part));
  }
  return out;
}

std::string field(std::istringstream& line, const std::string& key, std::size_t line_no) {
  std::string token;
  line >> token;
  if (token.rfind(key + "=", 0) != 0) throw ParseError("expected '" + key + "=' in checkpoint", line_no);
  return token.substr(key.size() + 1);
}

} // namespace

void save_model(const Model& model, std::ostream& out) {
  const auto& spec = model.spec();
  out << kModelHeader << '\n';
  out << "seed " << model.seed() << '\n';
  out << "spec input=" << spec.input_dim << " trunk=" << join(spec.trunk_widths) << " feature=" << spec.feature_dim
      << " classes=" << join(spec.class_counts) << '\n';
  out << "params " << model.parameters().size() << '\n';
  char buffer[40];
  for (const auto& p : model.parameters()) {
    out << p.name << ' ' << join(p.value.shape()) << '\n';
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      *std::to_chars(buffer, buffer + sizeof buffer - 1, p.value[i]).ptr = '\0';
      out << (i ? " " : "") << buffer;
    }
    out << '\n';
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

Model load_model(std::istream& in) {
  std::string text;
  std::size_t line_no = 1;
  if (!std::getline(in, text) || text != kModelHeader) throw ParseError("missing CRL-MODEL-v1 header", line_no);

  auto next_line = [&]() {
    ++line_no;
    if (!std::getline(in, text)) throw ParseError("truncated checkpoint", line_no);
    return std::istringstream(text);
  };

  std::uint64_t seed = 0;
  {
    auto line = next_line();
    std::string key;
    if (!(line >> key >> seed) || key != "seed") throw ParseError("expected seed line", line_no);
  }
  ModelSpec spec;
  {
    auto line = next_line();
    std::string key;
    line >> key;
    if (key != "spec") throw ParseError("expected spec line", line_no);
    try {
      spec.input_dim = std::stoul(field(line, "input", line_no));
      spec.trunk_widths = split_sizes(field(line, "trunk", line_no));
      spec.feature_dim = std::stoul(field(line, "feature", line_no));
      spec.class_counts = split_sizes(field(line, "classes", line_no));
    } catch (const std::logic_error&) {
      throw ParseError("malformed spec line", line_no);
    }
  }
  std::size_t count = 0;
  {
    auto line = next_line();
    std::string key;
    if (!(line >> key >> count) || key != "params") throw ParseError("expected params line", line_no);
  }
  std::vector<Parameter> params;
  for (std::size_t k = 0; k < count; ++k) {
    auto head = next_line();
    std::string name, dims;
    if (!(head >> name >> dims)) throw ParseError("expected parameter name and shape", line_no);
    Shape shape = split_sizes(dims);
    auto body = next_line();
    std::vector<double> values;
    std::string token;
    while (body >> token) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::logic_error&) {
        throw ParseError("invalid value '" + token + "'", line_no);
      }
    }
    if (shape.empty() || shape_size(shape) != values.size()) {
      throw ParseError("parameter " + name + " has the wrong number of values", line_no);
    }
    params.push_back({name, Tensor(shape, std::move(values))});
  }

  Model reference = build_model(spec, seed);
  if (reference.parameters().size() != params.size()) throw ParseError("parameter count does not match spec", line_no);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& expected = reference.parameters()[k];
    if (expected.name != params[k].name || expected.value.shape() != params[k].value.shape()) {
      throw ParseError("parameter " + params[k].name + " does not match the model layout", line_no);
    }
  }
  return Model(spec, std::move(params), seed);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_model(in);
}

} // namespace crl

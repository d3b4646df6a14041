#pragma once

#include "crl/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crl {

struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> trunk_widths;
  std::size_t feature_dim = 64;
  std::vector<std::size_t> class_counts; // |Z_j| per attribute

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Shared fully-connected ReLU trunk followed by one branch per attribute:
/// two ReLU layers of width feature_dim (the attribute feature vector) and
/// a bias-free linear classifier with softmax scores.
class Model {
public:
  Model(ModelSpec spec, std::vector<Parameter> parameters, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Parameter>& parameters() const { return parameters_; }
  std::vector<Parameter>& parameters() { return parameters_; }
  const Tensor& parameter(std::string_view name) const;
  Tensor& parameter(std::string_view name);

  friend bool operator==(const Model&, const Model&) = default;

private:
  ModelSpec spec_;
  std::vector<Parameter> parameters_;
  std::uint64_t seed_ = 0;
};

// Glorot-uniform weights, zero biases.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct BranchNodes {
  NodeId features;
  NodeId logits;
  NodeId scores;
};

struct ForwardNodes {
  std::vector<NodeId> parameters; // same order as Model::parameters()
  std::vector<BranchNodes> branches;
};

// Parameters become leaves so that backward() yields their gradients.
ForwardNodes build_forward(Graph& graph, const Model& model, const Tensor& batch);

struct AttributeOutput {
  Tensor features;
  Tensor scores;
};

std::vector<AttributeOutput> forward(const Model& model, const Tensor& batch);

double feature_distance(std::span<const double> a, std::span<const double> b);

inline constexpr std::string_view kModelHeader = "CRL-MODEL-v1";

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

} // namespace crl

#pragma once

#include "crl/autodiff.hpp"
#include "crl/mining.hpp"

#include <optional>
#include <span>
#include <vector>

namespace crl {

enum class CrlFamily { Relative, Absolute, Distribution };

struct LossConfig {
  CrlFamily family = CrlFamily::Relative;
  MiningLevel level = MiningLevel::Class;
  double relative_class_margin = 0.5;
  double absolute_class_margin = 0.5;
  double absolute_instance_margin = 1.0;
  std::size_t bins = 20;
  double eta = 0.01;

  void validate() const;
  // m_j for the relative family: fixed at class level, 2*pi/|Z_j| at instance level.
  double relative_margin(std::size_t num_classes) const;
  double absolute_margin() const;
};

inline constexpr double kLogFloor = 1e-12;

// 2*pi / |Z_j|: arc length between neighbouring class centres on the unit circle.
double class_margin(std::size_t num_classes);

/// Mean over samples of -log max(p(y = label), 1e-12) for one attribute.
/// Optional class weights scale each sample's term by its true class weight.
NodeId cross_entropy(Graph& graph, NodeId scores, std::span<const int> labels,
                     std::span<const double> class_weights = {});

/// Distances for pairs: class level uses |p_a - p_x| for positives and the
/// signed p_a - p_x for negatives (scores on the pair's class); instance
/// level uses Euclidean feature distance. `source` is the score matrix or
/// the feature matrix accordingly.
NodeId pair_distances(Graph& graph, NodeId source, MiningLevel level, std::span<const SamplePair> pairs,
                      bool positive);

// Mean of max(0, margin + d_pos - d_neg), elementwise over aligned vectors.
NodeId triplet_hinge(Graph& graph, NodeId d_pos, NodeId d_neg, double margin);

// 1/2 (mean d_pos^2 + mean max(margin - d_neg, 0)^2); absent sides contribute 0.
NodeId contrastive(Graph& graph, std::optional<NodeId> d_pos, std::optional<NodeId> d_neg, double margin);

struct BinRange {
  double lo = -1.0;
  double hi = 1.0;
};

/// Soft (triangular) histograms of positive and negative distances over
/// `bins` uniformly spaced nodes spanning `range`, and the overlap
/// sum_t h+_t * sum_{k<=t} h-_k. Distances are clamped into the range first.
NodeId histogram_overlap(Graph& graph, NodeId d_pos, NodeId d_neg, std::size_t bins, BinRange range);

NodeId crl_relative(Graph& graph, NodeId source, MiningLevel level, std::span<const Triplet> triplets,
                    double margin);
NodeId crl_absolute(Graph& graph, NodeId source, MiningLevel level, const PairSets& pairs, double margin);
NodeId crl_distribution(Graph& graph, NodeId source, MiningLevel level, const PairSets& pairs, std::size_t bins,
                        BinRange range);

// Class level: [-1, 1]. Instance level: [0, largest mined pair distance].
BinRange distribution_range(MiningLevel level, const Tensor& features, const PairSets& pairs);

/// sum_j alpha_j * crl_j + (1 - alpha_j) * ce_j. Attributes without a CRL term
/// (std::nullopt) contribute (1 - alpha_j) * ce_j only.
NodeId combined_loss(Graph& graph, std::span<const NodeId> ce, std::span<const std::optional<NodeId>> crl,
                     std::span<const double> alpha);

double combined_loss(double ce, double crl, double alpha);

void check_alpha(double alpha);

} // namespace crl

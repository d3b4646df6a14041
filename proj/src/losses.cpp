#include "crl/losses.hpp"

#include "crl/error.hpp"
#include "crl/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace crl {

void LossConfig::validate() const {
  if (bins < 2) throw ConfigError("histogram needs at least two bins");
  if (!(relative_class_margin >= 0.0) || !(absolute_class_margin > 0.0) || !(absolute_instance_margin > 0.0)) {
    throw ConfigError("loss margins must be positive");
  }
  if (!(eta >= 0.0)) throw ConfigError("eta must be non-negative");
}

double LossConfig::relative_margin(std::size_t num_classes) const {
  return level == MiningLevel::Class ? relative_class_margin : class_margin(num_classes);
}

double LossConfig::absolute_margin() const {
  return level == MiningLevel::Class ? absolute_class_margin : absolute_instance_margin;
}

double class_margin(std::size_t num_classes) {
  if (num_classes < 2) throw ContractError("class margin needs at least two classes");
  return 2.0 * std::numbers::pi / static_cast<double>(num_classes);
}

NodeId cross_entropy(Graph& graph, NodeId scores, std::span<const int> labels, std::span<const double> class_weights) {
  const auto& shape = graph.shape(scores);
  if (shape.size() != 2 || shape[0] != labels.size()) {
    throw ShapeError("cross entropy: scores " + shape_to_string(shape) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = shape[1];
  if (!class_weights.empty() && class_weights.size() != classes) {
    throw ContractError("cross entropy: one weight per class is required");
  }
  std::vector<std::size_t> picks(labels.size());
  std::vector<double> weights(labels.size(), 1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw ContractError("cross entropy: label " + std::to_string(labels[i]) + " out of range");
    }
    picks[i] = i * classes + static_cast<std::size_t>(labels[i]);
    if (!class_weights.empty()) weights[i] = class_weights[static_cast<std::size_t>(labels[i])];
  }
  NodeId log_p = graph.log(graph.max_const(graph.gather(scores, std::move(picks)), kLogFloor));
  if (!class_weights.empty()) log_p = graph.mul(log_p, graph.constant(Tensor::vector(std::move(weights))));
  return graph.scale(graph.sum(log_p), -1.0 / static_cast<double>(labels.size()));
}

NodeId pair_distances(Graph& graph, NodeId source, MiningLevel level, std::span<const SamplePair> pairs,
                      bool positive) {
  if (pairs.empty()) throw ContractError("pair_distances needs at least one pair");
  if (level == MiningLevel::Class) {
    const std::size_t classes = graph.shape(source).back();
    std::vector<std::size_t> anchors, others;
    for (const auto& p : pairs) {
      anchors.push_back(p.anchor * classes + p.cls);
      others.push_back(p.other * classes + p.cls);
    }
    NodeId diff = graph.sub(graph.gather(source, std::move(anchors)), graph.gather(source, std::move(others)));
    return positive ? graph.abs(diff) : diff;
  }
  std::vector<std::size_t> anchors, others;
  for (const auto& p : pairs) {
    anchors.push_back(p.anchor);
    others.push_back(p.other);
  }
  NodeId diff = graph.sub(graph.gather_rows(source, std::move(anchors)), graph.gather_rows(source, std::move(others)));
  return graph.sqrt(graph.sum_rows(graph.square(diff)));
}

NodeId triplet_hinge(Graph& graph, NodeId d_pos, NodeId d_neg, double margin) {
  NodeId slack = graph.add(graph.sub(d_pos, d_neg), graph.scalar(margin));
  return graph.mean(graph.relu(slack));
}

NodeId contrastive(Graph& graph, std::optional<NodeId> d_pos, std::optional<NodeId> d_neg, double margin) {
  std::optional<NodeId> total;
  if (d_pos) total = graph.mean(graph.square(*d_pos));
  if (d_neg) {
    NodeId shortfall = graph.relu(graph.sub(graph.scalar(margin), *d_neg));
    NodeId term = graph.mean(graph.square(shortfall));
    total = total ? graph.add(*total, term) : term;
  }
  if (!total) return graph.scalar(0.0);
  return graph.scale(*total, 0.5);
}

namespace {

// [P] distances -> [1 x bins] soft histogram normalised by P.
NodeId soft_histogram(Graph& graph, NodeId distances, std::size_t bins, BinRange range) {
  const std::size_t count = graph.shape(distances)[0];
  const double pace = (range.hi - range.lo) / static_cast<double>(bins - 1);
  NodeId clamped = graph.neg(graph.max_const(graph.neg(graph.max_const(distances, range.lo)), -range.hi));
  NodeId spread = graph.matmul(graph.reshape(clamped, {count, 1}), graph.constant(Tensor::filled({1, bins}, 1.0)));
  std::vector<double> nodes(count * bins);
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t t = 0; t < bins; ++t) nodes[p * bins + t] = range.lo + static_cast<double>(t) * pace;
  }
  NodeId offset = graph.abs(graph.sub(spread, graph.constant(Tensor::matrix(count, bins, std::move(nodes)))));
  NodeId weight = graph.relu(graph.add(graph.scale(offset, -1.0 / pace), graph.scalar(1.0)));
  NodeId totals = graph.matmul(graph.constant(Tensor::filled({1, count}, 1.0)), weight);
  return graph.scale(totals, 1.0 / static_cast<double>(count));
}

std::vector<std::size_t> unique_pairs(std::span<const Triplet> triplets, bool positive,
                                      std::vector<SamplePair>& pairs) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
  std::vector<std::size_t> index;
  index.reserve(triplets.size());
  for (const auto& t : triplets) {
    const auto key = std::make_pair(t.anchor, positive ? t.positive : t.negative);
    auto [it, inserted] = slot.emplace(key, pairs.size());
    if (inserted) pairs.push_back({key.first, key.second, t.cls});
    index.push_back(it->second);
  }
  return index;
}

} // namespace

NodeId histogram_overlap(Graph& graph, NodeId d_pos, NodeId d_neg, std::size_t bins, BinRange range) {
  if (bins < 2) throw ContractError("histogram needs at least two bins");
  if (!(range.hi > range.lo)) throw ContractError("histogram range must be non-empty");
  NodeId h_pos = soft_histogram(graph, d_pos, bins, range);
  NodeId h_neg = soft_histogram(graph, d_neg, bins, range);
  std::vector<double> upper(bins * bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t t = k; t < bins; ++t) upper[k * bins + t] = 1.0;
  }
  NodeId cumulative = graph.matmul(h_neg, graph.constant(Tensor::matrix(bins, bins, std::move(upper))));
  return graph.sum(graph.mul(h_pos, cumulative));
}

NodeId crl_relative(Graph& graph, NodeId source, MiningLevel level, std::span<const Triplet> triplets,
                    double margin) {
  if (triplets.empty()) return graph.scalar(0.0);
  std::vector<SamplePair> pos_pairs, neg_pairs;
  auto pos_index = unique_pairs(triplets, true, pos_pairs);
  auto neg_index = unique_pairs(triplets, false, neg_pairs);
  NodeId d_pos = graph.gather(pair_distances(graph, source, level, pos_pairs, true), std::move(pos_index));
  NodeId d_neg = graph.gather(pair_distances(graph, source, level, neg_pairs, false), std::move(neg_index));
  return triplet_hinge(graph, d_pos, d_neg, margin);
}

NodeId crl_absolute(Graph& graph, NodeId source, MiningLevel level, const PairSets& pairs, double margin) {
  std::optional<NodeId> d_pos, d_neg;
  if (!pairs.positive.empty()) d_pos = pair_distances(graph, source, level, pairs.positive, true);
  if (!pairs.negative.empty()) d_neg = pair_distances(graph, source, level, pairs.negative, false);
  return contrastive(graph, d_pos, d_neg, margin);
}

NodeId crl_distribution(Graph& graph, NodeId source, MiningLevel level, const PairSets& pairs, std::size_t bins,
                        BinRange range) {
  if (pairs.positive.empty() || pairs.negative.empty()) return graph.scalar(0.0);
  NodeId d_pos = pair_distances(graph, source, level, pairs.positive, true);
  NodeId d_neg = pair_distances(graph, source, level, pairs.negative, false);
  return histogram_overlap(graph, d_pos, d_neg, bins, range);
}

BinRange distribution_range(MiningLevel level, const Tensor& features, const PairSets& pairs) {
  if (level == MiningLevel::Class) return {-1.0, 1.0};
  double largest = 0.0;
  for (const auto* set : {&pairs.positive, &pairs.negative}) {
    for (const auto& p : *set) {
      largest = std::max(largest, feature_distance(features.row(p.anchor), features.row(p.other)));
    }
  }
  // Degenerate batches where every mined pair coincides.
  if (largest <= 0.0) largest = 1.0;
  return {0.0, largest};
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("loss weight alpha = eta * omega must lie in [0, 1), got " + std::to_string(alpha));
  }
}

NodeId combined_loss(Graph& graph, std::span<const NodeId> ce, std::span<const std::optional<NodeId>> crl,
                     std::span<const double> alpha) {
  if (ce.empty() || ce.size() != crl.size() || ce.size() != alpha.size()) {
    throw ContractError("combined loss needs one CE term, CRL slot and alpha per attribute");
  }
  std::optional<NodeId> total;
  for (std::size_t j = 0; j < ce.size(); ++j) {
    check_alpha(alpha[j]);
    NodeId term = graph.scale(ce[j], 1.0 - alpha[j]);
    if (crl[j]) term = graph.add(graph.scale(*crl[j], alpha[j]), term);
    total = total ? graph.add(*total, term) : term;
  }
  return *total;
}

double combined_loss(double ce, double crl, double alpha) {
  check_alpha(alpha);
  return alpha * crl + (1.0 - alpha) * ce;
}

} // namespace crl

#pragma once

#include "crl/profiler.hpp"
#include "crl/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace crl {

enum class MiningLevel { Class, Instance };
enum class ClassScope { Minority, All };

/// Top-kappa hard positives and negatives for one class (class level) or one
/// anchor instance (instance level) of one attribute. All ids index the batch.
struct HardSets {
  MiningLevel level = MiningLevel::Class;
  std::size_t attribute = 0;
  std::size_t cls = 0;
  std::optional<std::size_t> instance;
  std::vector<std::size_t> anchors; // class level: every class member; instance level: the instance
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t cls = 0;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct SamplePair {
  std::size_t anchor = 0;
  std::size_t other = 0;
  std::size_t cls = 0;
  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

struct PairSets {
  std::vector<SamplePair> positive;
  std::vector<SamplePair> negative;
};

/// Positives: the kappa lowest class-`cls` scores among samples labelled cls.
/// Negatives: the kappa highest class-`cls` scores among the other samples.
/// Ties go to the lower sample index.
HardSets mine_class_level(std::span<const double> class_scores, std::span<const int> labels, std::size_t cls,
                          std::size_t attribute, std::size_t kappa);

/// Positives: the kappa same-class samples farthest from the anchor (anchor
/// itself excluded). Negatives: the kappa other-class samples nearest to it.
HardSets mine_instance_level(const Tensor& features, std::span<const int> labels, std::size_t anchor,
                             std::size_t cls, std::size_t attribute, std::size_t kappa);

// anchors x positives x negatives, skipping anchor == positive.
std::vector<Triplet> build_triplets(const HardSets& hard);
PairSets build_pairs(const HardSets& hard);

struct MinedAttribute {
  std::vector<HardSets> sets;
  std::vector<Triplet> triplets;
  PairSets pairs;
};

/// Mines every anchor class of one attribute in a batch: the minable
/// minority classes, or every class with two or more samples for ClassScope::All.
MinedAttribute mine_attribute(const Tensor& scores, const Tensor& features, std::span<const int> labels,
                              const AttributeProfile& profile, std::size_t attribute, MiningLevel level,
                              std::size_t kappa, ClassScope scope);

} // namespace crl

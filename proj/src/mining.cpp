#include "crl/mining.hpp"

#include "crl/error.hpp"
#include "crl/model.hpp"

#include <algorithm>

namespace crl {

namespace {

struct Keyed {
  double key;
  std::size_t id;
};

// The `kappa` smallest keys, ties by ascending id.
std::vector<std::size_t> smallest(std::vector<Keyed> items, std::size_t kappa) {
  auto less = [](const Keyed& a, const Keyed& b) { return a.key < b.key || (a.key == b.key && a.id < b.id); };
  const auto take = std::min(kappa, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(take), items.end(), less);
  std::vector<std::size_t> ids(take);
  for (std::size_t i = 0; i < take; ++i) ids[i] = items[i].id;
  return ids;
}

void check_kappa(std::size_t kappa) {
  if (kappa == 0) throw ContractError("kappa must be at least 1");
}

} // namespace

HardSets mine_class_level(std::span<const double> class_scores, std::span<const int> labels, std::size_t cls,
                          std::size_t attribute, std::size_t kappa) {
  check_kappa(kappa);
  if (class_scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
  std::vector<Keyed> same, other;
  HardSets hard;
  hard.level = MiningLevel::Class;
  hard.attribute = attribute;
  hard.cls = cls;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (static_cast<std::size_t>(labels[i]) == cls) {
      same.push_back({class_scores[i], i});
      hard.anchors.push_back(i);
    } else {
      // Negated so that the highest score sorts first.
      other.push_back({-class_scores[i], i});
    }
  }
  hard.positives = smallest(std::move(same), kappa);
  hard.negatives = smallest(std::move(other), kappa);
  return hard;
}

HardSets mine_instance_level(const Tensor& features, std::span<const int> labels, std::size_t anchor,
                             std::size_t cls, std::size_t attribute, std::size_t kappa) {
  check_kappa(kappa);
  if (features.rank() != 2 || features.rows() != labels.size()) {
    throw ContractError("feature rows and labels differ in length");
  }
  if (anchor >= labels.size() || static_cast<std::size_t>(labels[anchor]) != cls) {
    throw ContractError("instance anchor must belong to the mined class");
  }
  std::vector<Keyed> same, other;
  const auto a = features.row(anchor);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i == anchor) continue;
    const double d = feature_distance(a, features.row(i));
    if (static_cast<std::size_t>(labels[i]) == cls) {
      same.push_back({-d, i});
    } else {
      other.push_back({d, i});
    }
  }
  HardSets hard;
  hard.level = MiningLevel::Instance;
  hard.attribute = attribute;
  hard.cls = cls;
  hard.instance = anchor;
  hard.anchors = {anchor};
  hard.positives = smallest(std::move(same), kappa);
  hard.negatives = smallest(std::move(other), kappa);
  return hard;
}

std::vector<Triplet> build_triplets(const HardSets& hard) {
  std::vector<Triplet> triplets;
  for (auto a : hard.anchors) {
    for (auto p : hard.positives) {
      if (p == a) continue;
      for (auto n : hard.negatives) triplets.push_back({a, p, n, hard.cls});
    }
  }
  return triplets;
}

PairSets build_pairs(const HardSets& hard) {
  PairSets pairs;
  for (auto a : hard.anchors) {
    for (auto p : hard.positives) {
      if (p != a) pairs.positive.push_back({a, p, hard.cls});
    }
    for (auto n : hard.negatives) pairs.negative.push_back({a, n, hard.cls});
  }
  return pairs;
}

MinedAttribute mine_attribute(const Tensor& scores, const Tensor& features, std::span<const int> labels,
                              const AttributeProfile& profile, std::size_t attribute, MiningLevel level,
                              std::size_t kappa, ClassScope scope) {
  std::vector<std::size_t> anchor_classes;
  if (scope == ClassScope::Minority) {
    anchor_classes = profile.partition.minable;
  } else {
    for (std::size_t k = 0; k < profile.histogram.size(); ++k) {
      if (profile.histogram[k] >= 2) anchor_classes.push_back(k);
    }
  }
  std::sort(anchor_classes.begin(), anchor_classes.end());

  MinedAttribute mined;
  std::vector<double> column(labels.size());
  for (auto c : anchor_classes) {
    if (level == MiningLevel::Class) {
      for (std::size_t i = 0; i < labels.size(); ++i) column[i] = scores.at(i, c);
      mined.sets.push_back(mine_class_level(column, labels, c, attribute, kappa));
    } else {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (static_cast<std::size_t>(labels[i]) == c) {
          mined.sets.push_back(mine_instance_level(features, labels, i, c, attribute, kappa));
        }
      }
    }
  }
  for (const auto& hard : mined.sets) {
    auto triplets = build_triplets(hard);
    mined.triplets.insert(mined.triplets.end(), triplets.begin(), triplets.end());
    auto pairs = build_pairs(hard);
    mined.pairs.positive.insert(mined.pairs.positive.end(), pairs.positive.begin(), pairs.positive.end());
    mined.pairs.negative.insert(mined.pairs.negative.end(), pairs.negative.begin(), pairs.negative.end());
  }
  return mined;
}

} // namespace crl

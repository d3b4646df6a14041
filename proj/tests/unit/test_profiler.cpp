#include "crl/error.hpp"
#include "crl/profiler.hpp"

#include "../support/support.hpp"

#include <doctest.h>

#include <numeric>

using namespace crl;
using crl::testing::Rng;

TEST_SUITE("profiler") {

TEST_CASE("class histogram counts labels") {
  const std::vector<int> labels = {0, 0, 1};
  CHECK(class_histogram(labels, 2) == std::vector<std::size_t>{2, 1});
  CHECK(class_histogram(std::vector<int>{}, 3) == std::vector<std::size_t>{0, 0, 0});
  CHECK_THROWS_AS(class_histogram(std::vector<int>{0, 2}, 2), ContractError);
  CHECK_THROWS_AS(class_histogram(std::vector<int>{-1}, 2), ContractError);
}

TEST_CASE("class histogram matches a counting oracle") {
  Rng rng(1);
  const auto labels = rng.labels(256, 7);
  std::vector<std::size_t> expected(7, 0);
  for (std::size_t k = 0; k < 7; ++k) {
    for (int l : labels) expected[k] += l == static_cast<int>(k) ? 1 : 0;
  }
  CHECK(class_histogram(labels, 7) == expected);
}

TEST_CASE("greedy minority admission examples") {
  const auto a = minority_classes(std::vector<std::size_t>{6, 2, 2}, 0.5, 10);
  CHECK(a.minority == std::vector<std::size_t>{1, 2});
  CHECK(a.minable == std::vector<std::size_t>{1, 2});
  CHECK(a.majority == std::vector<std::size_t>{0});

  const auto b = minority_classes(std::vector<std::size_t>{5, 5}, 0.5, 10);
  CHECK(b.minority == std::vector<std::size_t>{0});
  CHECK(b.majority == std::vector<std::size_t>{1});

  const auto c = minority_classes(std::vector<std::size_t>{9, 1}, 0.5, 10);
  CHECK(c.minority == std::vector<std::size_t>{1});
  CHECK(c.minable.empty());
}

TEST_CASE("minority admission preconditions") {
  CHECK_THROWS_AS(minority_classes(std::vector<std::size_t>{2, 2}, 0.0, 4), ContractError);
  CHECK_THROWS_AS(minority_classes(std::vector<std::size_t>{2, 2}, 1.5, 4), ContractError);
  CHECK_THROWS_AS(minority_classes(std::vector<std::size_t>{2, 2}, 0.5, 5), ContractError);
}

TEST_CASE("minority admission invariants on random histograms") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = rng.index(2, 12);
    std::vector<std::size_t> h(c);
    for (auto& v : h) v = rng.index(0, 40);
    const std::size_t n = std::accumulate(h.begin(), h.end(), std::size_t{0});
    if (n == 0) continue;
    const double rho = rng.uniform(0.05, 1.0);
    const auto p = minority_classes(h, rho, n);
    std::size_t admitted = 0;
    for (auto k : p.minority) admitted += h[k];
    CHECK(static_cast<double>(admitted) <= rho * static_cast<double>(n));
    std::vector<int> seen(c, 0);
    for (auto k : p.minority) ++seen[k];
    for (auto k : p.majority) ++seen[k];
    for (int s : seen) CHECK(s == 1);
    for (auto k : p.minable) CHECK(h[k] >= 2);
    // Any single excluded class would break the cap.
    for (auto k : p.majority) CHECK(static_cast<double>(admitted + h[k]) > rho * static_cast<double>(n));
  }
}

TEST_CASE("imbalance measure examples") {
  CHECK(imbalance_measure(std::vector<std::size_t>{100, 100, 100}) == 0.0);
  CHECK(imbalance_measure(std::vector<std::size_t>{100, 0}) == 0.5);
  CHECK(imbalance_measure(std::vector<std::size_t>{500, 25}) == doctest::Approx(0.475).epsilon(1e-15));
  CHECK_THROWS_AS(imbalance_measure(std::vector<std::size_t>{0, 0}), ContractError);
}

TEST_CASE("imbalance measure is scale invariant, monotone and inside [0, 1)") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const std::size_t c = rng.index(2, 8);
    std::vector<std::size_t> counts(c);
    for (auto& v : counts) v = rng.index(0, 100);
    counts[rng.index(0, c - 1)] += 1;
    const double omega = imbalance_measure(counts);
    CHECK(omega >= 0.0);
    CHECK(omega < 1.0);
    auto scaled = counts;
    const std::size_t factor = rng.index(2, 9);
    for (auto& v : scaled) v *= factor;
    CHECK(imbalance_measure(scaled) == doctest::Approx(omega).epsilon(1e-14));

    const std::size_t a = rng.index(1, 100), b = rng.index(0, a), b2 = rng.index(0, b);
    CHECK(imbalance_measure(std::vector<std::size_t>{a, b}) <= imbalance_measure(std::vector<std::size_t>{a, b2}));
  }
}

TEST_CASE("shrinking a non-largest class strictly raises the measure") {
  CHECK(imbalance_measure(std::vector<std::size_t>{50, 30, 20}) < imbalance_measure(std::vector<std::size_t>{50, 29, 20}));
}

TEST_CASE("batch profile and training weights") {
  Dataset ds(1, {2, 3});
  const double x = 0.0;
  const std::vector<std::vector<int>> rows = {{0, 0}, {0, 1}, {0, 2}, {1, 2}};
  for (std::size_t i = 0; i < rows.size(); ++i) ds.append(static_cast<std::int64_t>(i), {&x, 1}, rows[i]);
  const auto profile = profile_batch(ds, 0.5);
  CHECK(profile.batch_size == 4);
  CHECK(profile.attributes[0].histogram == std::vector<std::size_t>{3, 1});
  CHECK(profile.attributes[1].histogram == std::vector<std::size_t>{1, 1, 2});
  CHECK(profile.attributes[1].partition.minority == std::vector<std::size_t>{0, 1});

  const auto w = imbalance_weights(ds, 0.01);
  CHECK(w.omega[0] == doctest::Approx(2.0 / 6.0));
  CHECK(w.omega[1] == doctest::Approx(2.0 / 6.0));
  CHECK(w.alpha[0] == doctest::Approx(0.01 * w.omega[0]));
  CHECK_THROWS_AS(imbalance_weights(ds, -1.0), ConfigError);
}

} // TEST_SUITE

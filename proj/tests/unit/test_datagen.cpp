#include "crl/datagen.hpp"
#include "crl/error.hpp"

#include "../support/support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace crl;
using crl::testing::Rng;

namespace {

BlobSpec two_class_spec(std::vector<std::size_t> counts, double sigma, std::uint64_t seed) {
  BlobSpec spec;
  spec.input_dim = 2;
  spec.seed = seed;
  spec.attributes.push_back({{{0.0, 0.0}, {4.0, 1.0}}, sigma, std::move(counts)});
  return spec;
}

} // namespace

TEST_SUITE("datagen") {

TEST_CASE("blobs have exact per-class counts and sequential ids") {
  const Dataset ds = synth_blobs(two_class_spec({500, 25}, 1.0, 3));
  CHECK(ds.size() == 525);
  CHECK(ds.class_totals(0) == std::vector<std::size_t>{500, 25});
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.ids[i] == static_cast<std::int64_t>(i));
}

TEST_CASE("vanishing spread puts every sample on its centre") {
  const Dataset ds = synth_blobs(two_class_spec({5, 5}, 1e-300, 1));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.feature(i);
    const double cx = ds.label(i, 0) == 0 ? 0.0 : 4.0, cy = ds.label(i, 0) == 0 ? 0.0 : 1.0;
    CHECK(std::fabs(x[0] - cx) <= 1e-12);
    CHECK(std::fabs(x[1] - cy) <= 1e-12);
  }
}

TEST_CASE("blob generation is deterministic per seed") {
  std::ostringstream a, b, c;
  write_dataset(synth_blobs(two_class_spec({30, 20}, 1.0, 8)), a);
  write_dataset(synth_blobs(two_class_spec({30, 20}, 1.0, 8)), b);
  write_dataset(synth_blobs(two_class_spec({30, 20}, 1.0, 9)), c);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("multi-label blobs honour counts per attribute and an optional joint table") {
  BlobSpec spec;
  spec.input_dim = 3;
  spec.seed = 5;
  spec.attributes.push_back({random_centers(2, 3, 2.0, 1), 0.5, {60, 40}});
  spec.attributes.push_back({random_centers(3, 3, 2.0, 2), 0.5, {10, 30, 60}});
  const Dataset ds = synth_blobs(spec);
  CHECK(ds.class_totals(0) == std::vector<std::size_t>{60, 40});
  CHECK(ds.class_totals(1) == std::vector<std::size_t>{10, 30, 60});

  spec.joint = {{{0, 2}, 7}, {{1, 0}, 3}};
  const Dataset joint = synth_blobs(spec);
  CHECK(joint.size() == 10);
  CHECK(joint.class_totals(1) == std::vector<std::size_t>{3, 0, 7});
}

TEST_CASE("invalid blob specs are rejected") {
  CHECK_THROWS_AS(synth_blobs(two_class_spec({5, 5}, 0.0, 1)), ContractError);
  BlobSpec same = two_class_spec({5, 5}, 1.0, 1);
  same.attributes[0].centers[1] = same.attributes[0].centers[0];
  CHECK_THROWS_AS(synth_blobs(same), ContractError);
}

TEST_CASE("power law sizes for 100 classes") {
  const auto s = power_law_sizes({100, 1.0, 500, 25});
  CHECK(s.b == doctest::Approx(80.0 / 19.0).epsilon(1e-14));
  CHECK(s.a == doctest::Approx(500.0 * (1.0 + 80.0 / 19.0)).epsilon(1e-14));
  CHECK(std::fabs(s.a - 2605.26) < 0.01);
  CHECK(s.sizes.size() == 100);
  CHECK(s.sizes.front() == 500);
  CHECK(s.sizes.back() == 25);
  CHECK(s.sizes[1] == 419);
}

TEST_CASE("two-class power law with a negative offset") {
  // a/(1+b) = 500 and a/(2+b) = 25 give b = -18/19, still with 1 + b > 0.
  const auto s = power_law_sizes({2, 1.0, 500, 25});
  CHECK(s.b == doctest::Approx(-18.0 / 19.0).epsilon(1e-14));
  CHECK(s.a / (1.0 + s.b) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(s.a / (2.0 + s.b) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(s.sizes == std::vector<std::size_t>{500, 25});
}

TEST_CASE("infeasible power laws are rejected") {
  CHECK_THROWS_AS(power_law_sizes({10, 1.0, 25, 25}), ContractError);
  CHECK_THROWS_AS(power_law_sizes({10, 1.0, 20, 25}), ContractError);
  CHECK_THROWS_AS(power_law_sizes({10, 1.0, 20, 0}), ContractError);
  CHECK_THROWS_AS(power_law_sizes({1, 1.0, 500, 25}), ContractError);
  CHECK_THROWS_AS(power_law_sizes({10, 0.0, 500, 25}), ContractError);
}

TEST_CASE("power law sizes are non-increasing and hit the endpoints") {
  for (double gamma : {0.2, 0.4, 0.6, 0.8, 1.0, 1.7, 3.0}) {
    for (std::size_t c : {2u, 3u, 10u, 100u}) {
      const auto s = power_law_sizes({c, gamma, 500, 25});
      CHECK(s.sizes.front() == 500);
      CHECK(s.sizes.back() == 25);
      for (std::size_t i = 1; i < c; ++i) CHECK(s.sizes[i] <= s.sizes[i - 1]);
      // Interior sizes are the half-up rounding of the closed form.
      for (std::size_t i = 1; i + 1 < c; ++i) {
        const double f = s.a / (std::pow(static_cast<double>(i + 1), gamma) + s.b);
        CHECK(s.sizes[i] == static_cast<std::size_t>(std::floor(f + 0.5)));
      }
    }
  }
}

TEST_CASE("subsampling hits exact sizes and keeps order") {
  const Dataset ds = synth_blobs(two_class_spec({10, 10}, 1.0, 2));
  CHECK(subsample_to_sizes(ds, 0, {10, 10}, 1) == ds);
  const Dataset out = subsample_to_sizes(ds, 0, {8, 2}, 1);
  CHECK(out.class_totals(0) == std::vector<std::size_t>{8, 2});
  CHECK(std::is_sorted(out.ids.begin(), out.ids.end()));
  try {
    subsample_to_sizes(ds, 0, {11, 2}, 1);
    FAIL("expected an infeasible size error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("class 0") != std::string::npos);
  }
}

TEST_CASE("imbalance ratio of a power-law subset is exactly n_min : n_max") {
  const Dataset pool = synth_blobs(two_class_spec({600, 600}, 1.0, 4));
  const auto sizes = power_law_sizes({2, 0.6, 500, 25}).sizes;
  const Dataset out = subsample_to_sizes(pool, 0, sizes, 7);
  const auto totals = out.class_totals(0);
  CHECK(*std::max_element(totals.begin(), totals.end()) == 500);
  CHECK(*std::min_element(totals.begin(), totals.end()) == 25);
}

TEST_CASE("balanced companion uses largest-remainder sizes") {
  CHECK(balanced_sizes(525, 2) == std::vector<std::size_t>{263, 262});
  CHECK(balanced_sizes(10, 3) == std::vector<std::size_t>{4, 3, 3});
  CHECK(balanced_sizes(9, 3) == std::vector<std::size_t>{3, 3, 3});
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t total = rng.index(0, 5000), c = rng.index(1, 40);
    const auto s = balanced_sizes(total, c);
    std::size_t sum = 0;
    for (auto v : s) sum += v;
    CHECK(sum == total);
    CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
  }
  const Dataset pool = synth_blobs(two_class_spec({400, 400}, 1.0, 5));
  const Dataset companion = balanced_companion(pool, 0, 525, 2);
  CHECK(companion.class_totals(0) == std::vector<std::size_t>{263, 262});
}

TEST_CASE("dataset files round-trip exactly") {
  Rng rng(6);
  const Dataset ds = crl::testing::random_dataset(rng, 50, 4, {2, 5, 3});
  std::stringstream buffer;
  write_dataset(ds, buffer);
  CHECK(buffer.str().rfind("dim=4,attrs=3,classes=2;5;3\n", 0) == 0);
  CHECK(read_dataset(buffer) == ds);

  const auto path = std::filesystem::temp_directory_path() / "crl_roundtrip_test.csv";
  write_dataset(ds, path);
  CHECK(read_dataset(path) == ds);
  std::filesystem::remove(path);
}

TEST_CASE("a 64-dim, 9-attribute, 1000-row file parses") {
  Rng rng(7);
  const Dataset ds = crl::testing::random_dataset(rng, 1000, 64, {2, 3, 4, 5, 6, 7, 2, 3, 55});
  std::stringstream buffer;
  write_dataset(ds, buffer);
  const Dataset back = read_dataset(buffer);
  CHECK(back.size() == 1000);
  CHECK(back == ds);
}

TEST_CASE("malformed files report the line") {
  std::stringstream short_row("dim=1,attrs=3,classes=2;2;2\n0,0.5,1,0,1\n1,0.25,1,0\n");
  try {
    read_dataset(short_row);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream bad_header("dims=1,attrs=1,classes=2\n");
  CHECK_THROWS_AS(read_dataset(bad_header), ParseError);
  std::stringstream bad_label("dim=1,attrs=1,classes=2\n0,0.5,2\n");
  CHECK_THROWS_AS(read_dataset(bad_label), ParseError);
  std::stringstream bad_number("dim=1,attrs=1,classes=2\n0,abc,1\n");
  CHECK_THROWS_AS(read_dataset(bad_number), ParseError);
}

} // TEST_SUITE

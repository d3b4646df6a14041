#include "crl/autodiff.hpp"
#include "crl/error.hpp"
#include "crl/gradcheck.hpp"

#include "../support/support.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace crl;
using crl::testing::Rng;

TEST_SUITE("autodiff") {

TEST_CASE("tensor construction validates extents") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Tensor({0}, {}), ShapeError);
  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6.0);
  CHECK(m.row(1)[0] == 4.0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS(m.item());
}

TEST_CASE("square of a fed leaf") {
  Graph g;
  auto x = g.leaf(Shape{1});
  auto y = g.square(x);
  CHECK(g.eval(y, {{x, Tensor::scalar(2.0)}}).item() == 4.0);
}

TEST_CASE("relu clips negatives") {
  Graph g;
  auto x = g.leaf(Tensor::vector({1, 0, -1}));
  CHECK(g.eval(g.relu(x)).values() == std::vector<double>{1, 0, 0});
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph g;
  auto x = g.leaf(Tensor::matrix(1, 2, {0, 0}));
  CHECK(g.eval(g.softmax(x)).values() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("backward of square at 3 is 6") {
  Graph g;
  auto x = g.leaf(Tensor::scalar(3.0));
  auto loss = g.square(x);
  g.eval(loss);
  CHECK(g.backward(loss).at(x).item() == 6.0);
}

TEST_CASE("mean relu subgradient is zero on the negative side") {
  Graph g;
  auto x = g.leaf(Tensor::vector({-1, 2}));
  auto loss = g.mean(g.relu(x));
  g.eval(loss);
  CHECK(g.backward(loss).at(x).values() == std::vector<double>{0.0, 0.5});
}

TEST_CASE("subgradients at kinks are zero") {
  Graph g;
  auto x = g.leaf(Tensor::vector({0.0, 0.0, 0.0}));
  auto loss = g.add(g.add(g.sum(g.relu(x)), g.sum(g.abs(x))), g.sum(g.max_const(x, 0.0)));
  g.eval(loss);
  CHECK(g.backward(loss).at(x).values() == std::vector<double>{0, 0, 0});
  Graph h;
  auto z = h.leaf(Tensor::scalar(0.0));
  auto s = h.sqrt(z);
  h.eval(s);
  CHECK(h.backward(s).at(z).item() == 0.0);
}

TEST_CASE("backward requires a scalar, evaluated loss") {
  Graph g;
  auto x = g.leaf(Tensor::vector({1, 2}));
  auto y = g.square(x);
  g.eval(y);
  CHECK_THROWS_AS(g.backward(y), ContractError);
  auto s = g.sum(y);
  CHECK_THROWS_AS(g.backward(s), ContractError);
}

TEST_CASE("shape errors name the node") {
  Graph g;
  auto a = g.leaf(Shape{2, 3});
  auto b = g.leaf(Shape{2, 3});
  try {
    g.matmul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
  }
  CHECK_THROWS_AS(g.add(a, g.leaf(Shape{3, 2})), ShapeError);
  CHECK_NOTHROW(g.add(a, g.scalar(1.0)));
}

TEST_CASE("non-finite values raise a numeric error") {
  Graph g;
  auto x = g.leaf(Tensor::scalar(-1.0));
  auto y = g.log(x);
  CHECK_THROWS_AS(g.eval(y), NumericError);
  Graph h;
  auto big = h.leaf(Tensor::scalar(1000.0));
  CHECK_THROWS_AS(h.eval(h.exp(big)), NumericError);
}

TEST_CASE("feeding a non-leaf or a wrong shape is rejected") {
  Graph g;
  auto x = g.leaf(Shape{2});
  auto y = g.square(x);
  CHECK_THROWS_AS(g.eval(y, {{y, Tensor::vector({1, 2})}}), ContractError);
  CHECK_THROWS_AS(g.eval(y, {{x, Tensor::vector({1, 2, 3})}}), ShapeError);
}

TEST_CASE("refeeding recomputes downstream values") {
  Graph g;
  auto x = g.leaf(Shape{1});
  auto y = g.scale(g.square(x), 2.0);
  CHECK(g.eval(y, {{x, Tensor::scalar(1.0)}}).item() == 2.0);
  CHECK(g.eval(y, {{x, Tensor::scalar(3.0)}}).item() == 18.0);
}

TEST_CASE("softmax rows sum to one and stay inside (0, 1)") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = rng.index(1, 6), cols = rng.index(2, 7);
    Graph g;
    // Logit spreads stay small enough that no probability rounds to 0 or 1.
    auto x = g.leaf(rng.matrix(rows, cols, -5.0, 5.0));
    const Tensor& p = g.eval(g.softmax(x));
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(std::fabs(crl::testing::softmax_row_sum(p, r) - 1.0) <= 1e-12);
      for (double v : p.row(r)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("eval is bit-for-bit deterministic") {
  Rng rng(5);
  const Tensor a = rng.matrix(4, 3, -2, 2), b = rng.matrix(3, 5, -2, 2);
  auto run = [&] {
    Graph g;
    auto x = g.leaf(a), w = g.leaf(b);
    return g.eval(g.softmax(g.relu(g.matmul(x, w))));
  };
  CHECK(run() == run());
}

TEST_CASE("gather, gather_rows, concat and reshape move values") {
  Graph g;
  auto m = g.leaf(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK(g.eval(g.gather(m, {5, 0, 3})).values() == std::vector<double>{6, 1, 4});
  CHECK(g.eval(g.gather_rows(m, {2, 2, 0})).values() == std::vector<double>{5, 6, 5, 6, 1, 2});
  auto c = g.concat({m, g.gather_rows(m, {1})});
  CHECK(g.shape(c) == Shape{4, 2});
  CHECK(g.eval(c).values() == std::vector<double>{1, 2, 3, 4, 5, 6, 3, 4});
  CHECK(g.eval(g.reshape(m, {2, 3})).at(1, 0) == 4.0);
  CHECK(g.eval(g.sum_rows(m)).values() == std::vector<double>{3, 7, 11});
  CHECK_THROWS_AS(g.gather(m, {6}), ShapeError);
}

TEST_CASE("check_gradient of a plain sum is exact") {
  auto builder = [](Graph& g, NodeId x) { return g.sum(x); };
  CHECK(check_gradient(builder, Tensor::vector({0.3, -1.2, 2.0})) <= 1e-9);
}

TEST_CASE("check_gradient of two-class softmax cross entropy") {
  auto builder = [](Graph& g, NodeId x) { return g.neg(g.log(g.gather(g.softmax(x), {0}))); };
  CHECK(check_gradient(builder, Tensor::matrix(1, 2, {1.0, -1.0})) <= 1e-6);
}

TEST_CASE("check_gradient validates its step and detects non-determinism") {
  auto builder = [](Graph& g, NodeId x) { return g.sum(x); };
  CHECK_THROWS_AS(check_gradient(builder, Tensor::scalar(1.0), 0.0), ContractError);
  CHECK_THROWS_AS(check_gradient(builder, Tensor::scalar(1.0), 2e-3), ContractError);
  int calls = 0;
  auto flaky = [&calls](Graph& g, NodeId x) { return g.add(g.sum(x), g.scalar(static_cast<double>(calls++))); };
  CHECK_THROWS_AS(check_gradient(flaky, Tensor::scalar(1.0)), ContractError);
}

TEST_CASE("matmul, softmax and cross entropy composite matches finite differences") {
  Rng rng(3);
  const Tensor x = rng.matrix(3, 4, -2, 2);
  auto builder = [&](Graph& g, NodeId w) {
    auto p = g.softmax(g.matmul(g.constant(x), w));
    return g.scale(g.sum(g.log(g.gather(p, {0, 6, 11}))), -1.0 / 3.0);
  };
  CHECK(check_gradient(builder, rng.matrix(4, 4, -2, 2)) <= 1e-4);
}

// Every op kind on 100 random points, skipping those near a kink.
TEST_CASE("per-op gradients match central differences") {
  struct Case {
    const char* name;
    std::function<NodeId(Graph&, NodeId)> build;
    double lo, hi;
    bool kinked;
  };
  const Tensor other = Tensor::matrix(2, 3, {0.5, -1.0, 1.5, 2.0, -0.3, 0.7});
  const Tensor right = Tensor::matrix(3, 2, {1.0, -0.5, 0.2, 0.3, -1.1, 0.8});
  const std::vector<Case> cases = {
      {"add", [&](Graph& g, NodeId x) { return g.sum(g.square(g.add(x, g.constant(other)))); }, -2, 2, false},
      {"sub", [&](Graph& g, NodeId x) { return g.sum(g.square(g.sub(g.constant(other), x))); }, -2, 2, false},
      {"mul", [&](Graph& g, NodeId x) { return g.sum(g.mul(x, g.mul(x, g.constant(other)))); }, -2, 2, false},
      {"scalar-add", [&](Graph& g, NodeId x) { return g.sum(g.square(g.add(x, g.scalar(0.7)))); }, -2, 2, false},
      {"neg", [&](Graph& g, NodeId x) { return g.sum(g.mul(g.neg(x), g.constant(other))); }, -2, 2, false},
      {"matmul", [&](Graph& g, NodeId x) { return g.sum(g.square(g.matmul(x, g.constant(right)))); }, -2, 2, false},
      {"relu", [&](Graph& g, NodeId x) { return g.sum(g.mul(g.relu(x), g.constant(other))); }, -2, 2, true},
      {"max", [&](Graph& g, NodeId x) { return g.sum(g.mul(g.max_const(x, 0.0), g.constant(other))); }, -2, 2, true},
      {"exp", [&](Graph& g, NodeId x) { return g.sum(g.exp(x)); }, -2, 2, false},
      {"log", [&](Graph& g, NodeId x) { return g.sum(g.log(g.add(g.square(x), g.scalar(0.5)))); }, -2, 2, false},
      {"sqrt", [&](Graph& g, NodeId x) { return g.sum(g.sqrt(g.add(g.square(x), g.scalar(0.1)))); }, -2, 2, false},
      {"sum_rows", [&](Graph& g, NodeId x) { return g.sum(g.square(g.sum_rows(x))); }, -2, 2, false},
      {"mean", [&](Graph& g, NodeId x) { return g.square(g.mean(x)); }, -2, 2, false},
      {"softmax", [&](Graph& g, NodeId x) { return g.sum(g.mul(g.softmax(x), g.constant(other))); }, -2, 2, false},
      {"abs", [&](Graph& g, NodeId x) { return g.sum(g.mul(g.abs(x), g.constant(other))); }, -2, 2, true},
      {"scale", [&](Graph& g, NodeId x) { return g.sum(g.square(g.scale(x, -2.5))); }, -2, 2, false},
      {"concat", [&](Graph& g, NodeId x) { return g.sum(g.square(g.concat({x, g.constant(other), x}))); }, -2, 2, false},
      {"gather", [&](Graph& g, NodeId x) { return g.sum(g.square(g.gather(x, {0, 4, 4, 5}))); }, -2, 2, false},
      {"gather_rows", [&](Graph& g, NodeId x) { return g.sum(g.square(g.gather_rows(x, {1, 1, 0}))); }, -2, 2, false},
      {"reshape", [&](Graph& g, NodeId x) { return g.sum(g.square(g.matmul(g.reshape(x, {3, 2}), g.constant(other)))); }, -2, 2, false},
  };
  Rng rng(42);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    int checked = 0;
    while (checked < 100) {
      const Tensor point = rng.matrix(2, 3, c.lo, c.hi);
      if (c.kinked) {
        bool near = false;
        for (double v : point.values()) near = near || std::fabs(v) < 1e-6;
        if (near) continue;
      }
      CHECK(check_gradient(c.build, point) <= 1e-4);
      ++checked;
    }
  }
}

} // TEST_SUITE

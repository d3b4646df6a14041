#pragma once

#include "crl/tensor.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace crl {

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class OpKind {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Neg,
  MatMul,
  Relu,
  MaxConst,
  Exp,
  Log,
  Square,
  Sqrt,
  Sum,
  SumRows,
  Mean,
  Softmax,
  Abs,
  Scale,
  Concat,
  Gather,
  GatherRows,
  Reshape,
};

const char* op_name(OpKind kind);

using Feeds = std::map<NodeId, Tensor>;
using Gradients = std::map<NodeId, Tensor>;

/// Append-only computation graph with reverse-mode differentiation.
///
/// Nodes are appended by the builder methods; shapes are inferred and checked
/// as each node is added. Values are computed lazily by eval() in append
/// order and cached until new feeds are supplied. A Graph is single-writer.
///
/// Elementwise binary ops accept equal shapes or one operand of size 1.
/// Subgradients at kinks (relu, max, abs, sqrt at 0) are 0.
class Graph {
public:
  // Leaves are differentiable inputs; their value comes from a feed or from
  // the initial tensor given here.
  NodeId leaf(Shape shape, std::string name = {});
  NodeId leaf(Tensor initial, std::string name = {});
  NodeId constant(Tensor value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId matmul(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  // max(a, floor) elementwise.
  NodeId max_const(NodeId a, double floor);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);
  NodeId sum(NodeId a);
  // Sum over the last axis of a matrix: [r x c] -> [r].
  NodeId sum_rows(NodeId a);
  NodeId mean(NodeId a);
  NodeId softmax(NodeId a);
  NodeId abs(NodeId a);
  NodeId scale(NodeId a, double factor);
  // Concatenate along the first axis; trailing extents must agree.
  NodeId concat(const std::vector<NodeId>& parts);
  // Flat-index gather: result[k] = a.data[indices[k]].
  NodeId gather(NodeId a, std::vector<std::size_t> indices);
  NodeId gather_rows(NodeId a, std::vector<std::size_t> rows);
  NodeId reshape(NodeId a, Shape shape);

  NodeId scalar(double value) { return constant(Tensor::scalar(value)); }

  /// Applies feeds (invalidating cached values when non-empty) and evaluates
  /// every node up to and including `target`.
  const Tensor& eval(NodeId target, const Feeds& feeds = {});

  /// Reverse accumulation from a scalar node. eval(loss) must have run.
  /// Returns gradients for every leaf that precedes the loss.
  Gradients backward(NodeId loss);

  const Tensor& value(NodeId id) const;
  const Tensor& grad(NodeId id) const;
  const Shape& shape(NodeId id) const { return node(id).shape; }
  OpKind kind(NodeId id) const { return node(id).kind; }
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Shape shape;
    double param = 0.0;
    std::vector<std::size_t> indices;
    std::string name;
    Tensor value;
    Tensor grad;
    bool has_value = false;
  };

  NodeId append(Node node);
  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  std::string describe(NodeId id) const;
  NodeId elementwise_binary(OpKind kind, NodeId a, NodeId b);
  NodeId unary(OpKind kind, NodeId a, double param = 0.0);
  void compute(std::size_t index);
  void propagate(std::size_t index);

  std::vector<Node> nodes_;
  std::size_t evaluated_ = 0;
};

} // namespace crl

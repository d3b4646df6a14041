#include "crl/autodiff.hpp"

#include "crl/error.hpp"

#include <algorithm>
#include <cmath>

namespace crl {

const char* op_name(OpKind kind) {
  switch (kind) {
  case OpKind::Leaf: return "leaf";
  case OpKind::Constant: return "constant";
  case OpKind::Add: return "add";
  case OpKind::Sub: return "sub";
  case OpKind::Mul: return "mul";
  case OpKind::Neg: return "neg";
  case OpKind::MatMul: return "matmul";
  case OpKind::Relu: return "relu";
  case OpKind::MaxConst: return "max_const";
  case OpKind::Exp: return "exp";
  case OpKind::Log: return "log";
  case OpKind::Square: return "square";
  case OpKind::Sqrt: return "sqrt";
  case OpKind::Sum: return "sum";
  case OpKind::SumRows: return "sum_rows";
  case OpKind::Mean: return "mean";
  case OpKind::Softmax: return "softmax";
  case OpKind::Abs: return "abs";
  case OpKind::Scale: return "scale";
  case OpKind::Concat: return "concat";
  case OpKind::Gather: return "gather";
  case OpKind::GatherRows: return "gather_rows";
  case OpKind::Reshape: return "reshape";
  }
  return "unknown";
}

namespace {

// Index into a possibly size-1 (broadcast) operand.
inline double bcast(const Tensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

void accumulate_bcast(Tensor& grad, std::size_t i, double g) {
  if (grad.size() == 1) {
    grad[0] += g;
  } else {
    grad[i] += g;
  }
}

} // namespace

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw ContractError("unknown node #" + std::to_string(id.index));
  return nodes_[id.index];
}

Graph::Node& Graph::node(NodeId id) {
  if (id.index >= nodes_.size()) throw ContractError("unknown node #" + std::to_string(id.index));
  return nodes_[id.index];
}

std::string Graph::describe(NodeId id) const {
  const auto& n = node(id);
  std::string out = "node #" + std::to_string(id.index) + " (" + op_name(n.kind);
  if (!n.name.empty()) out += " '" + n.name + "'";
  return out + ")";
}

NodeId Graph::append(Node n) {
  for (auto input : n.inputs) node(input);
  n.value = Tensor::zeros(n.shape);
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::leaf(Shape shape, std::string name) {
  Node n{OpKind::Leaf, {}, std::move(shape), 0.0, {}, std::move(name), {}, {}, false};
  Tensor::zeros(n.shape); // validates extents
  return append(std::move(n));
}

NodeId Graph::leaf(Tensor initial, std::string name) {
  auto id = leaf(initial.shape(), std::move(name));
  nodes_[id.index].value = std::move(initial);
  nodes_[id.index].has_value = true;
  return id;
}

NodeId Graph::constant(Tensor value) {
  Node n{OpKind::Constant, {}, value.shape(), 0.0, {}, {}, {}, {}, true};
  auto id = NodeId{nodes_.size()};
  nodes_.push_back(std::move(n));
  nodes_.back().value = std::move(value);
  return id;
}

NodeId Graph::elementwise_binary(OpKind kind, NodeId a, NodeId b) {
  const auto& sa = shape(a);
  const auto& sb = shape(b);
  Shape out;
  if (sa == sb) {
    out = sa;
  } else if (shape_size(sb) == 1) {
    out = sa;
  } else if (shape_size(sa) == 1) {
    out = sb;
  } else {
    throw ShapeError(std::string("node #") + std::to_string(nodes_.size()) + " (" + op_name(kind) +
                     "): incompatible shapes " + shape_to_string(sa) + " and " + shape_to_string(sb));
  }
  return append(Node{kind, {a, b}, out, 0.0, {}, {}, {}, {}, false});
}

NodeId Graph::unary(OpKind kind, NodeId a, double param) {
  return append(Node{kind, {a}, shape(a), param, {}, {}, {}, {}, false});
}

NodeId Graph::add(NodeId a, NodeId b) { return elementwise_binary(OpKind::Add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return elementwise_binary(OpKind::Sub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return elementwise_binary(OpKind::Mul, a, b); }
NodeId Graph::neg(NodeId a) { return unary(OpKind::Neg, a); }
NodeId Graph::relu(NodeId a) { return unary(OpKind::Relu, a); }
NodeId Graph::max_const(NodeId a, double floor) { return unary(OpKind::MaxConst, a, floor); }
NodeId Graph::exp(NodeId a) { return unary(OpKind::Exp, a); }
NodeId Graph::log(NodeId a) { return unary(OpKind::Log, a); }
NodeId Graph::square(NodeId a) { return unary(OpKind::Square, a); }
NodeId Graph::sqrt(NodeId a) { return unary(OpKind::Sqrt, a); }
NodeId Graph::abs(NodeId a) { return unary(OpKind::Abs, a); }
NodeId Graph::scale(NodeId a, double factor) { return unary(OpKind::Scale, a, factor); }
NodeId Graph::softmax(NodeId a) { return unary(OpKind::Softmax, a); }

NodeId Graph::matmul(NodeId a, NodeId b) {
  const auto& sa = shape(a);
  const auto& sb = shape(b);
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("node #" + std::to_string(nodes_.size()) + " (matmul): cannot multiply " +
                     shape_to_string(sa) + " by " + shape_to_string(sb));
  }
  return append(Node{OpKind::MatMul, {a, b}, {sa[0], sb[1]}, 0.0, {}, {}, {}, {}, false});
}

NodeId Graph::sum(NodeId a) { return append(Node{OpKind::Sum, {a}, {1}, 0.0, {}, {}, {}, {}, false}); }

NodeId Graph::mean(NodeId a) { return append(Node{OpKind::Mean, {a}, {1}, 0.0, {}, {}, {}, {}, false}); }

NodeId Graph::sum_rows(NodeId a) {
  const auto& sa = shape(a);
  if (sa.size() != 2) {
    throw ShapeError("node #" + std::to_string(nodes_.size()) + " (sum_rows): expected a matrix, got " +
                     shape_to_string(sa));
  }
  return append(Node{OpKind::SumRows, {a}, {sa[0]}, 0.0, {}, {}, {}, {}, false});
}

NodeId Graph::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ShapeError("node #" + std::to_string(nodes_.size()) + " (concat): no inputs");
  Shape out = shape(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& s = shape(parts[i]);
    if (s.size() != out.size() || !std::equal(s.begin() + 1, s.end(), out.begin() + 1)) {
      throw ShapeError("node #" + std::to_string(nodes_.size()) + " (concat): part " + std::to_string(i) +
                       " has shape " + shape_to_string(s) + ", expected trailing extents of " +
                       shape_to_string(out));
    }
    out[0] += s[0];
  }
  return append(Node{OpKind::Concat, parts, out, 0.0, {}, {}, {}, {}, false});
}

NodeId Graph::gather(NodeId a, std::vector<std::size_t> indices) {
  auto n = shape_size(shape(a));
  if (indices.empty()) throw ShapeError("node #" + std::to_string(nodes_.size()) + " (gather): empty index list");
  for (auto i : indices) {
    if (i >= n) {
      throw ShapeError("node #" + std::to_string(nodes_.size()) + " (gather): index " + std::to_string(i) +
                       " out of range for " + std::to_string(n) + " elements");
    }
  }
  Shape out{indices.size()};
  return append(Node{OpKind::Gather, {a}, out, 0.0, std::move(indices), {}, {}, {}, false});
}

NodeId Graph::gather_rows(NodeId a, std::vector<std::size_t> rows) {
  const auto& sa = shape(a);
  if (sa.size() != 2 || rows.empty()) {
    throw ShapeError("node #" + std::to_string(nodes_.size()) + " (gather_rows): need a matrix and rows, got " +
                     shape_to_string(sa));
  }
  for (auto r : rows) {
    if (r >= sa[0]) {
      throw ShapeError("node #" + std::to_string(nodes_.size()) + " (gather_rows): row " + std::to_string(r) +
                       " out of range for " + shape_to_string(sa));
    }
  }
  Shape out{rows.size(), sa[1]};
  return append(Node{OpKind::GatherRows, {a}, out, 0.0, std::move(rows), {}, {}, {}, false});
}

NodeId Graph::reshape(NodeId a, Shape s) {
  if (shape_size(s) != shape_size(shape(a))) {
    throw ShapeError("node #" + std::to_string(nodes_.size()) + " (reshape): cannot view " +
                     shape_to_string(shape(a)) + " as " + shape_to_string(s));
  }
  return append(Node{OpKind::Reshape, {a}, std::move(s), 0.0, {}, {}, {}, {}, false});
}

const Tensor& Graph::value(NodeId id) const {
  const auto& n = node(id);
  if (id.index >= evaluated_ && n.kind != OpKind::Constant) {
    throw ContractError(describe(id) + " has not been evaluated");
  }
  return n.value;
}

const Tensor& Graph::grad(NodeId id) const { return node(id).grad; }

const Tensor& Graph::eval(NodeId target, const Feeds& feeds) {
  node(target);
  for (const auto& [id, tensor] : feeds) {
    auto& n = node(id);
    if (n.kind != OpKind::Leaf) throw ContractError("cannot feed " + describe(id) + ": not a leaf");
    if (tensor.shape() != n.shape) {
      throw ShapeError(describe(id) + ": fed shape " + shape_to_string(tensor.shape()) + ", expected " +
                       shape_to_string(n.shape));
    }
    n.value = tensor;
    n.has_value = true;
    evaluated_ = std::min(evaluated_, id.index);
  }
  for (std::size_t i = evaluated_; i <= target.index; ++i) {
    compute(i);
    evaluated_ = i + 1;
  }
  return nodes_[target.index].value;
}

void Graph::compute(std::size_t index) {
  auto& n = nodes_[index];
  const NodeId id{index};
  auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };
  Tensor& out = n.value;

  switch (n.kind) {
  case OpKind::Leaf:
    if (!n.has_value) throw ContractError(describe(id) + " was not fed");
    break;
  case OpKind::Constant:
    break;
  case OpKind::Add:
  case OpKind::Sub:
  case OpKind::Mul: {
    const auto& a = in(0);
    const auto& b = in(1);
    out = Tensor::zeros(n.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double x = bcast(a, i);
      double y = bcast(b, i);
      out[i] = n.kind == OpKind::Add ? x + y : n.kind == OpKind::Sub ? x - y : x * y;
    }
    break;
  }
  case OpKind::MatMul: {
    const auto& a = in(0);
    const auto& b = in(1);
    const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
    out = Tensor::zeros(n.shape);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t t = 0; t < k; ++t) {
        const double av = a[r * k + t];
        if (av == 0.0) continue;
        for (std::size_t c = 0; c < p; ++c) out[r * p + c] += av * b[t * p + c];
      }
    }
    break;
  }
  case OpKind::Neg:
  case OpKind::Relu:
  case OpKind::MaxConst:
  case OpKind::Exp:
  case OpKind::Log:
  case OpKind::Square:
  case OpKind::Sqrt:
  case OpKind::Abs:
  case OpKind::Scale: {
    const auto& a = in(0);
    out = Tensor::zeros(n.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double x = a[i];
      double y = 0.0;
      switch (n.kind) {
      case OpKind::Neg: y = -x; break;
      case OpKind::Relu: y = x > 0.0 ? x : 0.0; break;
      case OpKind::MaxConst: y = x > n.param ? x : n.param; break;
      case OpKind::Exp: y = std::exp(x); break;
      case OpKind::Log: y = std::log(x); break;
      case OpKind::Square: y = x * x; break;
      case OpKind::Sqrt: y = std::sqrt(x); break;
      case OpKind::Abs: y = std::fabs(x); break;
      case OpKind::Scale: y = n.param * x; break;
      default: break;
      }
      out[i] = y;
    }
    break;
  }
  case OpKind::Sum:
  case OpKind::Mean: {
    const auto& a = in(0);
    double s = 0.0;
    for (double x : a.data()) s += x;
    if (n.kind == OpKind::Mean) s /= static_cast<double>(a.size());
    out = Tensor::scalar(s);
    break;
  }
  case OpKind::SumRows: {
    const auto& a = in(0);
    out = Tensor::zeros(n.shape);
    for (std::size_t r = 0; r < a.shape()[0]; ++r) {
      double s = 0.0;
      for (double x : a.row(r)) s += x;
      out[r] = s;
    }
    break;
  }
  case OpKind::Softmax: {
    const auto& a = in(0);
    out = Tensor::zeros(n.shape);
    const std::size_t cols = a.shape().back();
    const std::size_t rows = a.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* x = a.data().data() + r * cols;
      double* y = out.data().data() + r * cols;
      const double peak = *std::max_element(x, x + cols);
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        y[c] = std::exp(x[c] - peak);
        total += y[c];
      }
      for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
    }
    break;
  }
  case OpKind::Concat: {
    std::vector<double> data;
    data.reserve(shape_size(n.shape));
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const auto& part = in(k);
      data.insert(data.end(), part.data().begin(), part.data().end());
    }
    out = Tensor(n.shape, std::move(data));
    break;
  }
  case OpKind::Gather: {
    const auto& a = in(0);
    out = Tensor::zeros(n.shape);
    for (std::size_t k = 0; k < n.indices.size(); ++k) out[k] = a[n.indices[k]];
    break;
  }
  case OpKind::GatherRows: {
    const auto& a = in(0);
    const std::size_t cols = a.shape()[1];
    out = Tensor::zeros(n.shape);
    for (std::size_t k = 0; k < n.indices.size(); ++k) {
      std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(n.indices[k] * cols), cols,
                  out.data().begin() + static_cast<std::ptrdiff_t>(k * cols));
    }
    break;
  }
  case OpKind::Reshape:
    out = Tensor(n.shape, in(0).values());
    break;
  }

  if (!out.all_finite()) throw NumericError(describe(id) + " produced a non-finite value");
}

Gradients Graph::backward(NodeId loss) {
  const auto& ln = node(loss);
  if (shape_size(ln.shape) != 1) {
    throw ContractError("backward requires a scalar loss, " + describe(loss) + " has shape " +
                        shape_to_string(ln.shape));
  }
  if (loss.index >= evaluated_) throw ContractError("backward before eval of " + describe(loss));

  for (std::size_t i = 0; i <= loss.index; ++i) nodes_[i].grad = Tensor::zeros(nodes_[i].shape);
  nodes_[loss.index].grad[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) propagate(i);

  Gradients grads;
  for (std::size_t i = 0; i <= loss.index; ++i) {
    if (nodes_[i].kind == OpKind::Leaf) grads.emplace(NodeId{i}, nodes_[i].grad);
  }
  return grads;
}

void Graph::propagate(std::size_t index) {
  auto& n = nodes_[index];
  if (n.inputs.empty()) return;
  const Tensor& g = n.grad;
  const Tensor& y = n.value;
  auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };
  auto in_grad = [&](std::size_t k) -> Tensor& { return nodes_[n.inputs[k].index].grad; };

  switch (n.kind) {
  case OpKind::Leaf:
  case OpKind::Constant:
    break;
  case OpKind::Add:
  case OpKind::Sub:
  case OpKind::Mul: {
    const auto& a = in_value(0);
    const auto& b = in_value(1);
    auto& ga = in_grad(0);
    auto& gb = in_grad(1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (n.kind == OpKind::Mul) {
        accumulate_bcast(ga, i, g[i] * bcast(b, i));
        accumulate_bcast(gb, i, g[i] * bcast(a, i));
      } else {
        accumulate_bcast(ga, i, g[i]);
        accumulate_bcast(gb, i, n.kind == OpKind::Add ? g[i] : -g[i]);
      }
    }
    break;
  }
  case OpKind::MatMul: {
    const auto& a = in_value(0);
    const auto& b = in_value(1);
    auto& ga = in_grad(0);
    auto& gb = in_grad(1);
    const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t t = 0; t < k; ++t) {
        double acc = 0.0;
        const double av = a[r * k + t];
        for (std::size_t c = 0; c < p; ++c) {
          const double gv = g[r * p + c];
          acc += gv * b[t * p + c];
          gb[t * p + c] += av * gv;
        }
        ga[r * k + t] += acc;
      }
    }
    break;
  }
  case OpKind::Neg: {
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
    break;
  }
  case OpKind::Relu:
  case OpKind::MaxConst: {
    const auto& a = in_value(0);
    auto& ga = in_grad(0);
    const double floor = n.kind == OpKind::Relu ? 0.0 : n.param;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a[i] > floor) ga[i] += g[i];
    }
    break;
  }
  case OpKind::Exp: {
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    break;
  }
  case OpKind::Log: {
    const auto& a = in_value(0);
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a[i];
    break;
  }
  case OpKind::Square: {
    const auto& a = in_value(0);
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * a[i] * g[i];
    break;
  }
  case OpKind::Sqrt: {
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) ga[i] += g[i] / (2.0 * y[i]);
    }
    break;
  }
  case OpKind::Abs: {
    const auto& a = in_value(0);
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a[i] > 0.0) {
        ga[i] += g[i];
      } else if (a[i] < 0.0) {
        ga[i] -= g[i];
      }
    }
    break;
  }
  case OpKind::Scale: {
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.param * g[i];
    break;
  }
  case OpKind::Sum:
  case OpKind::Mean: {
    auto& ga = in_grad(0);
    const double share = n.kind == OpKind::Mean ? g[0] / static_cast<double>(ga.size()) : g[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += share;
    break;
  }
  case OpKind::SumRows: {
    auto& ga = in_grad(0);
    const std::size_t cols = ga.shape()[1];
    for (std::size_t r = 0; r < g.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r];
    }
    break;
  }
  case OpKind::Softmax: {
    auto& ga = in_grad(0);
    const std::size_t cols = y.shape().back();
    const std::size_t rows = y.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
    }
    break;
  }
  case OpKind::Concat: {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      auto& gk = in_grad(k);
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += g[offset + i];
      offset += gk.size();
    }
    break;
  }
  case OpKind::Gather: {
    auto& ga = in_grad(0);
    for (std::size_t k = 0; k < n.indices.size(); ++k) ga[n.indices[k]] += g[k];
    break;
  }
  case OpKind::GatherRows: {
    auto& ga = in_grad(0);
    const std::size_t cols = ga.shape()[1];
    for (std::size_t k = 0; k < n.indices.size(); ++k) {
      for (std::size_t c = 0; c < cols; ++c) ga[n.indices[k] * cols + c] += g[k * cols + c];
    }
    break;
  }
  case OpKind::Reshape: {
    auto& ga = in_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    break;
  }
  }
}

} // namespace crl

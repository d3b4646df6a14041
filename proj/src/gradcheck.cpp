#include "crl/gradcheck.hpp"

#include "crl/error.hpp"

#include <algorithm>
#include <cmath>

namespace crl {

double check_gradient(const LossBuilder& builder, const Tensor& point, double step) {
  if (!(step > 0.0 && step <= 1e-3)) throw ContractError("gradient check step must lie in (0, 1e-3]");

  Graph graph;
  const NodeId input = graph.leaf(point.shape(), "x");
  const NodeId loss = builder(graph, input);
  const double base = graph.eval(loss, {{input, point}}).item();

  Graph replica;
  const NodeId replica_input = replica.leaf(point.shape(), "x");
  const NodeId replica_loss = builder(replica, replica_input);
  if (replica.eval(replica_loss, {{replica_input, point}}).item() != base) {
    throw ContractError("loss builder is not deterministic");
  }

  const Tensor analytic = graph.backward(loss).at(input);

  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    const double up = graph.eval(loss, {{input, probe}}).item();
    probe[i] = point[i] - step;
    const double down = graph.eval(loss, {{input, probe}}).item();
    probe[i] = point[i];
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(numeric)));
  }
  graph.eval(loss, {{input, point}});
  return worst;
}

} // namespace crl

#pragma once

#include "crl/autodiff.hpp"

#include <functional>

namespace crl {

/// Builds a scalar loss on `graph` as a function of the leaf `input`.
using LossBuilder = std::function<NodeId(Graph& graph, NodeId input)>;

/// Max over coordinates of |analytic - central difference| / max(1, |central difference|).
///
/// The builder is invoked twice on fresh graphs; differing loss values at
/// `point` are reported as a ContractError (non-deterministic builder).
double check_gradient(const LossBuilder& builder, const Tensor& point, double step = 1e-5);

} // namespace crl

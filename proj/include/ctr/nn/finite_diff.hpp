#ifndef CTR_NN_FINITE_DIFF_HPP_
#define CTR_NN_FINITE_DIFF_HPP_

#include <functional>
#include <span>
#include <vector>

#include "ctr/nn/mlp.hpp"

namespace ctr::nn {

// Central finite differences of a deterministic scalar loss with respect to
// every parameter scalar reachable through `params`. Each parameter is
// perturbed in place and restored, so the loss closure sees the live values.
// Returned layout matches the flattened concatenation of the views.
std::vector<double> finite_difference_gradients(
    const std::function<double()>& loss_fn, std::span<TensorView> params,
    double h);

// Convenience for comparing against analytic gradients: flattens the given
// gradient views in the same order.
std::vector<double> flatten_views(std::span<const ConstTensorView> views);

// Largest relative error max(|a-b| / max(|a|, |b|, floor)).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace ctr::nn

#endif  // CTR_NN_FINITE_DIFF_HPP_

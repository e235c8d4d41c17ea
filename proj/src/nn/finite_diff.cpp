#include "ctr/nn/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "ctr/errors.hpp"

namespace ctr::nn {

std::vector<double> finite_difference_gradients(
    const std::function<double()>& loss_fn, std::span<TensorView> params,
    double h) {
  if (h <= 0.0) throw ContractError("finite_difference_gradients: h must be > 0");
  std::vector<double> grads;
  for (TensorView& view : params) {
    for (size_t i = 0; i < view.size; ++i) {
      const double saved = view.data[i];
      view.data[i] = saved + h;
      const double up = loss_fn();
      view.data[i] = saved - h;
      const double down = loss_fn();
      view.data[i] = saved;
      grads.push_back((up - down) / (2.0 * h));
    }
  }
  return grads;
}

std::vector<double> flatten_views(std::span<const ConstTensorView> views) {
  std::vector<double> flat;
  for (const ConstTensorView& v : views) {
    flat.insert(flat.end(), v.data, v.data + v.size);
  }
  return flat;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor) {
  if (a.size() != b.size()) {
    throw ShapeError("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace ctr::nn

#include "ctr/nn/adam.hpp"

#include <cmath>

#include "ctr/errors.hpp"

namespace ctr::nn {

void adam_update(std::span<TensorView> params,
                 std::span<const ConstTensorView> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_update: parameter/gradient tensor counts differ");
  }
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t t = 0; t < params.size(); ++t) {
      state.m[t].assign(params[t].size, 0.0);
      state.v[t].assign(params[t].size, 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_update: state does not match parameter layout");
  }
  for (size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size || state.m[t].size() != params[t].size) {
      throw ShapeError("adam_update: tensor size mismatch");
    }
    for (size_t i = 0; i < grads[t].size; ++i) {
      if (!std::isfinite(grads[t].data[i])) {
        throw NumericError("adam_update: non-finite gradient, update refused");
      }
    }
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (size_t t = 0; t < params.size(); ++t) {
    double* p = params[t].data;
    const double* g = grads[t].data;
    std::vector<double>& m = state.m[t];
    std::vector<double>& v = state.v[t];
    for (size_t i = 0; i < params[t].size; ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace ctr::nn

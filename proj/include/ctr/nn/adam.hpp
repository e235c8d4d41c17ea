#ifndef CTR_NN_ADAM_HPP_
#define CTR_NN_ADAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ctr/nn/mlp.hpp"

namespace ctr::nn {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Standard Adam with bias-corrected moments. The moment slots are allocated
// on first use and must keep matching the parameter layout afterwards. A
// non-finite gradient refuses the whole update (no partial state mutation).
void adam_update(std::span<TensorView> params,
                 std::span<const ConstTensorView> grads, AdamState& state);

}  // namespace ctr::nn

#endif  // CTR_NN_ADAM_HPP_

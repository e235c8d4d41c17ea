#ifndef CTR_NN_MLP_HPP_
#define CTR_NN_MLP_HPP_

#include <span>
#include <vector>

#include "ctr/nn/layers.hpp"
#include "ctr/nn/matrix.hpp"
#include "ctr/rng.hpp"

namespace ctr::nn {

enum class OutputHead {
  kSigmoid,  // scalar probability per row
  kSoftmax,  // distribution over output_dim classes
  kLinear,   // raw logits
};

struct MlpConfig {
  std::vector<int> layer_sizes{256, 256, 128};  // hidden widths
  double leaky_relu_slope = 0.01;
  bool use_batch_norm = true;
  int output_dim = 1;
  OutputHead head = OutputHead::kSigmoid;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;

  void validate() const;
};

// Hidden stack of [dense -> (batch norm) -> leaky relu] plus a dense output
// layer feeding the configured head.
struct Mlp {
  MlpConfig config;
  size_t input_dim = 0;
  std::vector<DenseParams> dense;     // hidden layers then output layer
  std::vector<BatchNormParams> bn;    // one per hidden layer when enabled

  size_t num_layers() const { return dense.size(); }
};

Mlp mlp_init(size_t input_dim, const MlpConfig& config, Rng& rng);

struct MlpCache {
  bool training = false;
  size_t batch = 0;
  size_t input_dim = 0;
  size_t num_layers = 0;
  Matrix input;
  std::vector<Matrix> layer_in;       // input to each dense layer
  std::vector<Matrix> pre_bn;         // dense output per hidden layer
  std::vector<Matrix> pre_act;        // after bn (or == pre_bn), before relu
  std::vector<BatchNormCache> bn;
  Matrix logits;
  Matrix output;                      // after the head
};

// Returns the head output (B x output_dim; sigmoid head gives B x 1
// probabilities in (0,1)). Training mode uses batch statistics in batch norm
// and advances the moving averages. The cache captures everything needed for
// an exact backward pass.
Matrix mlp_forward(Mlp& model, const Matrix& batch, bool training,
                   MlpCache* cache = nullptr);

// Eval-mode convenience that leaves the model untouched.
Matrix mlp_predict(const Mlp& model, const Matrix& batch);

struct MlpGradients {
  std::vector<DenseGrads> dense;
  std::vector<BatchNormGrads> bn;
  Matrix d_input;
};

// Backward for the sigmoid head. `dloss_dpred` holds per-sample dL/df where f
// is the predicted probability; `weights` are per-sample importance weights
// applied as constants (no gradient flows through them). Empty weights mean 1.
MlpGradients mlp_backward(const Mlp& model, const MlpCache& cache,
                          std::span<const double> dloss_dpred,
                          std::span<const double> weights = {});

// Backward from raw logit gradients (any head).
MlpGradients mlp_backward_logits(const Mlp& model, const MlpCache& cache,
                                 const Matrix& dloss_dlogits);

struct TensorView {
  double* data = nullptr;
  size_t size = 0;
};

struct ConstTensorView {
  const double* data = nullptr;
  size_t size = 0;
};

// Trainable parameters in a stable order (dense weights/biases, then batch
// norm scales/shifts). Moving moments are excluded: they are state, not
// optimized parameters.
std::vector<TensorView> mlp_parameter_views(Mlp& model);
std::vector<ConstTensorView> mlp_gradient_views(const MlpGradients& grads);

}  // namespace ctr::nn

#endif  // CTR_NN_MLP_HPP_

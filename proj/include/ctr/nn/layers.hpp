#ifndef CTR_NN_LAYERS_HPP_
#define CTR_NN_LAYERS_HPP_

#include <cmath>
#include <vector>

#include "ctr/nn/matrix.hpp"
#include "ctr/rng.hpp"

namespace ctr::nn {

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kPredictionClampLo = 1e-7;
constexpr double kPredictionClampHi = 1.0 - 1e-7;

inline double clamp_prediction(double f) {
  if (f < kPredictionClampLo) return kPredictionClampLo;
  if (f > kPredictionClampHi) return kPredictionClampHi;
  return f;
}

struct DenseParams {
  Matrix w;                // input_dim x output_dim
  std::vector<double> b;   // output_dim

  size_t input_dim() const { return w.rows(); }
  size_t output_dim() const { return w.cols(); }
};

struct DenseGrads {
  Matrix w;
  std::vector<double> b;
};

// He-style scaled normal init for ReLU-family activations.
DenseParams dense_init(size_t input_dim, size_t output_dim, Rng& rng);

// out = in * W + b.
Matrix dense_forward(const Matrix& in, const DenseParams& layer);

// Accumulates parameter gradients into `grads` (must be pre-shaped or empty)
// and writes the input gradient into `din` when non-null.
void dense_backward(const Matrix& in, const DenseParams& layer,
                    const Matrix& dout, DenseGrads* grads, Matrix* din);

Matrix leaky_relu_forward(const Matrix& z, double slope);
Matrix leaky_relu_backward(const Matrix& z_pre, const Matrix& dout,
                           double slope);

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> moving_mean;
  std::vector<double> moving_var;
  double eps = 1e-5;
  double momentum = 0.99;
};

BatchNormParams batch_norm_init(size_t dim);

struct BatchNormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

// Training mode standardizes by batch moments (batch size >= 2 required) and
// updates the moving averages; eval mode uses the moving averages and leaves
// them untouched.
Matrix batch_norm_forward(const Matrix& z, BatchNormParams& params,
                          bool training, BatchNormCache* cache = nullptr);

struct BatchNormGrads {
  std::vector<double> gamma;
  std::vector<double> beta;
};

// Backward through training-mode batch statistics.
void batch_norm_backward(const BatchNormCache& cache,
                         const BatchNormParams& params, const Matrix& dout,
                         BatchNormGrads* grads, Matrix* din);

// Row-wise softmax of logits.
Matrix softmax_rows(const Matrix& logits);

}  // namespace ctr::nn

#endif  // CTR_NN_LAYERS_HPP_

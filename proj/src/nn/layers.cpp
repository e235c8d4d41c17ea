#include "ctr/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace ctr::nn {

DenseParams dense_init(size_t input_dim, size_t output_dim, Rng& rng) {
  DenseParams p;
  p.w = Matrix(input_dim, output_dim);
  p.b.assign(output_dim, 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(input_dim));
  for (size_t i = 0; i < p.w.size(); ++i) {
    p.w.data()[i] = scale * rng.normal();
  }
  return p;
}

Matrix dense_forward(const Matrix& in, const DenseParams& layer) {
  if (in.cols() != layer.input_dim()) {
    throw ShapeError("dense_forward: input width does not match layer");
  }
  Matrix out = matmul(in, layer.w);
  for (size_t i = 0; i < out.rows(); ++i) {
    double* row = out.row(i);
    for (size_t j = 0; j < out.cols(); ++j) row[j] += layer.b[j];
  }
  return out;
}

void dense_backward(const Matrix& in, const DenseParams& layer,
                    const Matrix& dout, DenseGrads* grads, Matrix* din) {
  if (dout.rows() != in.rows() || dout.cols() != layer.output_dim()) {
    throw ShapeError("dense_backward: upstream gradient shape mismatch");
  }
  if (grads != nullptr) {
    if (grads->w.empty()) {
      grads->w = Matrix(layer.w.rows(), layer.w.cols());
      grads->b.assign(layer.b.size(), 0.0);
    }
    Matrix dw = matmul_tn(in, dout);
    for (size_t i = 0; i < dw.size(); ++i) grads->w.data()[i] += dw.data()[i];
    for (size_t i = 0; i < dout.rows(); ++i) {
      const double* row = dout.row(i);
      for (size_t j = 0; j < dout.cols(); ++j) grads->b[j] += row[j];
    }
  }
  if (din != nullptr) {
    *din = matmul_nt(dout, layer.w);
  }
}

Matrix leaky_relu_forward(const Matrix& z, double slope) {
  Matrix out = z;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] < 0.0) out.data()[i] *= slope;
  }
  return out;
}

Matrix leaky_relu_backward(const Matrix& z_pre, const Matrix& dout,
                           double slope) {
  if (!z_pre.same_shape(dout)) {
    throw ShapeError("leaky_relu_backward: shape mismatch");
  }
  Matrix din = dout;
  for (size_t i = 0; i < din.size(); ++i) {
    if (z_pre.data()[i] < 0.0) din.data()[i] *= slope;
  }
  return din;
}

BatchNormParams batch_norm_init(size_t dim) {
  BatchNormParams p;
  p.gamma.assign(dim, 1.0);
  p.beta.assign(dim, 0.0);
  p.moving_mean.assign(dim, 0.0);
  p.moving_var.assign(dim, 1.0);
  return p;
}

Matrix batch_norm_forward(const Matrix& z, BatchNormParams& params,
                          bool training, BatchNormCache* cache) {
  const size_t dim = params.gamma.size();
  if (z.cols() != dim) {
    throw ShapeError("batch_norm_forward: feature width mismatch");
  }
  const size_t n = z.rows();
  Matrix out(n, dim);
  if (training) {
    if (n < 2) {
      throw ContractError("batch_norm_forward: training needs batch size >= 2");
    }
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double* row = z.row(i);
      for (size_t j = 0; j < dim; ++j) mean[j] += row[j];
    }
    for (size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      const double* row = z.row(i);
      for (size_t j = 0; j < dim; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
    for (size_t j = 0; j < dim; ++j) var[j] /= static_cast<double>(n);

    std::vector<double> inv_std(dim);
    for (size_t j = 0; j < dim; ++j) {
      inv_std[j] = 1.0 / std::sqrt(var[j] + params.eps);
    }
    Matrix xhat(n, dim);
    for (size_t i = 0; i < n; ++i) {
      const double* row = z.row(i);
      double* hrow = xhat.row(i);
      double* orow = out.row(i);
      for (size_t j = 0; j < dim; ++j) {
        hrow[j] = (row[j] - mean[j]) * inv_std[j];
        orow[j] = params.gamma[j] * hrow[j] + params.beta[j];
      }
    }
    const double m = params.momentum;
    for (size_t j = 0; j < dim; ++j) {
      params.moving_mean[j] = m * params.moving_mean[j] + (1.0 - m) * mean[j];
      params.moving_var[j] = m * params.moving_var[j] + (1.0 - m) * var[j];
    }
    if (cache != nullptr) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
  } else {
    std::vector<double> inv_std(dim);
    for (size_t j = 0; j < dim; ++j) {
      inv_std[j] = 1.0 / std::sqrt(params.moving_var[j] + params.eps);
    }
    for (size_t i = 0; i < n; ++i) {
      const double* row = z.row(i);
      double* orow = out.row(i);
      for (size_t j = 0; j < dim; ++j) {
        const double xhat = (row[j] - params.moving_mean[j]) * inv_std[j];
        orow[j] = params.gamma[j] * xhat + params.beta[j];
      }
    }
  }
  return out;
}

void batch_norm_backward(const BatchNormCache& cache,
                         const BatchNormParams& params, const Matrix& dout,
                         BatchNormGrads* grads, Matrix* din) {
  const size_t n = cache.xhat.rows();
  const size_t dim = cache.xhat.cols();
  if (dout.rows() != n || dout.cols() != dim) {
    throw ShapeError("batch_norm_backward: shape mismatch");
  }
  std::vector<double> sum_dxhat(dim, 0.0), sum_dxhat_xhat(dim, 0.0);
  Matrix dxhat(n, dim);
  for (size_t i = 0; i < n; ++i) {
    const double* drow = dout.row(i);
    const double* hrow = cache.xhat.row(i);
    double* xrow = dxhat.row(i);
    for (size_t j = 0; j < dim; ++j) {
      xrow[j] = drow[j] * params.gamma[j];
      sum_dxhat[j] += xrow[j];
      sum_dxhat_xhat[j] += xrow[j] * hrow[j];
    }
  }
  if (grads != nullptr) {
    if (grads->gamma.empty()) {
      grads->gamma.assign(dim, 0.0);
      grads->beta.assign(dim, 0.0);
    }
    for (size_t i = 0; i < n; ++i) {
      const double* drow = dout.row(i);
      const double* hrow = cache.xhat.row(i);
      for (size_t j = 0; j < dim; ++j) {
        grads->gamma[j] += drow[j] * hrow[j];
        grads->beta[j] += drow[j];
      }
    }
  }
  if (din != nullptr) {
    *din = Matrix(n, dim);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      const double* xrow = dxhat.row(i);
      const double* hrow = cache.xhat.row(i);
      double* orow = din->row(i);
      for (size_t j = 0; j < dim; ++j) {
        orow[j] = cache.inv_std[j] * inv_n *
                  (static_cast<double>(n) * xrow[j] - sum_dxhat[j] -
                   hrow[j] * sum_dxhat_xhat[j]);
      }
    }
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (size_t i = 0; i < logits.rows(); ++i) {
    const double* row = logits.row(i);
    double* orow = out.row(i);
    double mx = row[0];
    for (size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (size_t j = 0; j < logits.cols(); ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (size_t j = 0; j < logits.cols(); ++j) orow[j] /= sum;
  }
  return out;
}

}  // namespace ctr::nn

#include "ctr/nn/mlp.hpp"

#include <cmath>
#include <string>

namespace ctr::nn {

void MlpConfig::validate() const {
  if (layer_sizes.empty()) {
    throw ContractError("MlpConfig: layer_sizes must be non-empty");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw ContractError("MlpConfig: layer sizes must be positive");
  }
  if (leaky_relu_slope <= 0.0 || leaky_relu_slope >= 1.0) {
    throw ContractError("MlpConfig: leaky_relu_slope must be in (0,1)");
  }
  if (output_dim <= 0) {
    throw ContractError("MlpConfig: output_dim must be positive");
  }
}

Mlp mlp_init(size_t input_dim, const MlpConfig& config, Rng& rng) {
  config.validate();
  Mlp m;
  m.config = config;
  m.input_dim = input_dim;
  size_t in = input_dim;
  for (int width : config.layer_sizes) {
    m.dense.push_back(dense_init(in, static_cast<size_t>(width), rng));
    if (config.use_batch_norm) {
      BatchNormParams bn = batch_norm_init(static_cast<size_t>(width));
      bn.eps = config.bn_eps;
      bn.momentum = config.bn_momentum;
      m.bn.push_back(std::move(bn));
    }
    in = static_cast<size_t>(width);
  }
  m.dense.push_back(dense_init(in, static_cast<size_t>(config.output_dim), rng));
  return m;
}

namespace {

void check_finite(const Matrix& m, const char* where) {
  for (size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      throw NumericError(std::string("non-finite activation in ") + where);
    }
  }
}

Matrix apply_head(const MlpConfig& config, const Matrix& logits) {
  switch (config.head) {
    case OutputHead::kSigmoid: {
      Matrix out = logits;
      for (size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = clamp_prediction(sigmoid(out.data()[i]));
      }
      return out;
    }
    case OutputHead::kSoftmax:
      return softmax_rows(logits);
    case OutputHead::kLinear:
      return logits;
  }
  return logits;
}

}  // namespace

Matrix mlp_forward(Mlp& model, const Matrix& batch, bool training,
                   MlpCache* cache) {
  if (batch.cols() != model.input_dim) {
    throw ShapeError("mlp_forward: batch width != model input dim");
  }
  const size_t hidden = model.config.layer_sizes.size();
  MlpCache local;
  MlpCache& c = cache != nullptr ? *cache : local;
  c = MlpCache{};
  c.training = training;
  c.batch = batch.rows();
  c.input_dim = model.input_dim;
  c.num_layers = model.dense.size();
  c.input = batch;

  Matrix cur = batch;
  for (size_t l = 0; l < hidden; ++l) {
    c.layer_in.push_back(cur);
    Matrix z = dense_forward(cur, model.dense[l]);
    c.pre_bn.push_back(z);
    if (model.config.use_batch_norm) {
      BatchNormCache bc;
      z = batch_norm_forward(z, model.bn[l], training, training ? &bc : nullptr);
      c.bn.push_back(std::move(bc));
    }
    c.pre_act.push_back(z);
    cur = leaky_relu_forward(z, model.config.leaky_relu_slope);
  }
  c.layer_in.push_back(cur);
  c.logits = dense_forward(cur, model.dense[hidden]);
  check_finite(c.logits, "mlp output logits");
  c.output = apply_head(model.config, c.logits);
  return c.output;
}

Matrix mlp_predict(const Mlp& model, const Matrix& batch) {
  Mlp& mutable_model = const_cast<Mlp&>(model);
  return mlp_forward(mutable_model, batch, /*training=*/false);
}

namespace {

void check_cache(const Mlp& model, const MlpCache& cache) {
  if (cache.num_layers != model.dense.size() ||
      cache.input_dim != model.input_dim || cache.layer_in.empty()) {
    throw ContractError("mlp_backward: cache does not match this model");
  }
}

}  // namespace

MlpGradients mlp_backward(const Mlp& model, const MlpCache& cache,
                          std::span<const double> dloss_dpred,
                          std::span<const double> weights) {
  check_cache(model, cache);
  if (model.config.head != OutputHead::kSigmoid || model.config.output_dim != 1) {
    throw ContractError("mlp_backward: expects the scalar sigmoid head");
  }
  if (dloss_dpred.size() != cache.batch) {
    throw ShapeError("mlp_backward: upstream gradient count != batch size");
  }
  if (!weights.empty() && weights.size() != cache.batch) {
    throw ShapeError("mlp_backward: weight count != batch size");
  }
  Matrix dlogits(cache.batch, 1);
  for (size_t i = 0; i < cache.batch; ++i) {
    const double f = cache.output.at(i, 0);
    const double w = weights.empty() ? 1.0 : weights[i];
    dlogits.at(i, 0) = w * dloss_dpred[i] * f * (1.0 - f);
  }
  return mlp_backward_logits(model, cache, dlogits);
}

MlpGradients mlp_backward_logits(const Mlp& model, const MlpCache& cache,
                                 const Matrix& dloss_dlogits) {
  check_cache(model, cache);
  if (dloss_dlogits.rows() != cache.batch ||
      dloss_dlogits.cols() != static_cast<size_t>(model.config.output_dim)) {
    throw ShapeError("mlp_backward_logits: gradient shape mismatch");
  }
  const size_t hidden = model.config.layer_sizes.size();
  MlpGradients g;
  g.dense.resize(model.dense.size());
  if (model.config.use_batch_norm) g.bn.resize(hidden);

  Matrix dcur;
  dense_backward(cache.layer_in[hidden], model.dense[hidden], dloss_dlogits,
                 &g.dense[hidden], &dcur);
  for (size_t l = hidden; l-- > 0;) {
    Matrix dz = leaky_relu_backward(cache.pre_act[l], dcur,
                                    model.config.leaky_relu_slope);
    if (model.config.use_batch_norm) {
      if (!cache.training) {
        throw ContractError(
            "mlp_backward: eval-mode caches cannot drive batch-norm backward");
      }
      Matrix dpre;
      batch_norm_backward(cache.bn[l], model.bn[l], dz, &g.bn[l], &dpre);
      dz = std::move(dpre);
    }
    dense_backward(cache.layer_in[l], model.dense[l], dz, &g.dense[l], &dcur);
  }
  g.d_input = std::move(dcur);
  return g;
}

std::vector<TensorView> mlp_parameter_views(Mlp& model) {
  std::vector<TensorView> views;
  for (DenseParams& d : model.dense) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  for (BatchNormParams& bn : model.bn) {
    views.push_back({bn.gamma.data(), bn.gamma.size()});
    views.push_back({bn.beta.data(), bn.beta.size()});
  }
  return views;
}

std::vector<ConstTensorView> mlp_gradient_views(const MlpGradients& grads) {
  std::vector<ConstTensorView> views;
  for (const DenseGrads& d : grads.dense) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  for (const BatchNormGrads& bn : grads.bn) {
    views.push_back({bn.gamma.data(), bn.gamma.size()});
    views.push_back({bn.beta.data(), bn.beta.size()});
  }
  return views;
}

}  // namespace ctr::nn

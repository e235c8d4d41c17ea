#ifndef CTR_STAR_MODEL_HPP_
#define CTR_STAR_MODEL_HPP_

#include <span>
#include <vector>

#include "ctr/nn/embedding.hpp"
#include "ctr/nn/mlp.hpp"
#include "ctr/star/pn.hpp"

namespace ctr::star {

using nn::FeatureVec;

// Shared centered FCN plus one same-shaped FCN per domain; the effective
// layer for domain p is W*_p = W_p (*) W (element-wise), b*_p = b_p + b.
struct StarFcnParams {
  std::vector<nn::DenseParams> shared;
  std::vector<std::vector<nn::DenseParams>> per_domain;  // [domain][layer]

  size_t num_layers() const { return shared.size(); }
  int num_domains() const { return static_cast<int>(per_domain.size()); }
};

// Fused weights for one layer of one domain.
nn::DenseParams star_fuse_layer(const StarFcnParams& fcn, int domain,
                                size_t layer);

// out = phi((W*_p)^T in + b*_p); the last layer is linear (scalar logit).
nn::Matrix star_layer_forward(const nn::Matrix& in, int domain,
                              const StarFcnParams& fcn, size_t layer,
                              double slope);

struct AuxNetParams {
  nn::Matrix domain_embedding;  // domains x embed dim
  nn::DenseParams l1;           // concat(domain embed, features) -> hidden
  nn::DenseParams l2;           // hidden -> scalar logit s_a
  double slope = 0.01;
};

struct StarModelConfig {
  int num_domains = 1;
  nn::EmbeddingConfig embeddings;
  std::vector<int> hidden_sizes{256, 256, 128};
  double leaky_relu_slope = 0.01;
  bool use_aux_net = true;
  int aux_embed_dim = 8;
  int aux_hidden = 32;
  double pn_eps = 1e-5;
  double pn_momentum = 0.99;
  bool strict_pn_eval = false;
};

// Embeddings (shared across domains) -> partitioned normalization -> star
// FCN -> logit s_m; auxiliary net -> logit s_a; prediction = sigmoid(s_m+s_a).
struct StarModel {
  StarModelConfig config;
  nn::EmbeddingSet embeddings;
  PnParams pn;
  StarFcnParams fcn;
  AuxNetParams aux;
};

// Domain-specific parameters start at identity (W_p = 1, b_p = 0), so the
// initial model coincides with the pure shared FCN for every domain.
StarModel star_init(const StarModelConfig& config, Rng& rng);

// Eval-mode prediction for one sample.
double star_predict(StarModel& model, const FeatureVec& x, int domain);

// Eval-mode predictions for a single-domain batch.
std::vector<double> star_predict_batch(StarModel& model,
                                       std::span<const FeatureVec> xs,
                                       int domain);

struct StarGradients {
  nn::EmbeddingGrads embeddings;
  PnGrads pn;
  std::vector<nn::DenseGrads> shared;
  std::vector<std::vector<nn::DenseGrads>> per_domain;
  nn::Matrix aux_domain_embedding;
  nn::DenseGrads aux_l1, aux_l2;
};

struct StarForwardCache;

// Training forward for a batch from one domain (PN uses batch moments and
// updates that domain's moving moments). Returns per-sample predictions.
std::vector<double> star_forward_train(StarModel& model,
                                       std::span<const FeatureVec> xs,
                                       int domain, StarForwardCache& cache);

// Backward with per-sample dL/df and constant importance weights; gradients
// accumulate into `grads` (zero-initialized on first use).
void star_backward(const StarModel& model, const StarForwardCache& cache,
                   std::span<const double> dloss_df,
                   std::span<const double> weights, StarGradients* grads);

struct StarSample {
  FeatureVec features;
  int domain = 1;
  int label = 0;
};

struct StarLossResult {
  double loss = 0.0;
  std::vector<double> predictions;  // in input order
  StarGradients grads;
};

// Multi-domain cross-entropy: groups the batch by domain, runs training-mode
// forwards, and sums -[y log f + (1-y) log(1-f)] over all samples. Gradients
// flow to shared, per-domain, PN, auxiliary and embedding parameters.
StarLossResult star_loss(StarModel& model, std::span<const StarSample> batch);

int64_t star_fcn_parameter_count(const StarFcnParams& fcn);

std::vector<nn::TensorView> star_parameter_views(StarModel& model);
std::vector<nn::ConstTensorView> star_gradient_views(const StarGradients& g);

// Exposed so the cache can be owned by callers (definition in model.cpp).
struct StarForwardCache {
  int domain = 0;
  size_t batch = 0;
  std::vector<FeatureVec> xs;
  nn::Matrix embedded;
  PnCache pn;
  nn::Matrix pn_out;
  std::vector<nn::Matrix> layer_in;
  std::vector<nn::Matrix> pre_act;
  nn::Matrix main_logit;       // s_m
  // Auxiliary net intermediates.
  nn::Matrix aux_in;
  nn::Matrix aux_pre_act;
  nn::Matrix aux_hidden;
  nn::Matrix aux_logit;        // s_a
  std::vector<double> predictions;
};

}  // namespace ctr::star

#endif  // CTR_STAR_MODEL_HPP_

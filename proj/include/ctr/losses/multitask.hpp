#ifndef CTR_LOSSES_MULTITASK_HPP_
#define CTR_LOSSES_MULTITASK_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ctr/nn/embedding.hpp"
#include "ctr/nn/mlp.hpp"
#include "ctr/stream/events.hpp"

namespace ctr::losses {

struct MultiTaskConfig {
  std::vector<int64_t> windows;  // w_1..w_N seconds, strictly increasing
  int embed_dim = 8;
  std::vector<int> hidden{32, 16};
  double leaky_relu_slope = 0.01;

  size_t num_windows() const { return windows.size(); }
};

// Shared bottom with N+1 single-logit heads: one for p(y=1|x) and one per
// window for the conditional p(z<w_n | y=1, x). Joint window probabilities
// are the product p(z<w_n|y=1,x) * p(y=1|x).
struct MultiTaskModel {
  MultiTaskConfig config;
  nn::EmbeddingSet embeddings;
  std::vector<nn::DenseParams> trunk;
  nn::DenseParams cvr_head;
  std::vector<nn::DenseParams> window_heads;
};

MultiTaskModel multitask_init(const MultiTaskConfig& config,
                              const nn::EmbeddingConfig& features, Rng& rng);

struct MultiTaskLabels {
  int y = 0;
  std::vector<int> window;  // y_n: conversion within w_n
};

struct MultiTaskMask {
  bool y_observable = false;
  std::vector<bool> window_observable;
};

struct MultiTaskOutput {
  double p_cvr = 0.0;
  std::vector<double> p_conditional;
  std::vector<double> p_joint;
};

MultiTaskOutput multitask_predict(const MultiTaskModel& model,
                                  const stream::FeatureVec& x);

struct MultiTaskGradients {
  nn::EmbeddingGrads embeddings;
  std::vector<nn::DenseGrads> trunk;
  nn::DenseGrads cvr_head;
  std::vector<nn::DenseGrads> window_heads;
};

struct MultiTaskLossResult {
  double loss = 0.0;
  MultiTaskGradients grads;
};

// Sum of log losses over observable heads only. Masked heads contribute
// neither loss nor gradient; the CVR head still receives gradient through
// every observable joint head.
MultiTaskLossResult offline_multitask_loss(
    const MultiTaskModel& model, std::span<const stream::FeatureVec> xs,
    std::span<const MultiTaskLabels> labels,
    std::span<const MultiTaskMask> masks);

// Observability at `data_end_ts`: window head n needs the window to have
// elapsed; the eventual label needs the attribution window to have elapsed or
// the conversion to have already been observed.
MultiTaskMask multitask_mask(const stream::ClickEvent& event,
                             std::span<const int64_t> windows,
                             int64_t attribution_window, int64_t data_end_ts);

MultiTaskLabels multitask_labels(const stream::ClickEvent& event,
                                 std::span<const int64_t> windows,
                                 int64_t attribution_window);

std::vector<nn::TensorView> multitask_parameter_views(MultiTaskModel& model);
std::vector<nn::ConstTensorView> multitask_gradient_views(
    const MultiTaskGradients& grads);

}  // namespace ctr::losses

#endif  // CTR_LOSSES_MULTITASK_HPP_

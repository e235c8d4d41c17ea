#include "ctr/losses/dp_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctr/errors.hpp"
#include "ctr/stream/build.hpp"

namespace ctr::losses {

double DpModel::predict(const stream::FeatureVec& x) const {
  if (degenerate) return constant_prob;
  std::vector<stream::FeatureVec> batch{x};
  nn::Matrix embedded = nn::embedding_forward(embeddings, batch);
  nn::Matrix out = nn::mlp_predict(net, embedded);
  return out.at(0, 0);
}

std::vector<double> DpModel::predict_batch(
    std::span<const stream::FeatureVec> xs) const {
  if (degenerate) return std::vector<double>(xs.size(), constant_prob);
  if (xs.empty()) return {};
  nn::Matrix embedded = nn::embedding_forward(embeddings, xs);
  nn::Matrix out = nn::mlp_predict(net, embedded);
  std::vector<double> probs(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) probs[i] = out.at(i, 0);
  return probs;
}

DpTrainer::DpTrainer(const nn::EmbeddingConfig& features,
                     const DpModelConfig& config, Rng& rng) {
  model_.config = config;
  model_.embeddings = nn::embedding_init(features, rng);
  nn::MlpConfig mlp_cfg;
  mlp_cfg.layer_sizes = config.hidden;
  mlp_cfg.use_batch_norm = false;
  model_.net = nn::mlp_init(model_.embeddings.output_dim(), mlp_cfg, rng);
  if (config.prior) {
    const double p = std::min(std::max(*config.prior, 1e-6), 1.0 - 1e-6);
    model_.net.dense.back().b[0] = std::log(p / (1.0 - p));
  }
  adam_.config.lr = config.lr;
}

void DpTrainer::update(std::span<const stream::FeatureVec> xs,
                       std::span<const int> is_fake) {
  if (xs.size() != is_fake.size()) {
    throw ShapeError("DpTrainer::update: feature/label count mismatch");
  }
  if (xs.empty()) return;
  nn::Matrix embedded = nn::embedding_forward(model_.embeddings, xs);
  nn::MlpCache cache;
  nn::Matrix probs = nn::mlp_forward(model_.net, embedded, true, &cache);
  std::vector<double> dloss(xs.size());
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = nn::clamp_prediction(probs.at(i, 0));
    dloss[i] = (is_fake[i] == 1 ? -1.0 / f : 1.0 / (1.0 - f)) * inv_n;
  }
  nn::MlpGradients grads = nn::mlp_backward(model_.net, cache, dloss);
  nn::EmbeddingGrads egrads;
  nn::embedding_backward(model_.embeddings, xs, grads.d_input, &egrads);

  std::vector<nn::TensorView> params = nn::mlp_parameter_views(model_.net);
  std::vector<nn::ConstTensorView> gviews = nn::mlp_gradient_views(grads);
  for (size_t f = 0; f < model_.embeddings.tables.size(); ++f) {
    params.push_back({model_.embeddings.tables[f].data(),
                      model_.embeddings.tables[f].size()});
    gviews.push_back({egrads.tables[f].data(), egrads.tables[f].size()});
  }
  nn::adam_update(params, gviews, adam_);
}

DpModel train_dp_classifier(std::span<const stream::ClickEvent> events,
                            const stream::WindowConfig& windows,
                            const nn::EmbeddingConfig& features,
                            const DpModelConfig& config, Rng& rng) {
  windows.validate();
  if (events.empty()) {
    throw ContractError("train_dp_classifier: no events");
  }
  std::vector<int> targets(events.size());
  int64_t fakes = 0;
  for (size_t i = 0; i < events.size(); ++i) {
    targets[i] = stream::classify_sample(events[i], windows) ==
                         stream::SampleKind::kFakeNegative
                     ? 1
                     : 0;
    fakes += targets[i];
  }
  if (fakes == 0 || fakes == static_cast<int64_t>(events.size())) {
    // One-class supervision cannot be fit; fall back to the class frequency.
    DpModel model;
    model.config = config;
    model.degenerate = true;
    model.constant_prob = nn::clamp_prediction(
        static_cast<double>(fakes) / static_cast<double>(events.size()));
    return model;
  }

  DpTrainer trainer(features, config, rng);
  std::vector<size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(config.batch_size));
      std::vector<stream::FeatureVec> xs;
      std::vector<int> ys;
      xs.reserve(end - start);
      ys.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        xs.push_back(events[order[i]].features);
        ys.push_back(targets[order[i]]);
      }
      trainer.update(xs, ys);
    }
  }
  return std::move(trainer.model());
}

}  // namespace ctr::losses

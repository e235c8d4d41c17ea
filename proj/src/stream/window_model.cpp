#include "ctr/stream/window_model.hpp"

#include <algorithm>
#include <numeric>

#include "ctr/errors.hpp"

namespace ctr::stream {

namespace {

int target_class(const ClickEvent& e, std::span<const int64_t> candidates) {
  for (size_t k = 0; k < candidates.size(); ++k) {
    if (e.converts() && e.delay <= candidates[k]) return static_cast<int>(k);
  }
  return 0;
}

}  // namespace

WindowModel train_window_model(std::span<const ClickEvent> events,
                               std::vector<int64_t> candidates,
                               const nn::EmbeddingConfig& features,
                               const WindowModelConfig& config, Rng& rng) {
  if (candidates.empty()) {
    throw ContractError("train_window_model: empty candidate set");
  }
  if (!std::is_sorted(candidates.begin(), candidates.end()) ||
      std::adjacent_find(candidates.begin(), candidates.end()) !=
          candidates.end()) {
    throw ContractError("train_window_model: candidates must be strictly "
                        "increasing");
  }
  WindowModel model;
  model.candidates = std::move(candidates);
  model.embeddings = nn::embedding_init(features, rng);

  nn::MlpConfig mlp_cfg;
  mlp_cfg.layer_sizes = config.hidden;
  mlp_cfg.use_batch_norm = false;
  mlp_cfg.output_dim = static_cast<int>(model.candidates.size());
  mlp_cfg.head = nn::OutputHead::kSoftmax;
  model.net = nn::mlp_init(model.embeddings.output_dim(), mlp_cfg, rng);

  nn::AdamState adam;
  adam.config.lr = config.lr;

  std::vector<size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(config.batch_size));
      const size_t b = end - start;
      if (b == 0) continue;
      std::vector<FeatureVec> xs(b);
      std::vector<int> ys(b);
      for (size_t i = 0; i < b; ++i) {
        const ClickEvent& e = events[order[start + i]];
        xs[i] = e.features;
        ys[i] = target_class(e, model.candidates);
      }
      nn::Matrix embedded = nn::embedding_forward(model.embeddings, xs);
      nn::MlpCache cache;
      nn::Matrix probs = nn::mlp_forward(model.net, embedded, true, &cache);
      // Softmax cross-entropy: dL/dlogit = prob - onehot, averaged.
      nn::Matrix dlogits(b, probs.cols());
      const double inv_b = 1.0 / static_cast<double>(b);
      for (size_t i = 0; i < b; ++i) {
        for (size_t c = 0; c < probs.cols(); ++c) {
          dlogits.at(i, c) = (probs.at(i, c) -
                              (static_cast<int>(c) == ys[i] ? 1.0 : 0.0)) *
                             inv_b;
        }
      }
      nn::MlpGradients grads = nn::mlp_backward_logits(model.net, cache, dlogits);
      nn::EmbeddingGrads egrads;
      nn::embedding_backward(model.embeddings, xs, grads.d_input, &egrads);

      std::vector<nn::TensorView> params = nn::mlp_parameter_views(model.net);
      std::vector<nn::ConstTensorView> gviews = nn::mlp_gradient_views(grads);
      for (size_t f = 0; f < model.embeddings.tables.size(); ++f) {
        params.push_back({model.embeddings.tables[f].data(),
                          model.embeddings.tables[f].size()});
        gviews.push_back({egrads.tables[f].data(), egrads.tables[f].size()});
      }
      nn::adam_update(params, gviews, adam);
    }
  }
  return model;
}

std::vector<double> window_class_probs(const WindowModel& model,
                                       const FeatureVec& x) {
  if (model.candidates.empty()) {
    throw ContractError("window model: empty candidate set");
  }
  std::vector<FeatureVec> batch{x};
  nn::Matrix embedded = nn::embedding_forward(model.embeddings, batch);
  nn::Matrix probs = nn::mlp_predict(model.net, embedded);
  return std::vector<double>(probs.row(0), probs.row(0) + probs.cols());
}

int64_t predict_waiting_window(const WindowModel& model, const FeatureVec& x) {
  const std::vector<double> probs = window_class_probs(model, x);
  size_t best = 0;
  for (size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;  // ties keep the shorter window
  }
  return model.candidates[best];
}

int64_t predict_attribution_window(const WindowModel& model,
                                   const FeatureVec& x,
                                   const WindowConfig& windows) {
  windows.validate();
  for (int64_t c : model.candidates) {
    if (c <= windows.w1 || c >= windows.w2) {
      throw ContractError(
          "predict_attribution_window: candidates must lie inside (w1, w2)");
    }
  }
  return predict_waiting_window(model, x);
}

}  // namespace ctr::stream

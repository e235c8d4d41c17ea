#include "ctr/losses/multitask.hpp"

#include <algorithm>
#include <cmath>

#include "ctr/errors.hpp"
#include "ctr/nn/layers.hpp"

namespace ctr::losses {

MultiTaskModel multitask_init(const MultiTaskConfig& config,
                              const nn::EmbeddingConfig& features, Rng& rng) {
  if (config.windows.empty()) {
    throw ContractError("multitask_init: need at least one window");
  }
  if (!std::is_sorted(config.windows.begin(), config.windows.end())) {
    throw ContractError("multitask_init: windows must be increasing");
  }
  MultiTaskModel m;
  m.config = config;
  m.embeddings = nn::embedding_init(features, rng);
  size_t in = m.embeddings.output_dim();
  for (int width : config.hidden) {
    m.trunk.push_back(nn::dense_init(in, static_cast<size_t>(width), rng));
    in = static_cast<size_t>(width);
  }
  m.cvr_head = nn::dense_init(in, 1, rng);
  for (size_t n = 0; n < config.windows.size(); ++n) {
    m.window_heads.push_back(nn::dense_init(in, 1, rng));
  }
  return m;
}

namespace {

struct TrunkCache {
  std::vector<nn::Matrix> layer_in;
  std::vector<nn::Matrix> pre_act;
  nn::Matrix hidden;
};

nn::Matrix trunk_forward(const MultiTaskModel& model, const nn::Matrix& input,
                         TrunkCache* cache) {
  nn::Matrix cur = input;
  for (const nn::DenseParams& layer : model.trunk) {
    if (cache != nullptr) cache->layer_in.push_back(cur);
    nn::Matrix z = nn::dense_forward(cur, layer);
    if (cache != nullptr) cache->pre_act.push_back(z);
    cur = nn::leaky_relu_forward(z, model.config.leaky_relu_slope);
  }
  if (cache != nullptr) cache->hidden = cur;
  return cur;
}

}  // namespace

MultiTaskOutput multitask_predict(const MultiTaskModel& model,
                                  const stream::FeatureVec& x) {
  std::vector<stream::FeatureVec> batch{x};
  nn::Matrix embedded = nn::embedding_forward(model.embeddings, batch);
  nn::Matrix hidden = trunk_forward(model, embedded, nullptr);
  MultiTaskOutput out;
  out.p_cvr = nn::sigmoid(nn::dense_forward(hidden, model.cvr_head).at(0, 0));
  for (const nn::DenseParams& head : model.window_heads) {
    const double c = nn::sigmoid(nn::dense_forward(hidden, head).at(0, 0));
    out.p_conditional.push_back(c);
    out.p_joint.push_back(c * out.p_cvr);
  }
  return out;
}

MultiTaskLossResult offline_multitask_loss(
    const MultiTaskModel& model, std::span<const stream::FeatureVec> xs,
    std::span<const MultiTaskLabels> labels,
    std::span<const MultiTaskMask> masks) {
  const size_t n_windows = model.config.num_windows();
  if (xs.size() != labels.size() || xs.size() != masks.size()) {
    throw ContractError("offline_multitask_loss: batch arity mismatch");
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    if (labels[i].window.size() != n_windows ||
        masks[i].window_observable.size() != n_windows) {
      throw ContractError("offline_multitask_loss: mask/label arity mismatch");
    }
  }

  nn::Matrix embedded = nn::embedding_forward(model.embeddings, xs);
  TrunkCache cache;
  nn::Matrix hidden = trunk_forward(model, embedded, &cache);

  nn::Matrix s_y = nn::dense_forward(hidden, model.cvr_head);
  std::vector<nn::Matrix> s_win;
  for (const nn::DenseParams& head : model.window_heads) {
    s_win.push_back(nn::dense_forward(hidden, head));
  }

  MultiTaskLossResult result;
  const size_t b = xs.size();
  nn::Matrix d_sy(b, 1);
  std::vector<nn::Matrix> d_swin(n_windows, nn::Matrix(b, 1));
  for (size_t i = 0; i < b; ++i) {
    const double a = nn::sigmoid(s_y.at(i, 0));
    if (masks[i].y_observable) {
      const double f = nn::clamp_prediction(a);
      result.loss += labels[i].y == 1 ? -std::log(f) : -std::log(1.0 - f);
      d_sy.at(i, 0) += a - static_cast<double>(labels[i].y);
    }
    for (size_t n = 0; n < n_windows; ++n) {
      if (!masks[i].window_observable[n]) continue;
      const double c = nn::sigmoid(s_win[n].at(i, 0));
      const double j = nn::clamp_prediction(c * a);
      const int yn = labels[i].window[n];
      result.loss += yn == 1 ? -std::log(j) : -std::log(1.0 - j);
      const double dj = (j - static_cast<double>(yn)) / (j * (1.0 - j));
      d_swin[n].at(i, 0) += dj * a * c * (1.0 - c);
      d_sy.at(i, 0) += dj * c * a * (1.0 - a);
    }
  }

  MultiTaskGradients& g = result.grads;
  g.trunk.resize(model.trunk.size());
  g.window_heads.resize(n_windows);
  nn::Matrix d_hidden(b, hidden.cols());
  {
    nn::Matrix dh;
    nn::dense_backward(hidden, model.cvr_head, d_sy, &g.cvr_head, &dh);
    for (size_t i = 0; i < d_hidden.size(); ++i) {
      d_hidden.data()[i] += dh.data()[i];
    }
    for (size_t n = 0; n < n_windows; ++n) {
      nn::dense_backward(hidden, model.window_heads[n], d_swin[n],
                         &g.window_heads[n], &dh);
      for (size_t i = 0; i < d_hidden.size(); ++i) {
        d_hidden.data()[i] += dh.data()[i];
      }
    }
  }
  nn::Matrix dcur = std::move(d_hidden);
  for (size_t l = model.trunk.size(); l-- > 0;) {
    nn::Matrix dz = nn::leaky_relu_backward(cache.pre_act[l], dcur,
                                            model.config.leaky_relu_slope);
    nn::dense_backward(cache.layer_in[l], model.trunk[l], dz, &g.trunk[l],
                       &dcur);
  }
  nn::embedding_backward(model.embeddings, xs, dcur, &g.embeddings);
  return result;
}

MultiTaskMask multitask_mask(const stream::ClickEvent& event,
                             std::span<const int64_t> windows,
                             int64_t attribution_window, int64_t data_end_ts) {
  MultiTaskMask mask;
  const bool attribution_elapsed =
      event.click_ts + attribution_window <= data_end_ts;
  const bool conversion_seen = event.converts() &&
                               event.delay <= attribution_window &&
                               event.conversion_ts() <= data_end_ts;
  mask.y_observable = attribution_elapsed || conversion_seen;
  for (int64_t w : windows) {
    mask.window_observable.push_back(event.click_ts + w <= data_end_ts);
  }
  return mask;
}

MultiTaskLabels multitask_labels(const stream::ClickEvent& event,
                                 std::span<const int64_t> windows,
                                 int64_t attribution_window) {
  MultiTaskLabels labels;
  labels.y = event.converts() && event.delay <= attribution_window ? 1 : 0;
  for (int64_t w : windows) {
    labels.window.push_back(event.converts() && event.delay <= w ? 1 : 0);
  }
  return labels;
}

std::vector<nn::TensorView> multitask_parameter_views(MultiTaskModel& model) {
  std::vector<nn::TensorView> views;
  for (nn::Matrix& t : model.embeddings.tables) {
    views.push_back({t.data(), t.size()});
  }
  for (nn::DenseParams& d : model.trunk) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  views.push_back({model.cvr_head.w.data(), model.cvr_head.w.size()});
  views.push_back({model.cvr_head.b.data(), model.cvr_head.b.size()});
  for (nn::DenseParams& d : model.window_heads) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  return views;
}

std::vector<nn::ConstTensorView> multitask_gradient_views(
    const MultiTaskGradients& grads) {
  std::vector<nn::ConstTensorView> views;
  for (const nn::Matrix& t : grads.embeddings.tables) {
    views.push_back({t.data(), t.size()});
  }
  for (const nn::DenseGrads& d : grads.trunk) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  views.push_back({grads.cvr_head.w.data(), grads.cvr_head.w.size()});
  views.push_back({grads.cvr_head.b.data(), grads.cvr_head.b.size()});
  for (const nn::DenseGrads& d : grads.window_heads) {
    views.push_back({d.w.data(), d.w.size()});
    views.push_back({d.b.data(), d.b.size()});
  }
  return views;
}

}  // namespace ctr::losses

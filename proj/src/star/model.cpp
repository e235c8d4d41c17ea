#include "ctr/star/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctr/errors.hpp"
#include "ctr/nn/layers.hpp"

namespace ctr::star {

nn::DenseParams star_fuse_layer(const StarFcnParams& fcn, int domain,
                                size_t layer) {
  if (domain < 1 || domain > fcn.num_domains()) {
    throw ContractError("star_fuse_layer: unknown domain");
  }
  if (layer >= fcn.num_layers()) {
    throw ContractError("star_fuse_layer: layer index out of range");
  }
  const nn::DenseParams& shared = fcn.shared[layer];
  const nn::DenseParams& own = fcn.per_domain[static_cast<size_t>(domain - 1)][layer];
  if (!own.w.same_shape(shared.w) || own.b.size() != shared.b.size()) {
    throw ShapeError("star_fuse_layer: per-domain shape != shared shape");
  }
  nn::DenseParams fused;
  fused.w = nn::Matrix(shared.w.rows(), shared.w.cols());
  for (size_t i = 0; i < fused.w.size(); ++i) {
    fused.w.data()[i] = own.w.data()[i] * shared.w.data()[i];
  }
  fused.b.resize(shared.b.size());
  for (size_t i = 0; i < fused.b.size(); ++i) {
    fused.b[i] = own.b[i] + shared.b[i];
  }
  return fused;
}

nn::Matrix star_layer_forward(const nn::Matrix& in, int domain,
                              const StarFcnParams& fcn, size_t layer,
                              double slope) {
  const nn::DenseParams fused = star_fuse_layer(fcn, domain, layer);
  nn::Matrix z = nn::dense_forward(in, fused);
  if (layer + 1 == fcn.num_layers()) return z;  // linear output layer
  return nn::leaky_relu_forward(z, slope);
}

StarModel star_init(const StarModelConfig& config, Rng& rng) {
  if (config.num_domains < 1) {
    throw ContractError("star_init: need at least one domain");
  }
  StarModel m;
  m.config = config;
  m.embeddings = nn::embedding_init(config.embeddings, rng);
  const size_t rep_dim = m.embeddings.output_dim();
  m.pn = pn_init(config.num_domains, rep_dim);
  m.pn.eps = config.pn_eps;
  m.pn.momentum = config.pn_momentum;
  m.pn.strict_eval = config.strict_pn_eval;

  size_t in = rep_dim;
  for (int width : config.hidden_sizes) {
    m.fcn.shared.push_back(nn::dense_init(in, static_cast<size_t>(width), rng));
    in = static_cast<size_t>(width);
  }
  m.fcn.shared.push_back(nn::dense_init(in, 1, rng));
  // Identity fusion at t=0: the per-domain FCNs start as all-ones weights and
  // zero biases so every domain reproduces the shared model exactly.
  m.fcn.per_domain.resize(static_cast<size_t>(config.num_domains));
  for (auto& layers : m.fcn.per_domain) {
    for (const nn::DenseParams& shared : m.fcn.shared) {
      nn::DenseParams p;
      p.w = nn::Matrix(shared.w.rows(), shared.w.cols(), 1.0);
      p.b.assign(shared.b.size(), 0.0);
      layers.push_back(std::move(p));
    }
  }

  if (config.use_aux_net) {
    m.aux.domain_embedding = nn::Matrix(static_cast<size_t>(config.num_domains),
                                        static_cast<size_t>(config.aux_embed_dim));
    for (size_t i = 0; i < m.aux.domain_embedding.size(); ++i) {
      m.aux.domain_embedding.data()[i] = 0.1 * rng.normal();
    }
    m.aux.l1 = nn::dense_init(static_cast<size_t>(config.aux_embed_dim) + rep_dim,
                              static_cast<size_t>(config.aux_hidden), rng);
    m.aux.l2 = nn::dense_init(static_cast<size_t>(config.aux_hidden), 1, rng);
    m.aux.slope = config.leaky_relu_slope;
  }
  return m;
}

namespace {

// Shared forward core; `training` switches PN mode and cache collection.
std::vector<double> star_forward_impl(StarModel& model,
                                      std::span<const FeatureVec> xs,
                                      int domain, bool training,
                                      StarForwardCache* cache) {
  const StarModelConfig& cfg = model.config;
  nn::Matrix embedded = nn::embedding_forward(model.embeddings, xs);

  nn::Matrix cur;
  if (training) {
    cur = pn_forward_train(embedded, domain, model.pn,
                           cache != nullptr ? &cache->pn : nullptr);
  } else {
    cur = pn_forward_eval(embedded, domain, model.pn);
  }
  if (cache != nullptr) cache->pn_out = cur;

  const size_t layers = model.fcn.num_layers();
  for (size_t l = 0; l < layers; ++l) {
    if (cache != nullptr) cache->layer_in.push_back(cur);
    const nn::DenseParams fused = star_fuse_layer(model.fcn, domain, l);
    nn::Matrix z = nn::dense_forward(cur, fused);
    if (l + 1 == layers) {
      cur = std::move(z);
    } else {
      if (cache != nullptr) cache->pre_act.push_back(z);
      cur = nn::leaky_relu_forward(z, cfg.leaky_relu_slope);
    }
  }
  nn::Matrix main_logit = std::move(cur);

  nn::Matrix aux_logit(xs.size(), 1);
  if (cfg.use_aux_net) {
    const size_t aux_dim = static_cast<size_t>(cfg.aux_embed_dim);
    nn::Matrix aux_in(xs.size(), aux_dim + embedded.cols());
    const double* drow = model.aux.domain_embedding.row(
        static_cast<size_t>(domain - 1));
    for (size_t i = 0; i < xs.size(); ++i) {
      double* row = aux_in.row(i);
      for (size_t j = 0; j < aux_dim; ++j) row[j] = drow[j];
      const double* erow = embedded.row(i);
      for (size_t j = 0; j < embedded.cols(); ++j) row[aux_dim + j] = erow[j];
    }
    nn::Matrix z1 = nn::dense_forward(aux_in, model.aux.l1);
    nn::Matrix h = nn::leaky_relu_forward(z1, model.aux.slope);
    aux_logit = nn::dense_forward(h, model.aux.l2);
    if (cache != nullptr) {
      cache->aux_in = std::move(aux_in);
      cache->aux_pre_act = std::move(z1);
      cache->aux_hidden = std::move(h);
    }
  }

  std::vector<double> preds(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    const double logit = main_logit.at(i, 0) +
                         (cfg.use_aux_net ? aux_logit.at(i, 0) : 0.0);
    if (!std::isfinite(logit)) {
      throw NumericError("star forward: non-finite logit");
    }
    preds[i] = nn::clamp_prediction(nn::sigmoid(logit));
  }
  if (cache != nullptr) {
    cache->domain = domain;
    cache->batch = xs.size();
    cache->xs.assign(xs.begin(), xs.end());
    cache->embedded = std::move(embedded);
    cache->main_logit = std::move(main_logit);
    cache->aux_logit = std::move(aux_logit);
    cache->predictions = preds;
  }
  return preds;
}

void init_star_gradients(const StarModel& model, StarGradients* g) {
  if (!g->shared.empty()) return;
  const size_t layers = model.fcn.num_layers();
  g->embeddings.tables.clear();
  for (const nn::Matrix& t : model.embeddings.tables) {
    g->embeddings.tables.emplace_back(t.rows(), t.cols());
  }
  g->pn.gamma.assign(model.pn.num_features(), 0.0);
  g->pn.beta.assign(model.pn.num_features(), 0.0);
  g->pn.gamma_p = nn::Matrix(model.pn.gamma_p.rows(), model.pn.gamma_p.cols());
  g->pn.beta_p = nn::Matrix(model.pn.beta_p.rows(), model.pn.beta_p.cols());
  g->shared.resize(layers);
  g->per_domain.assign(model.fcn.per_domain.size(),
                       std::vector<nn::DenseGrads>(layers));
  for (size_t l = 0; l < layers; ++l) {
    const nn::DenseParams& s = model.fcn.shared[l];
    g->shared[l].w = nn::Matrix(s.w.rows(), s.w.cols());
    g->shared[l].b.assign(s.b.size(), 0.0);
    for (size_t d = 0; d < model.fcn.per_domain.size(); ++d) {
      g->per_domain[d][l].w = nn::Matrix(s.w.rows(), s.w.cols());
      g->per_domain[d][l].b.assign(s.b.size(), 0.0);
    }
  }
  if (model.config.use_aux_net) {
    g->aux_domain_embedding = nn::Matrix(model.aux.domain_embedding.rows(),
                                         model.aux.domain_embedding.cols());
    g->aux_l1.w = nn::Matrix(model.aux.l1.w.rows(), model.aux.l1.w.cols());
    g->aux_l1.b.assign(model.aux.l1.b.size(), 0.0);
    g->aux_l2.w = nn::Matrix(model.aux.l2.w.rows(), model.aux.l2.w.cols());
    g->aux_l2.b.assign(model.aux.l2.b.size(), 0.0);
  }
}

}  // namespace

double star_predict(StarModel& model, const FeatureVec& x, int domain) {
  std::vector<FeatureVec> batch{x};
  return star_forward_impl(model, batch, domain, /*training=*/false,
                           nullptr)[0];
}

std::vector<double> star_predict_batch(StarModel& model,
                                       std::span<const FeatureVec> xs,
                                       int domain) {
  return star_forward_impl(model, xs, domain, /*training=*/false, nullptr);
}

std::vector<double> star_forward_train(StarModel& model,
                                       std::span<const FeatureVec> xs,
                                       int domain, StarForwardCache& cache) {
  cache = StarForwardCache{};
  return star_forward_impl(model, xs, domain, /*training=*/true, &cache);
}

void star_backward(const StarModel& model, const StarForwardCache& cache,
                   std::span<const double> dloss_df,
                   std::span<const double> weights, StarGradients* grads) {
  if (cache.batch == 0 || cache.batch != dloss_df.size()) {
    throw ContractError("star_backward: cache/batch mismatch");
  }
  if (!weights.empty() && weights.size() != cache.batch) {
    throw ShapeError("star_backward: weight count != batch size");
  }
  init_star_gradients(model, grads);
  const int domain = cache.domain;
  const size_t d = static_cast<size_t>(domain - 1);
  const size_t layers = model.fcn.num_layers();

  nn::Matrix dlogit(cache.batch, 1);
  for (size_t i = 0; i < cache.batch; ++i) {
    const double f = cache.predictions[i];
    const double w = weights.empty() ? 1.0 : weights[i];
    dlogit.at(i, 0) = w * dloss_df[i] * f * (1.0 - f);
  }

  // Gradient into the pooled representation comes from both towers.
  nn::Matrix d_embedded(cache.batch, cache.embedded.cols());

  if (model.config.use_aux_net) {
    nn::DenseGrads dl2;
    nn::Matrix dh;
    nn::dense_backward(cache.aux_hidden, model.aux.l2, dlogit, &dl2, &dh);
    nn::Matrix dz1 = nn::leaky_relu_backward(cache.aux_pre_act, dh,
                                             model.aux.slope);
    nn::DenseGrads dl1;
    nn::Matrix d_aux_in;
    nn::dense_backward(cache.aux_in, model.aux.l1, dz1, &dl1, &d_aux_in);

    for (size_t i = 0; i < grads->aux_l1.w.size(); ++i) {
      grads->aux_l1.w.data()[i] += dl1.w.data()[i];
    }
    for (size_t i = 0; i < grads->aux_l1.b.size(); ++i) {
      grads->aux_l1.b[i] += dl1.b[i];
    }
    for (size_t i = 0; i < grads->aux_l2.w.size(); ++i) {
      grads->aux_l2.w.data()[i] += dl2.w.data()[i];
    }
    for (size_t i = 0; i < grads->aux_l2.b.size(); ++i) {
      grads->aux_l2.b[i] += dl2.b[i];
    }
    const size_t aux_dim = static_cast<size_t>(model.config.aux_embed_dim);
    double* de_row = grads->aux_domain_embedding.row(d);
    for (size_t i = 0; i < cache.batch; ++i) {
      const double* row = d_aux_in.row(i);
      for (size_t j = 0; j < aux_dim; ++j) de_row[j] += row[j];
      double* erow = d_embedded.row(i);
      for (size_t j = 0; j < cache.embedded.cols(); ++j) {
        erow[j] += row[aux_dim + j];
      }
    }
  }

  // Main tower: route fused-layer gradients to shared and domain weights.
  nn::Matrix dcur = dlogit;
  for (size_t l = layers; l-- > 0;) {
    if (l + 1 != layers) {
      dcur = nn::leaky_relu_backward(cache.pre_act[l], dcur,
                                     model.config.leaky_relu_slope);
    }
    const nn::DenseParams fused = star_fuse_layer(model.fcn, domain, l);
    nn::DenseGrads fused_g;
    nn::Matrix din;
    nn::dense_backward(cache.layer_in[l], fused, dcur, &fused_g, &din);
    const nn::DenseParams& shared = model.fcn.shared[l];
    const nn::DenseParams& own = model.fcn.per_domain[d][l];
    nn::DenseGrads& gs = grads->shared[l];
    nn::DenseGrads& gd = grads->per_domain[d][l];
    for (size_t i = 0; i < fused_g.w.size(); ++i) {
      gs.w.data()[i] += fused_g.w.data()[i] * own.w.data()[i];
      gd.w.data()[i] += fused_g.w.data()[i] * shared.w.data()[i];
    }
    for (size_t i = 0; i < fused_g.b.size(); ++i) {
      gs.b[i] += fused_g.b[i];
      gd.b[i] += fused_g.b[i];
    }
    dcur = std::move(din);
  }

  nn::Matrix d_pn_in;
  pn_backward(cache.pn, model.pn, dcur, &grads->pn, &d_pn_in);
  for (size_t i = 0; i < d_embedded.size(); ++i) {
    d_embedded.data()[i] += d_pn_in.data()[i];
  }
  nn::embedding_backward(model.embeddings, cache.xs, d_embedded,
                         &grads->embeddings);
}

StarLossResult star_loss(StarModel& model, std::span<const StarSample> batch) {
  StarLossResult result;
  result.predictions.assign(batch.size(), 0.0);
  std::map<int, std::vector<size_t>> by_domain;
  for (size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].label != 0 && batch[i].label != 1) {
      throw ContractError("star_loss: label must be 0 or 1");
    }
    by_domain[batch[i].domain].push_back(i);
  }
  for (const auto& [domain, indices] : by_domain) {
    std::vector<FeatureVec> xs;
    xs.reserve(indices.size());
    for (size_t i : indices) xs.push_back(batch[i].features);
    StarForwardCache cache;
    std::vector<double> preds = star_forward_train(model, xs, domain, cache);
    std::vector<double> dloss(preds.size());
    for (size_t k = 0; k < preds.size(); ++k) {
      const double f = nn::clamp_prediction(preds[k]);
      const int y = batch[indices[k]].label;
      result.loss += y == 1 ? -std::log(f) : -std::log(1.0 - f);
      dloss[k] = y == 1 ? -1.0 / f : 1.0 / (1.0 - f);
      result.predictions[indices[k]] = preds[k];
    }
    star_backward(model, cache, dloss, {}, &result.grads);
  }
  return result;
}

int64_t star_fcn_parameter_count(const StarFcnParams& fcn) {
  int64_t count = 0;
  for (const nn::DenseParams& l : fcn.shared) {
    count += static_cast<int64_t>(l.w.size() + l.b.size());
  }
  for (const auto& layers : fcn.per_domain) {
    for (const nn::DenseParams& l : layers) {
      count += static_cast<int64_t>(l.w.size() + l.b.size());
    }
  }
  return count;
}

std::vector<nn::TensorView> star_parameter_views(StarModel& model) {
  std::vector<nn::TensorView> views;
  for (nn::Matrix& t : model.embeddings.tables) {
    views.push_back({t.data(), t.size()});
  }
  views.push_back({model.pn.gamma.data(), model.pn.gamma.size()});
  views.push_back({model.pn.beta.data(), model.pn.beta.size()});
  views.push_back({model.pn.gamma_p.data(), model.pn.gamma_p.size()});
  views.push_back({model.pn.beta_p.data(), model.pn.beta_p.size()});
  for (nn::DenseParams& l : model.fcn.shared) {
    views.push_back({l.w.data(), l.w.size()});
    views.push_back({l.b.data(), l.b.size()});
  }
  for (auto& layers : model.fcn.per_domain) {
    for (nn::DenseParams& l : layers) {
      views.push_back({l.w.data(), l.w.size()});
      views.push_back({l.b.data(), l.b.size()});
    }
  }
  if (model.config.use_aux_net) {
    views.push_back({model.aux.domain_embedding.data(),
                     model.aux.domain_embedding.size()});
    views.push_back({model.aux.l1.w.data(), model.aux.l1.w.size()});
    views.push_back({model.aux.l1.b.data(), model.aux.l1.b.size()});
    views.push_back({model.aux.l2.w.data(), model.aux.l2.w.size()});
    views.push_back({model.aux.l2.b.data(), model.aux.l2.b.size()});
  }
  return views;
}

std::vector<nn::ConstTensorView> star_gradient_views(const StarGradients& g) {
  std::vector<nn::ConstTensorView> views;
  for (const nn::Matrix& t : g.embeddings.tables) {
    views.push_back({t.data(), t.size()});
  }
  views.push_back({g.pn.gamma.data(), g.pn.gamma.size()});
  views.push_back({g.pn.beta.data(), g.pn.beta.size()});
  views.push_back({g.pn.gamma_p.data(), g.pn.gamma_p.size()});
  views.push_back({g.pn.beta_p.data(), g.pn.beta_p.size()});
  for (const nn::DenseGrads& l : g.shared) {
    views.push_back({l.w.data(), l.w.size()});
    views.push_back({l.b.data(), l.b.size()});
  }
  for (const auto& layers : g.per_domain) {
    for (const nn::DenseGrads& l : layers) {
      views.push_back({l.w.data(), l.w.size()});
      views.push_back({l.b.data(), l.b.size()});
    }
  }
  if (!g.aux_domain_embedding.empty()) {
    views.push_back({g.aux_domain_embedding.data(),
                     g.aux_domain_embedding.size()});
    views.push_back({g.aux_l1.w.data(), g.aux_l1.w.size()});
    views.push_back({g.aux_l1.b.data(), g.aux_l1.b.size()});
    views.push_back({g.aux_l2.w.data(), g.aux_l2.w.size()});
    views.push_back({g.aux_l2.b.data(), g.aux_l2.b.size()});
  }
  return views;
}

}  // namespace ctr::star

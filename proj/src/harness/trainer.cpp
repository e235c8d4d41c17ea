#include "ctr/harness/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ctr/errors.hpp"
#include "ctr/star/snapshot.hpp"

namespace ctr::harness {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kPlain ? "plain" : "star";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "plain") return ModelKind::kPlain;
  if (name == "star") return ModelKind::kStar;
  throw ConfigError("unknown model kind: " + name);
}

namespace {
double prior_logit(double p) {
  p = std::min(std::max(p, 1e-6), 1.0 - 1e-6);
  return std::log(p / (1.0 - p));
}
}  // namespace

CvrModel CvrModel::init(const CvrModelConfig& config, uint64_t seed) {
  CvrModel model;
  model.config_ = config;
  model.adam_.config.lr = config.lr;
  Rng rng(seed);
  if (config.kind == ModelKind::kPlain) {
    model.embeddings_ = nn::embedding_init(config.embeddings, rng);
    nn::MlpConfig mlp_cfg;
    mlp_cfg.layer_sizes = config.hidden;
    mlp_cfg.use_batch_norm = config.use_batch_norm;
    mlp_cfg.leaky_relu_slope = config.leaky_relu_slope;
    model.mlp_ = nn::mlp_init(model.embeddings_.output_dim(), mlp_cfg, rng);
    if (config.prior) {
      model.mlp_.dense.back().b[0] = prior_logit(*config.prior);
    }
  } else {
    star::StarModelConfig star_cfg;
    star_cfg.num_domains = config.num_domains;
    star_cfg.embeddings = config.embeddings;
    star_cfg.hidden_sizes = config.hidden;
    star_cfg.leaky_relu_slope = config.leaky_relu_slope;
    star_cfg.use_aux_net = config.star_use_aux;
    star_cfg.aux_embed_dim = config.aux_embed_dim;
    star_cfg.aux_hidden = config.aux_hidden;
    model.star_ = star::star_init(star_cfg, rng);
    if (config.prior) {
      model.star_.fcn.shared.back().b[0] = prior_logit(*config.prior);
    }
  }
  return model;
}

namespace {

// Scales dL/df so the induced logit gradient stays inside [-clip, clip].
double clip_dloss_df(double dloss_df, double f, double clip) {
  if (clip <= 0.0) return dloss_df;
  const double dlogit = dloss_df * f * (1.0 - f);
  if (std::fabs(dlogit) <= clip) return dloss_df;
  return dloss_df * clip / std::fabs(dlogit);
}

}  // namespace

double CvrModel::train_step(std::span<const nn::FeatureVec> xs, int domain,
                            const LossTermFn& term_fn) {
  if (xs.empty()) return 0.0;
  double total_loss = 0.0;
  if (config_.kind == ModelKind::kPlain) {
    nn::Matrix embedded = nn::embedding_forward(embeddings_, xs);
    nn::MlpCache cache;
    nn::Matrix probs = nn::mlp_forward(mlp_, embedded, /*training=*/true,
                                       &cache);
    std::vector<double> dloss(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      const losses::LossTerm term = term_fn(probs.at(i, 0), i);
      total_loss += term.loss;
      dloss[i] = clip_dloss_df(term.dloss_df, probs.at(i, 0),
                               config_.dlogit_clip);
    }
    nn::MlpGradients grads = nn::mlp_backward(mlp_, cache, dloss);
    nn::EmbeddingGrads egrads;
    nn::embedding_backward(embeddings_, xs, grads.d_input, &egrads);
    std::vector<nn::TensorView> params = nn::mlp_parameter_views(mlp_);
    std::vector<nn::ConstTensorView> gviews = nn::mlp_gradient_views(grads);
    for (size_t f = 0; f < embeddings_.tables.size(); ++f) {
      params.push_back({embeddings_.tables[f].data(),
                        embeddings_.tables[f].size()});
      gviews.push_back({egrads.tables[f].data(), egrads.tables[f].size()});
    }
    nn::adam_update(params, gviews, adam_);
  } else {
    star::StarForwardCache cache;
    std::vector<double> preds = star::star_forward_train(star_, xs, domain,
                                                         cache);
    std::vector<double> dloss(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      const losses::LossTerm term = term_fn(preds[i], i);
      total_loss += term.loss;
      dloss[i] = clip_dloss_df(term.dloss_df, preds[i], config_.dlogit_clip);
    }
    star::StarGradients grads;
    star::star_backward(star_, cache, dloss, {}, &grads);
    std::vector<nn::TensorView> params = star::star_parameter_views(star_);
    std::vector<nn::ConstTensorView> gviews = star::star_gradient_views(grads);
    nn::adam_update(params, gviews, adam_);
  }
  return total_loss;
}

std::vector<double> CvrModel::predict(std::span<const nn::FeatureVec> xs,
                                      int domain) {
  if (xs.empty()) return {};
  if (config_.kind == ModelKind::kPlain) {
    nn::Matrix embedded = nn::embedding_forward(embeddings_, xs);
    nn::Matrix probs = nn::mlp_predict(mlp_, embedded);
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = probs.at(i, 0);
    return out;
  }
  return star::star_predict_batch(star_, xs, domain);
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out << ',';
    out << v[i];
  }
  return out.str();
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

io::NamedTensor tensor_of(const std::string& name, const nn::Matrix& m) {
  io::NamedTensor t;
  t.name = name;
  t.dims = {m.rows(), m.cols()};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

io::NamedTensor tensor_of(const std::string& name,
                          const std::vector<double>& v) {
  io::NamedTensor t;
  t.name = name;
  t.dims = {v.size()};
  t.data = v;
  return t;
}

nn::Matrix matrix_of(const io::NamedTensor& t) {
  nn::Matrix m(t.dims.at(0), t.dims.at(1));
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

}  // namespace

io::TensorFile CvrModel::to_tensor_file() const {
  if (config_.kind == ModelKind::kStar) {
    io::TensorFile file = star::star_to_tensor_file(star_);
    file.metadata["lr"] = fmt_double(config_.lr);
    return file;
  }
  io::TensorFile file;
  file.metadata["kind"] = "plain";
  file.metadata["vocab_sizes"] = join_ints(config_.embeddings.vocab_sizes);
  file.metadata["embed_dim"] = std::to_string(config_.embeddings.embed_dim);
  file.metadata["hidden_sizes"] = join_ints(config_.hidden);
  file.metadata["use_batch_norm"] = config_.use_batch_norm ? "1" : "0";
  file.metadata["leaky_relu_slope"] = fmt_double(config_.leaky_relu_slope);
  file.metadata["lr"] = fmt_double(config_.lr);
  for (size_t f = 0; f < embeddings_.tables.size(); ++f) {
    file.tensors.push_back(tensor_of("embeddings/field" + std::to_string(f),
                                     embeddings_.tables[f]));
  }
  for (size_t l = 0; l < mlp_.dense.size(); ++l) {
    file.tensors.push_back(tensor_of("mlp/" + std::to_string(l) + "/w",
                                     mlp_.dense[l].w));
    file.tensors.push_back(tensor_of("mlp/" + std::to_string(l) + "/b",
                                     mlp_.dense[l].b));
  }
  for (size_t l = 0; l < mlp_.bn.size(); ++l) {
    const std::string p = "mlp/bn" + std::to_string(l) + "/";
    file.tensors.push_back(tensor_of(p + "gamma", mlp_.bn[l].gamma));
    file.tensors.push_back(tensor_of(p + "beta", mlp_.bn[l].beta));
    file.tensors.push_back(tensor_of(p + "mean", mlp_.bn[l].moving_mean));
    file.tensors.push_back(tensor_of(p + "var", mlp_.bn[l].moving_var));
  }
  return file;
}

CvrModel CvrModel::from_tensor_file(const io::TensorFile& file) {
  CvrModelConfig cfg;
  const std::string kind = file.meta("kind");
  if (kind == "star") {
    cfg.kind = ModelKind::kStar;
    if (file.metadata.count("lr") > 0) cfg.lr = std::stod(file.meta("lr"));
    CvrModel model;
    model.star_ = star::star_from_tensor_file(file);
    cfg.num_domains = model.star_.config.num_domains;
    cfg.embeddings = model.star_.config.embeddings;
    cfg.hidden = model.star_.config.hidden_sizes;
    cfg.leaky_relu_slope = model.star_.config.leaky_relu_slope;
    cfg.star_use_aux = model.star_.config.use_aux_net;
    cfg.aux_embed_dim = model.star_.config.aux_embed_dim;
    cfg.aux_hidden = model.star_.config.aux_hidden;
    model.config_ = cfg;
    model.adam_.config.lr = cfg.lr;
    return model;
  }
  if (kind != "plain") throw DataError("model file: unknown kind " + kind);
  for (int v : split_ints(file.meta("vocab_sizes"))) {
    cfg.embeddings.vocab_sizes.push_back(v);
  }
  cfg.embeddings.embed_dim = std::stoi(file.meta("embed_dim"));
  cfg.hidden = split_ints(file.meta("hidden_sizes"));
  cfg.use_batch_norm = file.meta("use_batch_norm") == "1";
  cfg.leaky_relu_slope = std::stod(file.meta("leaky_relu_slope"));
  cfg.lr = std::stod(file.meta("lr"));
  CvrModel model = CvrModel::init(cfg, /*seed=*/0);
  for (size_t f = 0; f < model.embeddings_.tables.size(); ++f) {
    model.embeddings_.tables[f] =
        matrix_of(file.find("embeddings/field" + std::to_string(f)));
  }
  for (size_t l = 0; l < model.mlp_.dense.size(); ++l) {
    model.mlp_.dense[l].w = matrix_of(file.find("mlp/" + std::to_string(l) +
                                                "/w"));
    model.mlp_.dense[l].b = file.find("mlp/" + std::to_string(l) + "/b").data;
  }
  for (size_t l = 0; l < model.mlp_.bn.size(); ++l) {
    const std::string p = "mlp/bn" + std::to_string(l) + "/";
    model.mlp_.bn[l].gamma = file.find(p + "gamma").data;
    model.mlp_.bn[l].beta = file.find(p + "beta").data;
    model.mlp_.bn[l].moving_mean = file.find(p + "mean").data;
    model.mlp_.bn[l].moving_var = file.find(p + "var").data;
  }
  return model;
}

}  // namespace ctr::harness

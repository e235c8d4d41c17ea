#include "ctr/star/snapshot.hpp"

#include <cstdio>
#include <sstream>

#include "ctr/io/tensor_file.hpp"

namespace ctr::star {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

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

void dump_dense(io::TensorFile& file, const std::string& prefix,
                const nn::DenseParams& d) {
  file.tensors.push_back(tensor_of(prefix + "/w", d.w));
  file.tensors.push_back(tensor_of(prefix + "/b", d.b));
}

nn::DenseParams load_dense(const io::TensorFile& file,
                           const std::string& prefix) {
  nn::DenseParams d;
  d.w = matrix_of(file.find(prefix + "/w"));
  d.b = file.find(prefix + "/b").data;
  return d;
}

}  // namespace

io::TensorFile star_to_tensor_file(const StarModel& model) {
  io::TensorFile file;
  const StarModelConfig& cfg = model.config;
  file.metadata["kind"] = "star";
  file.metadata["num_domains"] = std::to_string(cfg.num_domains);
  file.metadata["vocab_sizes"] = join_ints(cfg.embeddings.vocab_sizes);
  file.metadata["embed_dim"] = std::to_string(cfg.embeddings.embed_dim);
  file.metadata["hidden_sizes"] = join_ints(cfg.hidden_sizes);
  file.metadata["leaky_relu_slope"] = fmt_double(cfg.leaky_relu_slope);
  file.metadata["use_aux_net"] = cfg.use_aux_net ? "1" : "0";
  file.metadata["aux_embed_dim"] = std::to_string(cfg.aux_embed_dim);
  file.metadata["aux_hidden"] = std::to_string(cfg.aux_hidden);
  file.metadata["pn_eps"] = fmt_double(cfg.pn_eps);
  file.metadata["pn_momentum"] = fmt_double(cfg.pn_momentum);

  for (size_t f = 0; f < model.embeddings.tables.size(); ++f) {
    file.tensors.push_back(tensor_of("embeddings/field" + std::to_string(f),
                                     model.embeddings.tables[f]));
  }
  file.tensors.push_back(tensor_of("pn/gamma", model.pn.gamma));
  file.tensors.push_back(tensor_of("pn/beta", model.pn.beta));
  file.tensors.push_back(tensor_of("pn/gamma_p", model.pn.gamma_p));
  file.tensors.push_back(tensor_of("pn/beta_p", model.pn.beta_p));
  file.tensors.push_back(tensor_of("pn/moving_mean", model.pn.moving_mean));
  file.tensors.push_back(tensor_of("pn/moving_var", model.pn.moving_var));
  {
    std::vector<double> seen(model.pn.domain_seen.begin(),
                             model.pn.domain_seen.end());
    file.tensors.push_back(tensor_of("pn/domain_seen", seen));
  }
  for (size_t l = 0; l < model.fcn.shared.size(); ++l) {
    dump_dense(file, "fcn/shared/" + std::to_string(l), model.fcn.shared[l]);
  }
  for (size_t d = 0; d < model.fcn.per_domain.size(); ++d) {
    for (size_t l = 0; l < model.fcn.per_domain[d].size(); ++l) {
      dump_dense(file,
                 "fcn/domain" + std::to_string(d + 1) + "/" + std::to_string(l),
                 model.fcn.per_domain[d][l]);
    }
  }
  if (cfg.use_aux_net) {
    file.tensors.push_back(tensor_of("aux/domain_embedding",
                                     model.aux.domain_embedding));
    dump_dense(file, "aux/l1", model.aux.l1);
    dump_dense(file, "aux/l2", model.aux.l2);
  }
  return file;
}

void save_star_model(const std::string& path, const StarModel& model) {
  io::write_tensor_file(path, star_to_tensor_file(model));
}

StarModel star_from_tensor_file(const io::TensorFile& file) {
  StarModelConfig cfg;
  cfg.num_domains = std::stoi(file.meta("num_domains"));
  for (int v : split_ints(file.meta("vocab_sizes"))) {
    cfg.embeddings.vocab_sizes.push_back(v);
  }
  cfg.embeddings.embed_dim = std::stoi(file.meta("embed_dim"));
  cfg.hidden_sizes = split_ints(file.meta("hidden_sizes"));
  cfg.leaky_relu_slope = std::stod(file.meta("leaky_relu_slope"));
  cfg.use_aux_net = file.meta("use_aux_net") == "1";
  cfg.aux_embed_dim = std::stoi(file.meta("aux_embed_dim"));
  cfg.aux_hidden = std::stoi(file.meta("aux_hidden"));
  cfg.pn_eps = std::stod(file.meta("pn_eps"));
  cfg.pn_momentum = std::stod(file.meta("pn_momentum"));

  Rng rng(0);
  StarModel model = star_init(cfg, rng);
  for (size_t f = 0; f < model.embeddings.tables.size(); ++f) {
    model.embeddings.tables[f] =
        matrix_of(file.find("embeddings/field" + std::to_string(f)));
  }
  model.pn.gamma = file.find("pn/gamma").data;
  model.pn.beta = file.find("pn/beta").data;
  model.pn.gamma_p = matrix_of(file.find("pn/gamma_p"));
  model.pn.beta_p = matrix_of(file.find("pn/beta_p"));
  model.pn.moving_mean = matrix_of(file.find("pn/moving_mean"));
  model.pn.moving_var = matrix_of(file.find("pn/moving_var"));
  {
    const io::NamedTensor& seen = file.find("pn/domain_seen");
    model.pn.domain_seen.assign(seen.data.size(), 0);
    for (size_t i = 0; i < seen.data.size(); ++i) {
      model.pn.domain_seen[i] = seen.data[i] != 0.0 ? 1 : 0;
    }
  }
  for (size_t l = 0; l < model.fcn.shared.size(); ++l) {
    model.fcn.shared[l] = load_dense(file, "fcn/shared/" + std::to_string(l));
  }
  for (size_t d = 0; d < model.fcn.per_domain.size(); ++d) {
    for (size_t l = 0; l < model.fcn.per_domain[d].size(); ++l) {
      model.fcn.per_domain[d][l] = load_dense(
          file, "fcn/domain" + std::to_string(d + 1) + "/" + std::to_string(l));
    }
  }
  if (cfg.use_aux_net) {
    model.aux.domain_embedding = matrix_of(file.find("aux/domain_embedding"));
    model.aux.l1 = load_dense(file, "aux/l1");
    model.aux.l2 = load_dense(file, "aux/l2");
    model.aux.slope = cfg.leaky_relu_slope;
  }
  return model;
}

StarModel load_star_model(const std::string& path) {
  return star_from_tensor_file(io::read_tensor_file(path));
}

}  // namespace ctr::star

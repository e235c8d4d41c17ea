#include "ctr/nn/embedding.hpp"

#include <string>

namespace ctr::nn {

EmbeddingSet embedding_init(const EmbeddingConfig& config, Rng& rng) {
  if (config.embed_dim <= 0 || config.vocab_sizes.empty()) {
    throw ContractError("embedding_init: need at least one field and dim > 0");
  }
  EmbeddingSet set;
  set.config = config;
  set.tables.reserve(config.vocab_sizes.size());
  for (int32_t vocab : config.vocab_sizes) {
    if (vocab <= 0) throw ContractError("embedding_init: vocab size <= 0");
    Matrix t(static_cast<size_t>(vocab), static_cast<size_t>(config.embed_dim));
    for (size_t i = 0; i < t.size(); ++i) t.data()[i] = 0.1 * rng.normal();
    set.tables.push_back(std::move(t));
  }
  return set;
}

void embed_pool(const Matrix& table, std::span<const int32_t> ids,
                double* out) {
  const size_t dim = table.cols();
  for (size_t j = 0; j < dim; ++j) out[j] = 0.0;
  for (int32_t id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= table.rows()) {
      throw ContractError("embed_pool: id out of vocabulary range");
    }
    const double* row = table.row(static_cast<size_t>(id));
    for (size_t j = 0; j < dim; ++j) out[j] += row[j];
  }
}

Matrix embedding_forward(const EmbeddingSet& set,
                         std::span<const FeatureVec> batch) {
  const size_t fields = set.num_fields();
  const size_t dim = static_cast<size_t>(set.config.embed_dim);
  Matrix out(batch.size(), fields * dim);
  for (size_t i = 0; i < batch.size(); ++i) {
    const FeatureVec& x = batch[i];
    if (x.size() != fields) {
      throw ShapeError("embedding_forward: feature count != field count");
    }
    double* orow = out.row(i);
    for (size_t f = 0; f < fields; ++f) {
      embed_pool(set.tables[f], std::span<const int32_t>(&x[f], 1),
                 orow + f * dim);
    }
  }
  return out;
}

void embedding_backward(const EmbeddingSet& set,
                        std::span<const FeatureVec> batch,
                        const Matrix& d_input, EmbeddingGrads* grads) {
  const size_t fields = set.num_fields();
  const size_t dim = static_cast<size_t>(set.config.embed_dim);
  if (d_input.rows() != batch.size() || d_input.cols() != fields * dim) {
    throw ShapeError("embedding_backward: gradient shape mismatch");
  }
  if (grads->tables.empty()) {
    grads->tables.reserve(fields);
    for (size_t f = 0; f < fields; ++f) {
      grads->tables.emplace_back(set.tables[f].rows(), set.tables[f].cols());
    }
  }
  for (size_t i = 0; i < batch.size(); ++i) {
    const FeatureVec& x = batch[i];
    const double* drow = d_input.row(i);
    for (size_t f = 0; f < fields; ++f) {
      embed_pool_backward(std::span<const int32_t>(&x[f], 1), drow + f * dim,
                          static_cast<int>(dim), &grads->tables[f]);
    }
  }
}

void embed_pool_backward(std::span<const int32_t> ids, const double* d_out,
                         int embed_dim, Matrix* table_grad) {
  for (int32_t id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= table_grad->rows()) {
      throw ContractError("embed_pool_backward: id out of range");
    }
    double* row = table_grad->row(static_cast<size_t>(id));
    for (int j = 0; j < embed_dim; ++j) row[j] += d_out[j];
  }
}

}  // namespace ctr::nn

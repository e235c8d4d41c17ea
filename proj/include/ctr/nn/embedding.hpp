#ifndef CTR_NN_EMBEDDING_HPP_
#define CTR_NN_EMBEDDING_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ctr/nn/matrix.hpp"
#include "ctr/rng.hpp"

namespace ctr::nn {

// One categorical id per field in the standard pipeline.
using FeatureVec = std::vector<int32_t>;

struct EmbeddingConfig {
  std::vector<int32_t> vocab_sizes;  // one entry per field
  int embed_dim = 8;
};

struct EmbeddingSet {
  EmbeddingConfig config;
  std::vector<Matrix> tables;  // per field: vocab x embed_dim

  size_t num_fields() const { return tables.size(); }
  size_t output_dim() const {
    return tables.size() * static_cast<size_t>(config.embed_dim);
  }
};

EmbeddingSet embedding_init(const EmbeddingConfig& config, Rng& rng);

// Sum-pool the rows of one table selected by `ids` (repeats accumulate).
void embed_pool(const Matrix& table, std::span<const int32_t> ids, double* out);

// Batch lookup, one id per field, fields concatenated: output B x (F * dim).
Matrix embedding_forward(const EmbeddingSet& set,
                         std::span<const FeatureVec> batch);

struct EmbeddingGrads {
  std::vector<Matrix> tables;
};

// Scatter-add the d_input slices back into the per-field tables.
void embedding_backward(const EmbeddingSet& set,
                        std::span<const FeatureVec> batch,
                        const Matrix& d_input, EmbeddingGrads* grads);

// Gradient of embed_pool: adds d_out into every selected row.
void embed_pool_backward(std::span<const int32_t> ids, const double* d_out,
                         int embed_dim, Matrix* table_grad);

}  // namespace ctr::nn

#endif  // CTR_NN_EMBEDDING_HPP_

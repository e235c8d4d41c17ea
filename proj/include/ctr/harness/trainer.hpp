#ifndef CTR_HARNESS_TRAINER_HPP_
#define CTR_HARNESS_TRAINER_HPP_

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctr/io/tensor_file.hpp"
#include "ctr/losses/losses.hpp"
#include "ctr/nn/adam.hpp"
#include "ctr/nn/embedding.hpp"
#include "ctr/nn/mlp.hpp"
#include "ctr/star/model.hpp"

namespace ctr::harness {

enum class ModelKind { kPlain, kStar };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct CvrModelConfig {
  ModelKind kind = ModelKind::kPlain;
  int num_domains = 1;
  nn::EmbeddingConfig embeddings;
  std::vector<int> hidden{32, 16};
  bool use_batch_norm = true;
  double leaky_relu_slope = 0.01;
  bool star_use_aux = true;
  int aux_embed_dim = 8;
  int aux_hidden = 32;
  double lr = 0.01;
  // Output-layer bias starts at the class-prior log-odds when set; fresh
  // cells then predict the base rate instead of one half.
  std::optional<double> prior = std::nullopt;
  // Per-sample logit-gradient clip; importance-weight spikes (DEFER's capped
  // ratios) otherwise dominate whole batches. 0 disables.
  double dlogit_clip = 4.0;
};

// Per-sample loss-term factory: index into the current batch, prediction in.
using LossTermFn = std::function<losses::LossTerm(double f, size_t i)>;

// One CVR model behind a single training/prediction surface; either a plain
// MLP over pooled embeddings or the multi-domain star model.
class CvrModel {
 public:
  static CvrModel init(const CvrModelConfig& config, uint64_t seed);

  // One optimizer step over a single-domain batch (plain models ignore the
  // domain). Star training needs batch size >= 2 for the PN moments.
  // Returns the summed loss.
  double train_step(std::span<const nn::FeatureVec> xs, int domain,
                    const LossTermFn& term_fn);

  std::vector<double> predict(std::span<const nn::FeatureVec> xs, int domain);

  const CvrModelConfig& config() const { return config_; }

  io::TensorFile to_tensor_file() const;
  static CvrModel from_tensor_file(const io::TensorFile& file);

 private:
  CvrModelConfig config_;
  nn::EmbeddingSet embeddings_;  // plain only
  nn::Mlp mlp_;                  // plain only
  star::StarModel star_;         // star only
  nn::AdamState adam_;
};

}  // namespace ctr::harness

#endif  // CTR_HARNESS_TRAINER_HPP_

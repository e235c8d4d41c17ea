#ifndef CTR_LOSSES_DP_MODEL_HPP_
#define CTR_LOSSES_DP_MODEL_HPP_

#include <optional>
#include <span>
#include <vector>

#include "ctr/nn/adam.hpp"
#include "ctr/nn/embedding.hpp"
#include "ctr/nn/mlp.hpp"
#include "ctr/stream/events.hpp"

namespace ctr::losses {

struct DpModelConfig {
  int embed_dim = 8;
  std::vector<int> hidden{64, 32};
  int epochs = 3;
  int batch_size = 256;
  double lr = 0.01;
  // Output bias starts at the log-odds of this rate when set, so unseen
  // cells predict a conservative fake-negative probability.
  std::optional<double> prior = std::nullopt;
};

// Classifier f_dp(x): probability that x turns out to be a fake negative.
// Kept fully separate from the CVR model (own embeddings) so the auxiliary
// objective cannot interfere with the main gradients.
struct DpModel {
  DpModelConfig config;
  nn::EmbeddingSet embeddings;
  nn::Mlp net;
  bool degenerate = false;       // one-class training data
  double constant_prob = 0.0;

  double predict(const stream::FeatureVec& x) const;
  std::vector<double> predict_batch(
      std::span<const stream::FeatureVec> xs) const;
};

// DpModel plus its optimizer state, for incremental (streaming) updates.
class DpTrainer {
 public:
  DpTrainer(const nn::EmbeddingConfig& features, const DpModelConfig& config,
            Rng& rng);

  // One gradient pass over the batch (log loss, target = is_fake).
  void update(std::span<const stream::FeatureVec> xs,
              std::span<const int> is_fake);

  DpModel& model() { return model_; }
  const DpModel& model() const { return model_; }

 private:
  DpModel model_;
  nn::AdamState adam_;
};

// Fits f_dp on the event distribution: target 1 iff the event classifies as
// a fake negative under `windows`. Degenerate one-class data yields a
// constant-probability model with the warning flag set.
DpModel train_dp_classifier(std::span<const stream::ClickEvent> events,
                            const stream::WindowConfig& windows,
                            const nn::EmbeddingConfig& features,
                            const DpModelConfig& config, Rng& rng);

}  // namespace ctr::losses

#endif  // CTR_LOSSES_DP_MODEL_HPP_

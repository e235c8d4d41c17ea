#ifndef CTR_STREAM_WINDOW_MODEL_HPP_
#define CTR_STREAM_WINDOW_MODEL_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ctr/nn/adam.hpp"
#include "ctr/nn/embedding.hpp"
#include "ctr/nn/mlp.hpp"
#include "ctr/stream/events.hpp"

namespace ctr::stream {

// Multiclass classifier over a finite candidate set of window lengths.
struct WindowModel {
  std::vector<int64_t> candidates;  // seconds, strictly increasing
  nn::EmbeddingSet embeddings;
  nn::Mlp net;  // softmax head over candidates
};

struct WindowModelConfig {
  int embed_dim = 4;
  std::vector<int> hidden{16};
  int epochs = 5;
  int batch_size = 128;
  double lr = 0.01;
};

// Supervision: the target class is the shortest candidate window that would
// capture the conversion; events whose conversion lands beyond every
// candidate (or never happens) target the shortest window, since waiting
// longer cannot capture them either.
WindowModel train_window_model(std::span<const ClickEvent> events,
                               std::vector<int64_t> candidates,
                               const nn::EmbeddingConfig& features,
                               const WindowModelConfig& config, Rng& rng);

// argmax over the predicted distribution; ties break toward the shorter
// window.
int64_t predict_waiting_window(const WindowModel& model, const FeatureVec& x);

// Same mechanics; additionally checks every candidate lies strictly inside
// (w1, w2).
int64_t predict_attribution_window(const WindowModel& model,
                                   const FeatureVec& x,
                                   const WindowConfig& windows);

// The raw class distribution (exposed for tests).
std::vector<double> window_class_probs(const WindowModel& model,
                                       const FeatureVec& x);

}  // namespace ctr::stream

#endif  // CTR_STREAM_WINDOW_MODEL_HPP_

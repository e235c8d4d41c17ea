#ifndef CTR_HARNESS_EXPERIMENT_HPP_
#define CTR_HARNESS_EXPERIMENT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctr/harness/trainer.hpp"
#include "ctr/losses/dp_model.hpp"
#include "ctr/metrics/metrics.hpp"
#include "ctr/stream/build.hpp"

namespace ctr::harness {

struct TrainSettings {
  int embed_dim = 8;
  std::vector<int> hidden{32, 16};
  bool use_batch_norm = true;
  double leaky_relu_slope = 0.01;
  double lr = 0.002;
  int batch_size = 256;
  int pretrain_epochs = 2;
  double dlogit_clip = 4.0;  // per-sample logit-gradient cap, 0 disables
  // Fake-negative classifier (DEFER).
  std::vector<int> dp_hidden{64, 32};
  int dp_embed_dim = 8;
  double dp_lr = 0.002;
};

struct ExperimentConfig {
  stream::WindowConfig windows{900, 86400, std::nullopt};
  stream::StreamPolicy policy = stream::StreamPolicy::kRealNegDup;
  losses::LossKind loss = losses::LossKind::kDefer;
  bool pure_is_ratio = false;
  ModelKind model_kind = ModelKind::kPlain;
  int num_domains = 1;
  bool star_use_aux = true;
  double pretrain_fraction = 0.5;
  TrainSettings train;
  uint64_t seed = 1;
  bool streaming_updates = true;  // false: frozen pretrained anchor

  void validate() const;
};

// The compared-methods roster. ES-DFM is a cited baseline without a loss
// definition here; Vanilla-Win is its stream stand-in.
enum class MethodKind {
  kPretrained,
  kVanillaNoDup,
  kVanillaNoWin,
  kVanillaWin,
  kVanillaRn,
  kFnc,
  kFncRn,
  kFnw,
  kFnwRn,
  kDefer,
  kOracle,
};

std::string method_name(MethodKind kind);
std::vector<MethodKind> full_roster();

// Applies the roster's stream-policy/loss pairing on top of `base`. The
// no-waiting-window variants (FNW/FNC and their RN forms) get w1 collapsed
// to one second, the minimum the integer time grid allows.
ExperimentConfig method_config(MethodKind kind, ExperimentConfig base);

struct ExperimentResult {
  metrics::MetricReport report;
  losses::ClampCounters clamps;
  int64_t trained_records = 0;
  int64_t dropped_records = 0;  // lone leftovers batch norm cannot take
};

// Chronological split, leak-guarded pretraining, policy stream over the
// second part, then hourly train-on-t / evaluate-on-t+1 with true eventual
// labels on first occurrences only. `trained` receives the final model.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::span<const stream::ClickEvent> events,
                                CvrModel* trained = nullptr);

struct SweepEntry {
  int64_t w3 = 0;
  ExperimentResult result;
};

// RealNegDupApprox runs, one per candidate approximation window.
std::vector<SweepEntry> sweep_window(const ExperimentConfig& config,
                                     std::span<const stream::ClickEvent> events,
                                     std::span<const int64_t> w3_candidates);

// Pretraining label with the leak guard: a conversion counts only if it is
// attributed inside w2 AND lands before the split boundary.
int leak_guarded_label(const stream::ClickEvent& event,
                       const stream::WindowConfig& windows,
                       int64_t boundary_ts);

// Vocabulary inferred from data (max id + 1 per field).
nn::EmbeddingConfig infer_embedding_config(
    std::span<const stream::ClickEvent> events, int embed_dim);

// Number of domains present (max domain id).
int infer_num_domains(std::span<const stream::ClickEvent> events);

}  // namespace ctr::harness

#endif  // CTR_HARNESS_EXPERIMENT_HPP_

#ifndef CTR_LOSSES_LOSSES_HPP_
#define CTR_LOSSES_LOSSES_HPP_

#include <cstdint>
#include <string>

namespace ctr::losses {

enum class LossKind {
  kVanilla,
  kFnw,
  kFnc,     // vanilla training, q/(1-q) calibration at inference
  kFnwRn,
  kFncRn,   // vanilla training, 2q calibration at inference
  kDefer,
  kOracle,  // vanilla loss on true eventual labels
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Per-sample weighted log-loss term. The importance weight is computed from
// stop-gradient copies of the model estimates, so dloss_df treats it as a
// constant.
struct LossTerm {
  double loss = 0.0;
  double dloss_df = 0.0;
  double weight = 1.0;
};

struct ClampCounters {
  int64_t denominator_clamps = 0;
  int64_t weight_clamps = 0;
};

// -[y ln f + (1-y) ln(1-f)] with f clamped away from {0,1}.
LossTerm vanilla_logloss(double f, int label);

// Importance-weighted loss for the no-waiting-window duplicated-positive
// stream: positive weight 1+[f], negative weight (1-[f])(1+[f]).
LossTerm fnw_loss(double f, int label);

// Weights for the duplicated positive + real negative stream with a waiting
// window: positives [f / (f - f_dp/2)], negatives [(1-f) / (1-f + f_dp/2)].
// The positive denominator is clamped below at 1e-6 and the positive weight
// above at 100; clamp events are counted when a counter is supplied.
LossTerm defer_loss(double f, double f_dp, int label,
                    ClampCounters* clamps = nullptr);

// Real-negative variant of FNW (no waiting window, every event duplicated):
// positive weight 2; negative weight [1-f] * (2[1-f] / (1 + [1-f])) as the
// paper states it, or the bare ratio 2[1-f]/(1+[1-f]) when pure_is_ratio.
LossTerm fnw_rn_loss(double f, int label, bool pure_is_ratio = false);

// q/(1-q), clipped to [0,1]. q must be < 1.
double fnc_calibrate(double q_pred);

// 2q, clipped to [0,1].
double fnc_rn_calibrate(double q_pred);

}  // namespace ctr::losses

#endif  // CTR_LOSSES_LOSSES_HPP_

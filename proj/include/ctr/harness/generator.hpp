#ifndef CTR_HARNESS_GENERATOR_HPP_
#define CTR_HARNESS_GENERATOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ctr/stream/events.hpp"

namespace ctr::harness {

struct GeneratorConfig {
  int64_t num_events = 100000;
  std::vector<int32_t> vocab_sizes{200, 100, 60, 30, 12, 6};
  int num_domains = 1;
  uint64_t seed = 1;

  int64_t horizon = 12 * 86400;            // click timestamps in [0, horizon)
  int64_t attribution_window = 86400;      // calibration semantics for "CVR"
  int64_t fast_window = 900;               // 0.25 h

  double target_cvr = 0.2269;              // mean P(conversion within attribution)
  double target_fast_fraction = 0.35;      // P(z <= fast | converted)

  double cvr_logit_spread = 0.7;           // per-field weight scale
  double interaction_strength = 0.35;      // hashed pairwise cross terms
  double delay_log_spread = 0.4;           // heterogeneity of delay rates
  double delay_cvr_coupling = 0.8;         // fast conversions on high-CVR cells
  double drift_scale = 0.2;                // time-varying CVR logit component
  double feature_drift = 1.5;              // popularity rotation over time
  double feature_skew = 1.0;               // popularity skew inside a field
  double domain_cvr_shift = 0.5;           // per-domain logit offset scale
  double domain_feature_shift = 0.6;       // per-domain sampling distortion

  void validate() const;
};

GeneratorConfig criteo_like_preset();
GeneratorConfig taobao_like_preset();
GeneratorConfig preset_by_name(const std::string& name);

// Hidden per-event ground truth, never visible to models. p_convert is the
// probability of an eventual conversion; delay_rate the exponential rate.
struct EventTruth {
  double p_convert = 0.0;
  double delay_rate = 0.0;
};

// P(conversion attributed within w2 | x).
double true_attributed_prob(const EventTruth& t, int64_t w2);
// P(fake negative | x) = P(convert in (w1, w2] | x).
double true_fake_negative_prob(const EventTruth& t, int64_t w1, int64_t w2);

struct GeneratedData {
  std::vector<stream::ClickEvent> events;  // sorted by click_ts
  std::vector<EventTruth> truth;           // aligned with events
};

// Features per field, Bernoulli conversions from a hidden logistic model with
// drift, exponential delays with per-cell rates. The bias and the delay-rate
// scale are calibrated so the realized mean CVR and the fraction of fast
// conversions hit the configured targets.
GeneratedData generate_events(const GeneratorConfig& config);

}  // namespace ctr::harness

#endif  // CTR_HARNESS_GENERATOR_HPP_

#include "ctr/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ctr/errors.hpp"
#include "ctr/nn/layers.hpp"

namespace ctr::losses {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kVanilla: return "vanilla";
    case LossKind::kFnw: return "fnw";
    case LossKind::kFnc: return "fnc";
    case LossKind::kFnwRn: return "fnw-rn";
    case LossKind::kFncRn: return "fnc-rn";
    case LossKind::kDefer: return "defer";
    case LossKind::kOracle: return "oracle";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "vanilla") return LossKind::kVanilla;
  if (name == "fnw") return LossKind::kFnw;
  if (name == "fnc") return LossKind::kFnc;
  if (name == "fnw-rn") return LossKind::kFnwRn;
  if (name == "fnc-rn") return LossKind::kFncRn;
  if (name == "defer") return LossKind::kDefer;
  if (name == "oracle") return LossKind::kOracle;
  throw ConfigError("unknown loss kind: " + name);
}

namespace {

void check_label(int label) {
  if (label != 0 && label != 1) {
    throw ContractError("loss: label must be 0 or 1");
  }
}

// Weighted cross-entropy term for a frozen weight.
LossTerm weighted_term(double f, int label, double weight) {
  f = nn::clamp_prediction(f);
  LossTerm t;
  t.weight = weight;
  if (label == 1) {
    t.loss = -weight * std::log(f);
    t.dloss_df = -weight / f;
  } else {
    t.loss = -weight * std::log(1.0 - f);
    t.dloss_df = weight / (1.0 - f);
  }
  return t;
}

}  // namespace

LossTerm vanilla_logloss(double f, int label) {
  check_label(label);
  return weighted_term(f, label, 1.0);
}

LossTerm fnw_loss(double f, int label) {
  check_label(label);
  const double fs = nn::clamp_prediction(f);  // stop-gradient copy
  const double weight = label == 1 ? 1.0 + fs : (1.0 - fs) * (1.0 + fs);
  return weighted_term(f, label, weight);
}

LossTerm defer_loss(double f, double f_dp, int label, ClampCounters* clamps) {
  check_label(label);
  if (f_dp < 0.0 || f_dp > 1.0) {
    throw ContractError("defer_loss: f_dp must be in [0,1]");
  }
  const double fs = nn::clamp_prediction(f);  // stop-gradient copy
  double weight;
  if (label == 1) {
    double denom = fs - 0.5 * f_dp;
    if (denom < 1e-6) {
      denom = 1e-6;
      if (clamps != nullptr) ++clamps->denominator_clamps;
    }
    weight = fs / denom;
    if (weight > 100.0) {
      weight = 100.0;
      if (clamps != nullptr) ++clamps->weight_clamps;
    }
  } else {
    weight = (1.0 - fs) / (1.0 - fs + 0.5 * f_dp);
  }
  return weighted_term(f, label, weight);
}

LossTerm fnw_rn_loss(double f, int label, bool pure_is_ratio) {
  check_label(label);
  const double fs = nn::clamp_prediction(f);  // stop-gradient copy
  double weight;
  if (label == 1) {
    weight = 2.0;
  } else {
    const double p0 = 1.0 - fs;
    const double ratio = 2.0 * p0 / (1.0 + p0);
    weight = pure_is_ratio ? ratio : p0 * ratio;
  }
  return weighted_term(f, label, weight);
}

double fnc_calibrate(double q_pred) {
  if (q_pred >= 1.0) {
    throw ContractError("fnc_calibrate: q must be < 1");
  }
  if (q_pred < 0.0) {
    throw ContractError("fnc_calibrate: q must be >= 0");
  }
  const double p = q_pred / (1.0 - q_pred);
  return std::clamp(p, 0.0, 1.0);
}

double fnc_rn_calibrate(double q_pred) {
  if (q_pred < 0.0 || q_pred > 1.0) {
    throw ContractError("fnc_rn_calibrate: q must be in [0,1]");
  }
  return std::clamp(2.0 * q_pred, 0.0, 1.0);
}

}  // namespace ctr::losses

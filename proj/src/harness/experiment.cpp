#include "ctr/harness/experiment.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ctr/errors.hpp"

namespace ctr::harness {

void ExperimentConfig::validate() const {
  windows.validate();
  if (policy == stream::StreamPolicy::kRealNegDupApprox) {
    windows.validate_with_w3();
  }
  if (pretrain_fraction <= 0.0 || pretrain_fraction >= 1.0) {
    throw ConfigError("experiment: pretrain_fraction must be in (0,1)");
  }
  if (train.batch_size < 2) {
    throw ConfigError("experiment: batch_size must be >= 2");
  }
  if (num_domains < 1) {
    throw ConfigError("experiment: num_domains must be >= 1");
  }
  if (loss == losses::LossKind::kOracle &&
      policy != stream::StreamPolicy::kNoDup) {
    throw ConfigError("experiment: the oracle trains on the no-dup stream");
  }
}

std::string method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::kPretrained: return "Pre-trained";
    case MethodKind::kVanillaNoDup: return "Vanilla-NoDup";
    case MethodKind::kVanillaNoWin: return "Vanilla-NoWin";
    case MethodKind::kVanillaWin: return "Vanilla-Win";
    case MethodKind::kVanillaRn: return "Vanilla-RN";
    case MethodKind::kFnc: return "FNC";
    case MethodKind::kFncRn: return "FNC-RN";
    case MethodKind::kFnw: return "FNW";
    case MethodKind::kFnwRn: return "FNW-RN";
    case MethodKind::kDefer: return "DEFER";
    case MethodKind::kOracle: return "Oracle";
  }
  return "unknown";
}

std::vector<MethodKind> full_roster() {
  return {MethodKind::kPretrained, MethodKind::kVanillaNoDup,
          MethodKind::kVanillaNoWin, MethodKind::kVanillaWin,
          MethodKind::kVanillaRn, MethodKind::kFnc, MethodKind::kFncRn,
          MethodKind::kFnw, MethodKind::kFnwRn, MethodKind::kDefer,
          MethodKind::kOracle};
}

ExperimentConfig method_config(MethodKind kind, ExperimentConfig base) {
  using stream::StreamPolicy;
  using losses::LossKind;
  base.streaming_updates = kind != MethodKind::kPretrained;
  switch (kind) {
    case MethodKind::kPretrained:
    case MethodKind::kVanillaNoDup:
      base.policy = StreamPolicy::kNoDup;
      base.loss = LossKind::kVanilla;
      break;
    case MethodKind::kVanillaNoWin:
      base.policy = StreamPolicy::kNoWin;
      base.loss = LossKind::kVanilla;
      break;
    case MethodKind::kVanillaWin:
      base.policy = StreamPolicy::kWin;
      base.loss = LossKind::kVanilla;
      break;
    case MethodKind::kVanillaRn:
      base.policy = StreamPolicy::kRealNegDup;
      base.loss = LossKind::kVanilla;
      break;
    case MethodKind::kFnc:
      base.policy = StreamPolicy::kNoWin;
      base.loss = LossKind::kFnc;
      break;
    case MethodKind::kFncRn:
      // Real negatives on top of the no-window stream; one second is the
      // shortest waiting window the integer grid can express.
      base.policy = StreamPolicy::kRealNegDup;
      base.loss = LossKind::kFncRn;
      base.windows.w1 = 1;
      break;
    case MethodKind::kFnw:
      base.policy = StreamPolicy::kNoWin;
      base.loss = LossKind::kFnw;
      break;
    case MethodKind::kFnwRn:
      base.policy = StreamPolicy::kRealNegDup;
      base.loss = LossKind::kFnwRn;
      base.windows.w1 = 1;
      break;
    case MethodKind::kDefer:
      base.policy = StreamPolicy::kRealNegDup;
      base.loss = LossKind::kDefer;
      break;
    case MethodKind::kOracle:
      base.policy = StreamPolicy::kNoDup;
      base.loss = LossKind::kOracle;
      break;
  }
  return base;
}

int leak_guarded_label(const stream::ClickEvent& event,
                       const stream::WindowConfig& windows,
                       int64_t boundary_ts) {
  return event.converts() && event.delay <= windows.w2 &&
                 event.conversion_ts() <= boundary_ts
             ? 1
             : 0;
}

nn::EmbeddingConfig infer_embedding_config(
    std::span<const stream::ClickEvent> events, int embed_dim) {
  if (events.empty()) throw DataError("no events");
  const size_t fields = events.front().features.size();
  std::vector<int32_t> vocab(fields, 1);
  for (const stream::ClickEvent& e : events) {
    if (e.features.size() != fields) {
      throw DataError("events disagree on the number of feature fields");
    }
    for (size_t f = 0; f < fields; ++f) {
      vocab[f] = std::max(vocab[f], e.features[f] + 1);
    }
  }
  nn::EmbeddingConfig cfg;
  cfg.vocab_sizes = std::move(vocab);
  cfg.embed_dim = embed_dim;
  return cfg;
}

int infer_num_domains(std::span<const stream::ClickEvent> events) {
  int m = 1;
  for (const stream::ClickEvent& e : events) {
    if (e.domain < 1) throw DataError("domain ids must be >= 1");
    m = std::max(m, static_cast<int>(e.domain));
  }
  return m;
}

namespace {

using stream::ClickEvent;
using stream::StreamRecord;

// Accumulates (x, y[, f_dp]) rows and flushes optimizer steps; a lone
// leftover row is carried forward because batch-norm training needs two.
class BatchTrainer {
 public:
  BatchTrainer(CvrModel& model, const ExperimentConfig& cfg,
               losses::DpModel* dp, losses::ClampCounters* clamps)
      : model_(model), cfg_(cfg), dp_(dp), clamps_(clamps) {}

  void add(const ClickEvent& event, int label) {
    const int d =
        model_.config().kind == ModelKind::kStar ? event.domain : 1;
    Pending& p = pending_[d];
    p.xs.push_back(event.features);
    p.ys.push_back(label);
    if (p.xs.size() >= static_cast<size_t>(cfg_.train.batch_size)) flush(d, p);
  }

  // Hour boundary: flush whatever holds at least two rows.
  void flush_ready() {
    for (auto& [domain, p] : pending_) {
      if (p.xs.size() >= 2) flush(domain, p);
    }
  }

  int64_t trained() const { return trained_; }
  int64_t dropped() const {
    int64_t left = 0;
    for (const auto& [domain, p] : pending_) {
      left += static_cast<int64_t>(p.xs.size());
    }
    return left;
  }

 private:
  struct Pending {
    std::vector<nn::FeatureVec> xs;
    std::vector<int> ys;
  };

  void flush(int domain, Pending& p) {
    std::vector<double> fdp;
    if (cfg_.loss == losses::LossKind::kDefer) {
      fdp = dp_->predict_batch(p.xs);
    }
    model_.train_step(p.xs, domain, [&](double f, size_t i) {
      losses::LossTerm t = term(f, p.ys[i], fdp.empty() ? 0.0 : fdp[i]);
      if (getenv("CTR_DEBUG_WEIGHTS") && cfg_.loss == losses::LossKind::kDefer) {
        fprintf(stderr, "W %d %.4f %.4f %.4f\n", p.ys[i], f,
                fdp.empty() ? 0.0 : fdp[i], t.weight);
      }
      return t;
    });
    trained_ += static_cast<int64_t>(p.xs.size());
    p.xs.clear();
    p.ys.clear();
  }

  losses::LossTerm term(double f, int y, double fdp) const {
    using losses::LossKind;
    switch (cfg_.loss) {
      case LossKind::kFnw:
        return losses::fnw_loss(f, y);
      case LossKind::kFnwRn:
        return losses::fnw_rn_loss(f, y, cfg_.pure_is_ratio);
      case LossKind::kDefer:
        return losses::defer_loss(f, fdp, y, clamps_);
      default:
        return losses::vanilla_logloss(f, y);
    }
  }

  CvrModel& model_;
  const ExperimentConfig& cfg_;
  losses::DpModel* dp_;
  losses::ClampCounters* clamps_;
  std::map<int, Pending> pending_;
  int64_t trained_ = 0;
};

// Calibrated prediction under the configured loss kind.
double calibrated(double f, losses::LossKind loss) {
  switch (loss) {
    case losses::LossKind::kFnc:
      return losses::fnc_calibrate(std::min(f, 1.0 - 1e-9));
    case losses::LossKind::kFncRn:
      return losses::fnc_rn_calibrate(f);
    default:
      return f;
  }
}

struct EvalBatch {
  std::vector<nn::FeatureVec> xs;
  std::vector<int32_t> domains;
  std::vector<int> labels;
};

metrics::HourMetrics evaluate_batch(CvrModel& model, const EvalBatch& batch,
                                    losses::LossKind loss) {
  metrics::HourMetrics hm;
  hm.count = static_cast<int64_t>(batch.xs.size());
  if (batch.xs.empty()) return hm;

  std::vector<double> preds(batch.xs.size());
  if (model.config().kind == ModelKind::kPlain) {
    preds = model.predict(batch.xs, 1);
  } else {
    std::map<int32_t, std::vector<size_t>> by_domain;
    for (size_t i = 0; i < batch.xs.size(); ++i) {
      by_domain[batch.domains[i]].push_back(i);
    }
    for (const auto& [domain, idx] : by_domain) {
      std::vector<nn::FeatureVec> xs;
      xs.reserve(idx.size());
      for (size_t i : idx) xs.push_back(batch.xs[i]);
      const std::vector<double> p = model.predict(xs, domain);
      for (size_t k = 0; k < idx.size(); ++k) preds[idx[k]] = p[k];
    }
  }
  for (double& p : preds) p = calibrated(p, loss);

  hm.nll = metrics::nll(preds, batch.labels);
  bool has_pos = false, has_neg = false;
  for (int y : batch.labels) (y == 1 ? has_pos : has_neg) = true;
  if (has_pos && has_neg) {
    hm.auc = metrics::auc(preds, batch.labels);
  }
  if (has_pos) {
    hm.pr_auc = metrics::pr_auc(preds, batch.labels);
  }
  return hm;
}

int dp_target(const ClickEvent& e, const stream::WindowConfig& windows) {
  return stream::classify_sample(e, windows) ==
                 stream::SampleKind::kFakeNegative
             ? 1
             : 0;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::span<const stream::ClickEvent> events,
                                CvrModel* trained) {
  config.validate();
  if (events.size() < 4) throw ConfigError("experiment: too few events");

  // Chronological split.
  std::vector<size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return events[a].click_ts < events[b].click_ts;
  });
  const size_t n_pre = std::max<size_t>(
      1, static_cast<size_t>(config.pretrain_fraction *
                             static_cast<double>(events.size())));
  if (n_pre >= events.size()) {
    throw ConfigError("experiment: pretrain fraction leaves no stream data");
  }
  const int64_t boundary_ts = events[order[n_pre - 1]].click_ts;

  CvrModelConfig model_cfg;
  model_cfg.kind = config.model_kind;
  model_cfg.num_domains = config.num_domains;
  model_cfg.embeddings = infer_embedding_config(events, config.train.embed_dim);
  model_cfg.hidden = config.train.hidden;
  model_cfg.use_batch_norm = config.train.use_batch_norm;
  model_cfg.leaky_relu_slope = config.train.leaky_relu_slope;
  model_cfg.star_use_aux = config.star_use_aux;
  model_cfg.lr = config.train.lr;
  model_cfg.dlogit_clip = config.train.dlogit_clip;

  // Class-prior output-bias initialization from the leak-guarded pretrain
  // labels: fresh cells start at the base rate.
  {
    double mean = 0.0;
    for (size_t k = 0; k < n_pre; ++k) {
      mean += leak_guarded_label(events[order[k]], config.windows, boundary_ts);
    }
    model_cfg.prior = mean / static_cast<double>(n_pre);
  }

  Rng root(config.seed);
  CvrModel model = CvrModel::init(model_cfg, root.fork(1).next_u64());
  Rng shuffle_rng = root.fork(2);
  const uint64_t dp_seed = root.fork(3).next_u64();

  ExperimentResult result;
  const bool needs_dp = config.loss == losses::LossKind::kDefer;

  auto pretrain_label = [&](const ClickEvent& e) {
    return leak_guarded_label(e, config.windows, boundary_ts);
  };
  // The dp classifier pretrains on mature part-one events only: their
  // attribution window closed before the boundary, so the sample kind is
  // fully observable without leaking future conversions.
  auto dp_mature = [&](const ClickEvent& e) {
    return e.click_ts + config.windows.w2 <= boundary_ts;
  };

  std::optional<losses::DpTrainer> dp;
  if (needs_dp) {
    losses::DpModelConfig dp_cfg;
    dp_cfg.embed_dim = config.train.dp_embed_dim;
    dp_cfg.hidden = config.train.dp_hidden;
    dp_cfg.lr = config.train.dp_lr;
    dp_cfg.batch_size = config.train.batch_size;
    {
      double mean = 0.0;
      int64_t count = 0;
      for (size_t k = 0; k < n_pre; ++k) {
        const ClickEvent& e = events[order[k]];
        if (e.click_ts + config.windows.w2 > boundary_ts) continue;
        mean += dp_target(e, config.windows);
        ++count;
      }
      dp_cfg.prior = count > 0 ? mean / static_cast<double>(count) : 0.05;
    }
    nn::EmbeddingConfig dp_emb = model_cfg.embeddings;
    dp_emb.embed_dim = dp_cfg.embed_dim;
    Rng dp_rng(dp_seed);
    dp.emplace(dp_emb, dp_cfg, dp_rng);
  }

  {
    // Pretraining epochs over part one.
    std::vector<size_t> part1(order.begin(),
                              order.begin() + static_cast<long>(n_pre));
    ExperimentConfig pre_cfg = config;
    pre_cfg.loss = losses::LossKind::kVanilla;
    for (int epoch = 0; epoch < config.train.pretrain_epochs; ++epoch) {
      std::vector<size_t> idx = part1;
      shuffle_rng.shuffle(idx);
      BatchTrainer pretrainer(model, pre_cfg, nullptr, nullptr);
      for (size_t i : idx) {
        pretrainer.add(events[i], pretrain_label(events[i]));
      }
      pretrainer.flush_ready();
      if (needs_dp) {
        std::vector<nn::FeatureVec> xs;
        std::vector<int> ys;
        for (size_t i : idx) {
          if (!dp_mature(events[i])) continue;
          xs.push_back(events[i].features);
          ys.push_back(dp_target(events[i], config.windows));
          if (xs.size() >= static_cast<size_t>(config.train.batch_size)) {
            dp->update(xs, ys);
            xs.clear();
            ys.clear();
          }
        }
        if (!xs.empty()) dp->update(xs, ys);
      }
    }
  }

  // The streaming part and its ingestion stream.
  std::vector<ClickEvent> part2;
  part2.reserve(events.size() - n_pre);
  for (size_t k = n_pre; k < order.size(); ++k) {
    part2.push_back(events[order[k]]);
  }
  std::vector<StreamRecord> records =
      stream::build_stream(part2, config.policy, config.windows);
  if (config.loss == losses::LossKind::kOracle) {
    for (StreamRecord& r : records) {
      r.label = stream::eventual_label(part2[static_cast<size_t>(r.event_id)],
                                       config.windows);
    }
  }
  stream::HourlyBatches hourly = stream::chunk_by_hour(records);
  const size_t n_hours = hourly.hours.size();
  if (n_hours < 2) {
    throw ConfigError("experiment: streaming part spans fewer than 2 hours");
  }

  // Evaluation batches: first occurrences with true eventual labels.
  std::vector<EvalBatch> eval(n_hours);
  for (size_t h = 0; h < n_hours; ++h) {
    for (const StreamRecord& r : hourly.hours[h]) {
      if (r.occurrence != stream::Occurrence::kFirst) continue;
      const ClickEvent& e = part2[static_cast<size_t>(r.event_id)];
      eval[h].xs.push_back(e.features);
      eval[h].domains.push_back(e.domain);
      eval[h].labels.push_back(stream::eventual_label(e, config.windows));
    }
  }

  BatchTrainer stream_trainer(model, config, needs_dp ? &dp->model() : nullptr,
                              &result.clamps);
  std::vector<metrics::HourMetrics> hour_metrics;
  for (size_t t = 0; t < n_hours; ++t) {
    if (config.streaming_updates) {
      if (needs_dp) {
        // Refresh the fake-negative classifier on this hour's first
        // occurrences before the main model consumes the hour.
        std::vector<nn::FeatureVec> xs;
        std::vector<int> ys;
        for (const StreamRecord& r : hourly.hours[t]) {
          if (r.occurrence != stream::Occurrence::kFirst) continue;
          const ClickEvent& e = part2[static_cast<size_t>(r.event_id)];
          xs.push_back(e.features);
          ys.push_back(dp_target(e, config.windows));
          if (xs.size() >= static_cast<size_t>(config.train.batch_size)) {
            dp->update(xs, ys);
            xs.clear();
            ys.clear();
          }
        }
        if (!xs.empty()) dp->update(xs, ys);
      }
      for (const StreamRecord& r : hourly.hours[t]) {
        stream_trainer.add(part2[static_cast<size_t>(r.event_id)], r.label);
      }
      stream_trainer.flush_ready();
    }
    if (t + 1 < n_hours) {
      hour_metrics.push_back(evaluate_batch(model, eval[t + 1], config.loss));
    }
  }
  result.trained_records = stream_trainer.trained();
  result.dropped_records = stream_trainer.dropped();
  result.report = metrics::streaming_aggregate(hour_metrics);
  if (trained != nullptr) *trained = std::move(model);
  return result;
}

std::vector<SweepEntry> sweep_window(const ExperimentConfig& config,
                                     std::span<const stream::ClickEvent> events,
                                     std::span<const int64_t> w3_candidates) {
  if (w3_candidates.empty()) {
    throw ConfigError("sweep_window: no candidates");
  }
  std::vector<SweepEntry> out;
  for (int64_t w3 : w3_candidates) {
    if (w3 <= config.windows.w1 || w3 >= config.windows.w2) {
      throw ConfigError("sweep_window: candidate outside (w1, w2)");
    }
    ExperimentConfig cfg = config;
    cfg.policy = stream::StreamPolicy::kRealNegDupApprox;
    cfg.windows.w3 = w3;
    SweepEntry entry;
    entry.w3 = w3;
    entry.result = run_experiment(cfg, events);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace ctr::harness

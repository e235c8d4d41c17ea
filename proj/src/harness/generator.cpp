#include "ctr/harness/generator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ctr/errors.hpp"
#include "ctr/nn/layers.hpp"
#include "ctr/rng.hpp"

namespace ctr::harness {

void GeneratorConfig::validate() const {
  if (num_events < 1) throw ConfigError("generator: num_events must be >= 1");
  if (vocab_sizes.empty()) throw ConfigError("generator: need >= 1 field");
  for (int32_t v : vocab_sizes) {
    if (v < 1) throw ConfigError("generator: vocab sizes must be >= 1");
  }
  if (num_domains < 1) throw ConfigError("generator: num_domains must be >= 1");
  if (target_cvr <= 0.0 || target_cvr >= 1.0) {
    throw ConfigError("generator: target_cvr must be in (0,1)");
  }
  if (target_fast_fraction <= 0.0 || target_fast_fraction >= 1.0) {
    throw ConfigError("generator: target_fast_fraction must be in (0,1)");
  }
  if (horizon <= 0 || attribution_window <= 0 || fast_window <= 0 ||
      fast_window >= attribution_window) {
    throw ConfigError("generator: need 0 < fast_window < attribution_window "
                      "and horizon > 0");
  }
}

GeneratorConfig criteo_like_preset() {
  GeneratorConfig cfg;  // defaults are the criteo-like calibration
  return cfg;
}

GeneratorConfig taobao_like_preset() {
  GeneratorConfig cfg;
  cfg.target_cvr = 0.1034;
  cfg.target_fast_fraction = 0.55;
  return cfg;
}

GeneratorConfig preset_by_name(const std::string& name) {
  if (name == "criteo-like") return criteo_like_preset();
  if (name == "taobao-like") return taobao_like_preset();
  throw ConfigError("unknown preset: " + name);
}

double true_attributed_prob(const EventTruth& t, int64_t w2) {
  return t.p_convert * (1.0 - std::exp(-t.delay_rate * static_cast<double>(w2)));
}

double true_fake_negative_prob(const EventTruth& t, int64_t w1, int64_t w2) {
  const double r = t.delay_rate;
  return t.p_convert * (std::exp(-r * static_cast<double>(w1)) -
                        std::exp(-r * static_cast<double>(w2)));
}

namespace {

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

double hash_uniform(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  uint64_t x = mix64(seed ^ mix64(a + 0x51ed2701) ^ mix64(b * 0x9e3779b9 + 7) ^
                     mix64(c + 0xabcdef123));
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

double hash_gauss(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  const double u1 = std::max(hash_uniform(seed, a, b, c), 1e-12);
  const double u2 = hash_uniform(seed ^ 0x5555aaaa, a, b, c);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Monotone scalar root find on [lo, hi]; f must change sign.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              const char* what) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw ConfigError(std::string("generator calibration unachievable: ") +
                      what);
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GeneratedData generate_events(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng feature_rng = rng.fork(1);
  Rng label_rng = rng.fork(2);
  Rng delay_rng = rng.fork(3);
  Rng ts_rng = rng.fork(4);
  const uint64_t hash_seed = mix64(cfg.seed ^ 0xfeedbeef);

  const size_t fields = cfg.vocab_sizes.size();
  const size_t n = static_cast<size_t>(cfg.num_events);
  const int m = cfg.num_domains;

  // Ground-truth per-(field,value) weights: conversion logit, drift
  // component, delay-rate component.
  std::vector<std::vector<double>> w_cvr(fields), w_drift(fields), w_delay(fields);
  for (size_t f = 0; f < fields; ++f) {
    const size_t vocab = static_cast<size_t>(cfg.vocab_sizes[f]);
    w_cvr[f].resize(vocab);
    w_drift[f].resize(vocab);
    w_delay[f].resize(vocab);
    for (size_t v = 0; v < vocab; ++v) {
      w_cvr[f][v] = cfg.cvr_logit_spread * hash_gauss(hash_seed, 1, f, v);
      w_drift[f][v] = hash_gauss(hash_seed, 2, f, v);
      w_delay[f][v] = hash_gauss(hash_seed, 3, f, v);
    }
  }

  // Per-(phase bucket, domain, field) sampling distributions as cumulative
  // tables: popularity skew, a domain-specific distortion, and a popularity
  // rotation over the horizon (campaigns rise and fall).
  constexpr int kPhaseBuckets = 32;
  std::vector<std::vector<std::vector<std::vector<double>>>> cumulative(
      kPhaseBuckets,
      std::vector<std::vector<std::vector<double>>>(
          static_cast<size_t>(m), std::vector<std::vector<double>>(fields)));
  for (int b = 0; b < kPhaseBuckets; ++b) {
    const double phase = (static_cast<double>(b) + 0.5) /
                         static_cast<double>(kPhaseBuckets);
    for (int d = 0; d < m; ++d) {
      for (size_t f = 0; f < fields; ++f) {
        const size_t vocab = static_cast<size_t>(cfg.vocab_sizes[f]);
        std::vector<double>& cum =
            cumulative[static_cast<size_t>(b)][static_cast<size_t>(d)][f];
        cum.resize(vocab);
        double total = 0.0;
        for (size_t v = 0; v < vocab; ++v) {
          const double base =
              -cfg.feature_skew * std::log1p(static_cast<double>(v));
          const double shift = d == 0 ? 0.0
                                      : cfg.domain_feature_shift *
                                            hash_gauss(hash_seed, 4 + d, f, v);
          const double rotation = cfg.feature_drift * (phase - 0.5) * 2.0 *
                                  hash_gauss(hash_seed, 40, f, v);
          total += std::exp(base + shift + rotation);
          cum[v] = total;
        }
        for (size_t v = 0; v < vocab; ++v) cum[v] /= total;
      }
    }
  }

  // Domain traffic shares decay with the domain index.
  std::vector<double> domain_cum(static_cast<size_t>(m));
  {
    double total = 0.0;
    for (int d = 0; d < m; ++d) {
      total += 1.0 / std::sqrt(static_cast<double>(d + 1));
      domain_cum[static_cast<size_t>(d)] = total;
    }
    for (double& v : domain_cum) v /= total;
  }

  GeneratedData data;
  data.events.resize(n);
  data.truth.resize(n);
  std::vector<double> raw_logit(n), delay_score(n);

  for (size_t i = 0; i < n; ++i) {
    stream::ClickEvent& e = data.events[i];
    const double du = feature_rng.uniform();
    int domain = 1;
    while (domain < m && du > domain_cum[static_cast<size_t>(domain - 1)]) {
      ++domain;
    }
    e.domain = domain;
    e.click_ts = static_cast<int64_t>(ts_rng.uniform() *
                                      static_cast<double>(cfg.horizon));
    const int bucket = std::min<int>(
        kPhaseBuckets - 1,
        static_cast<int>(static_cast<double>(e.click_ts) * kPhaseBuckets /
                         static_cast<double>(cfg.horizon)));
    e.features.resize(fields);
    double logit = 0.0, drift = 0.0, dscore = 0.0;
    for (size_t f = 0; f < fields; ++f) {
      const std::vector<double>& cum =
          cumulative[static_cast<size_t>(bucket)][static_cast<size_t>(domain - 1)][f];
      const double u = feature_rng.uniform();
      const size_t v = static_cast<size_t>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      const size_t value = std::min(v, cum.size() - 1);
      e.features[f] = static_cast<int32_t>(value);
      logit += w_cvr[f][value];
      drift += w_drift[f][value];
      dscore += w_delay[f][value];
    }
    // Hashed pairwise interactions on the first two field pairs keep the
    // true function outside the additive family the embeddings can represent.
    if (cfg.interaction_strength != 0.0 && fields >= 2) {
      logit += cfg.interaction_strength *
               hash_gauss(hash_seed, 100, static_cast<uint64_t>(e.features[0]),
                          static_cast<uint64_t>(e.features[1]));
      if (fields >= 4) {
        logit += cfg.interaction_strength *
                 hash_gauss(hash_seed, 101, static_cast<uint64_t>(e.features[2]),
                            static_cast<uint64_t>(e.features[3]));
      }
    }
    if (m > 1) {
      logit += cfg.domain_cvr_shift * hash_gauss(hash_seed, 200, 0,
                                                 static_cast<uint64_t>(domain));
    }
    const double phase = static_cast<double>(e.click_ts) /
                         static_cast<double>(cfg.horizon);
    logit += cfg.drift_scale * phase * drift;
    raw_logit[i] = logit;
    delay_score[i] = dscore;
  }

  // Standardize both score channels, then couple the delay rate to the
  // conversion logit: high-CVR cells convert faster when coupling > 0.
  {
    auto standardize = [n](std::vector<double>& v) {
      double mean = 0.0, var = 0.0;
      for (double s : v) mean += s;
      mean /= static_cast<double>(n);
      for (double s : v) var += (s - mean) * (s - mean);
      var = std::max(var / static_cast<double>(n), 1e-12);
      const double inv_std = 1.0 / std::sqrt(var);
      for (double& s : v) s = (s - mean) * inv_std;
    };
    standardize(delay_score);
    std::vector<double> logit_z = raw_logit;
    standardize(logit_z);
    const double c = cfg.delay_cvr_coupling;
    const double mix = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (size_t i = 0; i < n; ++i) {
      delay_score[i] = c * logit_z[i] + mix * delay_score[i];
    }
  }

  // Base delay-rate shapes; a global scale is calibrated below.
  std::vector<double> rate_shape(n);
  for (size_t i = 0; i < n; ++i) {
    rate_shape[i] = std::exp(cfg.delay_log_spread * delay_score[i]);
  }

  const double w2 = static_cast<double>(cfg.attribution_window);
  const double fast = static_cast<double>(cfg.fast_window);

  // Joint calibration of the logit bias (mean attributed CVR) and the rate
  // scale (fraction of fast conversions); the two interact weakly.
  double bias = 0.0;
  double rate_scale = 1.0 / (0.25 * w2);
  for (int round = 0; round < 3; ++round) {
    std::vector<double> p_attr_weight(n);
    rate_scale = bisect(
        [&](double c) {
          double fast_mass = 0.0, attr_mass = 0.0;
          for (size_t i = 0; i < n; ++i) {
            const double p = nn::sigmoid(raw_logit[i] + bias);
            const double r = c * rate_shape[i];
            fast_mass += p * (1.0 - std::exp(-r * fast));
            attr_mass += p * (1.0 - std::exp(-r * w2));
          }
          return fast_mass / attr_mass - cfg.target_fast_fraction;
        },
        1e-9, 10.0, "fast-conversion fraction");
    std::vector<double> q2(n);
    for (size_t i = 0; i < n; ++i) {
      q2[i] = 1.0 - std::exp(-rate_scale * rate_shape[i] * w2);
    }
    bias = bisect(
        [&](double b) {
          double mass = 0.0;
          for (size_t i = 0; i < n; ++i) {
            mass += nn::sigmoid(raw_logit[i] + b) * q2[i];
          }
          return mass / static_cast<double>(n) - cfg.target_cvr;
        },
        -30.0, 30.0, "mean CVR");
  }

  for (size_t i = 0; i < n; ++i) {
    stream::ClickEvent& e = data.events[i];
    EventTruth& t = data.truth[i];
    t.p_convert = nn::sigmoid(raw_logit[i] + bias);
    t.delay_rate = rate_scale * rate_shape[i];
    if (label_rng.bernoulli(t.p_convert)) {
      const double z = delay_rng.exponential(t.delay_rate);
      e.delay = std::max<int64_t>(1, std::llround(z));
    } else {
      e.delay = stream::kNeverConverts;
    }
  }

  // Chronological order keeps downstream splits simple.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (data.events[a].click_ts != data.events[b].click_ts) {
      return data.events[a].click_ts < data.events[b].click_ts;
    }
    return a < b;
  });
  GeneratedData sorted;
  sorted.events.reserve(n);
  sorted.truth.reserve(n);
  for (size_t i : order) {
    sorted.events.push_back(std::move(data.events[i]));
    sorted.truth.push_back(data.truth[i]);
  }
  return sorted;
}

}  // namespace ctr::harness

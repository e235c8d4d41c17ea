#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "ctr/errors.hpp"
#include "ctr/stream/build.hpp"
#include "ctr/stream/window_model.hpp"

using namespace ctr;
using stream::ClickEvent;
using stream::Occurrence;
using stream::SampleKind;
using stream::StreamPolicy;
using stream::StreamRecord;
using stream::WindowConfig;

namespace {

ClickEvent event(int64_t click_ts, int64_t delay, int32_t feature = 0,
                 int32_t domain = 1) {
  ClickEvent e;
  e.features = {feature};
  e.domain = domain;
  e.click_ts = click_ts;
  e.delay = delay;
  return e;
}

constexpr int64_t kH = 3600;
const WindowConfig kWindows{static_cast<int64_t>(0.25 * kH), 24 * kH,
                            std::nullopt};

std::map<int64_t, std::vector<StreamRecord>> by_event(
    const std::vector<StreamRecord>& records) {
  std::map<int64_t, std::vector<StreamRecord>> out;
  for (const StreamRecord& r : records) out[r.event_id].push_back(r);
  return out;
}

}  // namespace

TEST_CASE("classify_sample: window taxonomy") {
  CHECK(stream::classify_sample(event(0, static_cast<int64_t>(0.1 * kH)),
                                kWindows) == SampleKind::kPositive);
  CHECK(stream::classify_sample(event(0, 2 * kH), kWindows) ==
        SampleKind::kFakeNegative);
  CHECK(stream::classify_sample(event(0, stream::kNeverConverts), kWindows) ==
        SampleKind::kRealNegative);
  CHECK(stream::classify_sample(event(0, 30 * kH), kWindows) ==
        SampleKind::kRealNegative);
  // Boundaries count as inside.
  CHECK(stream::classify_sample(event(0, kWindows.w1), kWindows) ==
        SampleKind::kPositive);
  CHECK(stream::classify_sample(event(0, kWindows.w2), kWindows) ==
        SampleKind::kFakeNegative);
}

TEST_CASE("window config validation") {
  const WindowConfig zero_w1{0, 100, std::nullopt};
  CHECK_THROWS_AS(zero_w1.validate(), ConfigError);
  const WindowConfig equal{100, 100, std::nullopt};
  CHECK_THROWS_AS(equal.validate(), ConfigError);
  const WindowConfig w3_low{100, 200, 50};
  CHECK_THROWS_AS(w3_low.validate(), ConfigError);
  const WindowConfig no_w3{100, 200, std::nullopt};
  CHECK_THROWS_AS(no_w3.validate_with_w3(), ConfigError);
  const WindowConfig good{100, 200, 150};
  good.validate_with_w3();
}

TEST_CASE("build_stream: per-policy record layout") {
  std::vector<ClickEvent> events;
  events.push_back(event(1000, 60));                       // positive
  events.push_back(event(2000, 2 * kH));                   // fake negative
  events.push_back(event(3000, stream::kNeverConverts));   // real negative

  SUBCASE("no-dup emits one window-labeled record per event") {
    auto records = stream::build_stream(events, StreamPolicy::kNoDup, kWindows);
    REQUIRE(records.size() == 3);
    for (const StreamRecord& r : records) {
      CHECK(r.occurrence == Occurrence::kFirst);
      const ClickEvent& e = stream::source(r, events);
      CHECK(r.ingest_ts == e.click_ts + kWindows.w1);
      CHECK(r.label == (e.delay <= kWindows.w1 ? 1 : 0));
    }
  }

  SUBCASE("no-win ingests immediately, duplicates conversions at z") {
    auto records = stream::build_stream(events, StreamPolicy::kNoWin, kWindows);
    REQUIRE(records.size() == 5);  // three firsts + two conversion dups
    auto groups = by_event(records);
    CHECK(groups[0][0].ingest_ts == 1000);
    CHECK(groups[0][0].label == 0);
    CHECK(groups[0][1].ingest_ts == 1060);
    CHECK(groups[0][1].label == 1);
    CHECK(groups[1][1].ingest_ts == 2000 + 2 * kH);
    CHECK(groups[2].size() == 1);
  }

  SUBCASE("win duplicates only fake negatives") {
    auto records = stream::build_stream(events, StreamPolicy::kWin, kWindows);
    REQUIRE(records.size() == 4);
    auto groups = by_event(records);
    CHECK(groups[0].size() == 1);  // immediate positive not duplicated
    CHECK(groups[0][0].label == 1);
    CHECK(groups[1].size() == 2);
    CHECK(groups[1][1].label == 1);
    CHECK(groups[1][1].ingest_ts == 2000 + 2 * kH);
    CHECK(groups[2].size() == 1);
  }

  SUBCASE("real-neg-dup duplicates everything with the eventual label") {
    auto records =
        stream::build_stream(events, StreamPolicy::kRealNegDup, kWindows);
    REQUIRE(records.size() == 6);
    auto groups = by_event(records);
    // Immediate positive: both records labeled 1 at click+w1.
    CHECK(groups[0][0].label == 1);
    CHECK(groups[0][1].label == 1);
    CHECK(groups[0][1].ingest_ts == 1000 + kWindows.w1);
    // Fake negative: 0 then 1 at conversion time.
    CHECK(groups[1][0].label == 0);
    CHECK(groups[1][1].label == 1);
    // Real negative: 0 then confirmed 0 at click+w2.
    CHECK(groups[2][0].label == 0);
    CHECK(groups[2][1].label == 0);
    CHECK(groups[2][1].ingest_ts == 3000 + kWindows.w2);
  }

  SUBCASE("approximation window relabels slow conversions") {
    WindowConfig w = kWindows;
    w.w3 = 1 * kH;  // shorter than the fake negative's 2h delay
    auto records =
        stream::build_stream(events, StreamPolicy::kRealNegDupApprox, w);
    REQUIRE(records.size() == 6);
    auto groups = by_event(records);
    // The 2h conversion now looks like a real negative at click+w3.
    CHECK(groups[1][1].label == 0);
    CHECK(groups[1][1].ingest_ts == 2000 + 1 * kH);
    CHECK(groups[2][1].ingest_ts == 3000 + 1 * kH);

    // A conversion inside w3 is still a confirmed positive.
    w.w3 = 3 * kH;
    records = stream::build_stream(events, StreamPolicy::kRealNegDupApprox, w);
    groups = by_event(records);
    CHECK(groups[1][1].label == 1);
    CHECK(groups[1][1].ingest_ts == 2000 + 2 * kH);

    CHECK_THROWS_AS(
        stream::build_stream(events, StreamPolicy::kRealNegDupApprox,
                             kWindows),
        ConfigError);
  }
}

TEST_CASE("build_stream: cardinalities, ordering and label soundness on "
          "random events") {
  Rng rng(71);
  std::vector<ClickEvent> events;
  int64_t fake = 0, within_w2 = 0;
  for (int i = 0; i < 4000; ++i) {
    int64_t delay;
    const double u = rng.uniform();
    if (u < 0.3) {
      delay = 1 + static_cast<int64_t>(rng.uniform() * kWindows.w1);
    } else if (u < 0.55) {
      delay = kWindows.w1 + 1 +
              static_cast<int64_t>(rng.uniform() * (kWindows.w2 - kWindows.w1));
    } else if (u < 0.6) {
      delay = kWindows.w2 + 1 + static_cast<int64_t>(rng.uniform() * kH * 10);
    } else {
      delay = stream::kNeverConverts;
    }
    events.push_back(event(static_cast<int64_t>(rng.uniform() * kH * 100),
                           delay));
    const SampleKind kind = stream::classify_sample(events.back(), kWindows);
    fake += kind == SampleKind::kFakeNegative;
    within_w2 += events.back().delay <= kWindows.w2;
  }
  const auto n = static_cast<int64_t>(events.size());

  CHECK(static_cast<int64_t>(
            stream::build_stream(events, StreamPolicy::kNoDup, kWindows)
                .size()) == n);
  CHECK(static_cast<int64_t>(
            stream::build_stream(events, StreamPolicy::kWin, kWindows)
                .size()) == n + fake);
  CHECK(static_cast<int64_t>(
            stream::build_stream(events, StreamPolicy::kNoWin, kWindows)
                .size()) == n + within_w2);
  auto rn = stream::build_stream(events, StreamPolicy::kRealNegDup, kWindows);
  CHECK(static_cast<int64_t>(rn.size()) == 2 * n);

  // Sorted, and a duplicate never precedes its first occurrence.
  std::map<int64_t, bool> seen_first;
  for (size_t i = 0; i < rn.size(); ++i) {
    if (i > 0) CHECK(rn[i].ingest_ts >= rn[i - 1].ingest_ts);
    if (rn[i].occurrence == Occurrence::kFirst) {
      seen_first[rn[i].event_id] = true;
    } else {
      CHECK(seen_first[rn[i].event_id]);
    }
    CHECK(rn[i].ingest_ts >= stream::source(rn[i], events).click_ts);
  }

  // Label multiset: {1,1} for immediate positives, {0, eventual} otherwise.
  auto groups = by_event(rn);
  for (const auto& [id, recs] : groups) {
    REQUIRE(recs.size() == 2);
    const ClickEvent& e = events[static_cast<size_t>(id)];
    const int eventual = stream::eventual_label(e, kWindows);
    if (stream::classify_sample(e, kWindows) == SampleKind::kPositive) {
      CHECK(recs[0].label == 1);
      CHECK(recs[1].label == 1);
    } else {
      CHECK(recs[0].label == 0);
      CHECK(recs[1].label == eventual);
    }
  }

  // Feature marginal: every event contributes exactly two records.
  std::map<int32_t, int64_t> event_count, record_count;
  for (const ClickEvent& e : events) event_count[e.features[0]] += 2;
  for (const StreamRecord& r : rn) {
    record_count[stream::source(r, events).features[0]] += 1;
  }
  CHECK(event_count == record_count);
}

TEST_CASE("build_stream: biased label distributions match the closed forms") {
  // Discrete cell, p(y=1|x) = 0.4, p(z > w1 | convert) = 0.5; all conversions
  // inside w2. Checked against the real-negative-duplication identity
  // q(y=0|x) = p0 + p_dp/2 and the no-window identity q(y=1|x) = p/(1+p).
  Rng rng(123);
  const int64_t n = 200000;
  std::vector<ClickEvent> events;
  events.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    int64_t delay = stream::kNeverConverts;
    if (rng.bernoulli(0.4)) {
      delay = rng.bernoulli(0.5) ? kWindows.w1 / 2 : (kWindows.w1 + kWindows.w2) / 2;
    }
    events.push_back(event(static_cast<int64_t>(rng.uniform() * kH), delay));
  }

  auto rn = stream::build_stream(events, StreamPolicy::kRealNegDup, kWindows);
  int64_t zeros = 0;
  for (const StreamRecord& r : rn) zeros += r.label == 0;
  const double q0 = static_cast<double>(zeros) / static_cast<double>(rn.size());
  CHECK(q0 == doctest::Approx(0.6 + 0.5 * 0.2).epsilon(0.02));  // 0.7

  auto nw = stream::build_stream(events, StreamPolicy::kNoWin, kWindows);
  int64_t ones = 0;
  for (const StreamRecord& r : nw) ones += r.label == 1;
  const double q1 = static_cast<double>(ones) / static_cast<double>(nw.size());
  CHECK(q1 == doctest::Approx(0.4 / 1.4).epsilon(0.02));
}

TEST_CASE("build_stream: rejects invalid event timing") {
  std::vector<ClickEvent> events{event(-5, 100)};
  CHECK_THROWS_AS(stream::build_stream(events, StreamPolicy::kNoDup, kWindows),
                  ContractError);
  std::vector<ClickEvent> zero_delay{event(10, 0)};
  CHECK_THROWS_AS(
      stream::build_stream(zero_delay, StreamPolicy::kNoDup, kWindows),
      ContractError);
}

TEST_CASE("chunk_by_hour: batching and contracts") {
  std::vector<StreamRecord> records;
  CHECK(stream::chunk_by_hour(records).hours.empty());

  records.push_back({0, 0, 10, Occurrence::kFirst});
  records.push_back({1, 0, 3610, Occurrence::kFirst});
  auto two = stream::chunk_by_hour(records);
  REQUIRE(two.hours.size() == 2);
  CHECK(two.first_hour == 0);
  CHECK(two.hours[0].size() == 1);
  CHECK(two.hours[1].size() == 1);

  // Empty hours preserved between occupied ones.
  records.push_back({2, 0, 4 * kH + 5, Occurrence::kFirst});
  auto gap = stream::chunk_by_hour(records);
  REQUIRE(gap.hours.size() == 5);
  CHECK(gap.hours[2].empty());
  CHECK(gap.hours[3].empty());

  std::vector<StreamRecord> all_one_hour;
  for (int i = 0; i < 7; ++i) {
    all_one_hour.push_back({i, 0, 7200 + i * 100, Occurrence::kFirst});
  }
  auto one = stream::chunk_by_hour(all_one_hour);
  REQUIRE(one.hours.size() == 1);
  CHECK(one.first_hour == 2);
  CHECK(one.hours[0].size() == 7);

  std::vector<StreamRecord> unsorted{{0, 0, 100, Occurrence::kFirst},
                                     {1, 0, 50, Occurrence::kFirst}};
  CHECK_THROWS_AS(stream::chunk_by_hour(unsorted), ContractError);
}

TEST_CASE("window model: degenerate candidate sets and tie-breaks") {
  Rng rng(9);
  nn::EmbeddingConfig features;
  features.vocab_sizes = {2};
  features.embed_dim = 2;

  std::vector<ClickEvent> events;
  for (int i = 0; i < 64; ++i) {
    events.push_back(event(0, 60, i % 2));
  }

  stream::WindowModelConfig cfg;
  cfg.epochs = 1;
  stream::WindowModel single = stream::train_window_model(
      events, {900}, features, cfg, rng);
  CHECK(stream::predict_waiting_window(single, {0}) == 900);

  CHECK_THROWS_AS(
      stream::train_window_model(events, {}, features, cfg, rng),
      ContractError);

  // Uniform distribution over two candidates: the shorter one wins. Zeroed
  // output weights make the softmax exactly uniform.
  stream::WindowModel uniform = stream::train_window_model(
      events, {900, 3600}, features, stream::WindowModelConfig{2, {4}, 0, 32,
                                                               0.01},
      rng);
  uniform.net.dense.back().w.fill(0.0);
  std::fill(uniform.net.dense.back().b.begin(),
            uniform.net.dense.back().b.end(), 0.0);
  const std::vector<double> probs = stream::window_class_probs(uniform, {0});
  CHECK(probs[0] == doctest::Approx(probs[1]));
  CHECK(stream::predict_waiting_window(uniform, {0}) == 900);
}

TEST_CASE("window model: learns that slow groups need longer windows") {
  // Group A converts fast, group B slowly; over seeds the predicted waiting
  // window for A should not exceed B's.
  int ordered = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(static_cast<uint64_t>(1000 + seed));
    std::vector<ClickEvent> events;
    for (int i = 0; i < 3000; ++i) {
      const bool slow = rng.bernoulli(0.5);
      const double mean_delay = slow ? 6000.0 : 300.0;
      const int64_t delay =
          std::max<int64_t>(1, static_cast<int64_t>(
                                   rng.exponential(1.0 / mean_delay)));
      events.push_back(event(0, delay, slow ? 1 : 0));
    }
    nn::EmbeddingConfig features;
    features.vocab_sizes = {2};
    features.embed_dim = 4;
    stream::WindowModelConfig cfg;
    cfg.epochs = 8;
    stream::WindowModel model = stream::train_window_model(
        events, {600, 3600, 14400}, features, cfg, rng);
    const int64_t wa = stream::predict_waiting_window(model, {0});
    const int64_t wb = stream::predict_waiting_window(model, {1});
    if (wa <= wb) ++ordered;
  }
  CHECK(ordered >= 9);
}

TEST_CASE("attribution window prediction stays inside (w1, w2)") {
  Rng rng(77);
  nn::EmbeddingConfig features;
  features.vocab_sizes = {2};
  features.embed_dim = 2;
  std::vector<ClickEvent> events;
  for (int i = 0; i < 64; ++i) events.push_back(event(0, 3000, i % 2));
  stream::WindowModelConfig cfg;
  cfg.epochs = 1;

  WindowConfig windows{900, 9 * 86400 + 1, std::nullopt};
  // The published sweep grid in days fits inside (w1, w2).
  std::vector<int64_t> days{86400, 3 * 86400, 5 * 86400, 7 * 86400, 9 * 86400};
  stream::WindowModel model = stream::train_window_model(
      events, days, features, cfg, rng);
  const int64_t w3 = stream::predict_attribution_window(model, {0}, windows);
  CHECK(w3 > windows.w1);
  CHECK(w3 < windows.w2);

  stream::WindowModel bad = stream::train_window_model(
      events, {600}, features, cfg, rng);
  CHECK_THROWS_AS(stream::predict_attribution_window(bad, {0}, windows),
                  ContractError);

  stream::WindowModel single = stream::train_window_model(
      events, {3 * 86400}, features, cfg, rng);
  CHECK(stream::predict_attribution_window(single, {0}, windows) == 3 * 86400);
}

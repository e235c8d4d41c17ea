#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ctr/errors.hpp"
#include "ctr/harness/config.hpp"
#include "ctr/harness/experiment.hpp"
#include "ctr/harness/generator.hpp"
#include "ctr/harness/loader.hpp"
#include "ctr/harness/report_io.hpp"
#include "ctr/io/tensor_file.hpp"

using namespace ctr;
using harness::ExperimentConfig;
using harness::GeneratorConfig;
using stream::ClickEvent;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.windows = {900, 6 * 3600, std::nullopt};
  cfg.policy = stream::StreamPolicy::kRealNegDup;
  cfg.loss = losses::LossKind::kVanilla;
  cfg.train.embed_dim = 4;
  cfg.train.hidden = {8};
  cfg.train.batch_size = 64;
  cfg.train.pretrain_epochs = 1;
  cfg.seed = 11;
  return cfg;
}

GeneratorConfig small_generator(uint64_t seed) {
  GeneratorConfig gen;
  gen.num_events = 6000;
  gen.vocab_sizes = {20, 10, 5};
  gen.seed = seed;
  gen.horizon = 2 * 86400;
  gen.attribution_window = 6 * 3600;
  return gen;
}

}  // namespace

TEST_CASE("duration parsing") {
  CHECK(harness::parse_duration("900") == 900);
  CHECK(harness::parse_duration("0.25h") == 900);
  CHECK(harness::parse_duration("7d") == 7 * 86400);
  CHECK(harness::parse_duration("30m") == 1800);
  CHECK(harness::parse_duration("15s") == 15);
  CHECK_THROWS_AS(harness::parse_duration("7w"), ConfigError);
  CHECK_THROWS_AS(harness::parse_duration(""), ConfigError);
  CHECK_THROWS_AS(harness::parse_duration("abc"), ConfigError);

  const std::vector<int64_t> grid =
      harness::parse_duration_list("1d, 3d,5d,7d , 9d");
  CHECK(grid == std::vector<int64_t>{86400, 3 * 86400, 5 * 86400, 7 * 86400,
                                     9 * 86400});
}

TEST_CASE("key-value config") {
  harness::KeyValueConfig kv = harness::KeyValueConfig::from_string(
      "# comment\n"
      "w1 = 0.25h\n"
      "hidden = 32,16\n"
      "lr = 0.005\n"
      "batch_norm = true\n"
      "seed=7\n");
  CHECK(kv.get_duration("w1", 0) == 900);
  CHECK(kv.get_int_list("hidden", {}) == std::vector<int>{32, 16});
  CHECK(kv.get_double("lr", 0.0) == doctest::Approx(0.005));
  CHECK(kv.get_bool("batch_norm", false));
  CHECK(kv.get_int("seed", 0) == 7);
  CHECK(kv.get_int("missing", 42) == 42);
  CHECK_THROWS_AS(kv.require_known({"w1", "hidden", "lr", "batch_norm"}),
                  ConfigError);
  CHECK_THROWS_AS(harness::KeyValueConfig::from_string("just a line\n"),
                  ConfigError);
}

TEST_CASE("event file: save/load round trip and parse errors") {
  Rng rng(3);
  std::vector<ClickEvent> events;
  for (int i = 0; i < 200; ++i) {
    ClickEvent e;
    e.features = {static_cast<int32_t>(rng.index(9)),
                  static_cast<int32_t>(rng.index(4))};
    e.domain = 1 + static_cast<int32_t>(rng.index(3));
    e.click_ts = static_cast<int64_t>(rng.uniform() * 1e6);
    e.delay = rng.bernoulli(0.3)
                  ? 1 + static_cast<int64_t>(rng.uniform() * 1e5)
                  : stream::kNeverConverts;
    events.push_back(e);
  }
  const std::string path = "/tmp/ctr_events_roundtrip.tsv";
  harness::save_events(path, events);
  std::vector<ClickEvent> loaded = harness::load_events(path);
  REQUIRE(loaded.size() == events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    CHECK(loaded[i].features == events[i].features);
    CHECK(loaded[i].domain == events[i].domain);
    CHECK(loaded[i].click_ts == events[i].click_ts);
    CHECK(loaded[i].delay == events[i].delay);
  }
  std::remove(path.c_str());

  auto expect_data_error = [&](const std::string& content,
                               const std::string& needle) {
    const std::string bad_path = "/tmp/ctr_events_bad.tsv";
    std::ofstream out(bad_path);
    out << content;
    out.close();
    try {
      harness::load_events(bad_path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
    std::remove(bad_path.c_str());
  };
  // Conversion before click, rejected with the line number.
  expect_data_error("100\t50\t1\t3\n", "line 1");
  // Missing click timestamp.
  expect_data_error("\t\t1\t3\n", "line 1");
  // Garbage feature id on line 2.
  expect_data_error("100\t200\t1\t3\n100\t200\t1\tx\n", "line 2");

  // Empty conversion column means no conversion.
  {
    const std::string p2 = "/tmp/ctr_events_empty_conv.tsv";
    std::ofstream out(p2);
    out << "100\t\t2\t5\t1\n";
    out.close();
    std::vector<ClickEvent> ev = harness::load_events(p2);
    REQUIRE(ev.size() == 1);
    CHECK_FALSE(ev[0].converts());
    CHECK(ev[0].domain == 2);
    CHECK(ev[0].features == nn::FeatureVec{5, 1});
    std::remove(p2.c_str());
  }

  // The criteo profile has no domain column.
  {
    const std::string p3 = "/tmp/ctr_events_criteo.tsv";
    std::ofstream out(p3);
    out << "100\t200\t5\t1\n";
    out.close();
    std::vector<ClickEvent> ev =
        harness::load_events(p3, harness::FormatProfile::criteo());
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].domain == 1);
    CHECK(ev[0].delay == 100);
    CHECK(ev[0].features == nn::FeatureVec{5, 1});
    std::remove(p3.c_str());
  }
}

TEST_CASE("generator: validation and per-event truth consistency") {
  GeneratorConfig gen = small_generator(5);
  gen.target_cvr = 1.5;
  CHECK_THROWS_AS(harness::generate_events(gen), ConfigError);

  gen = small_generator(5);
  harness::GeneratedData data = harness::generate_events(gen);
  REQUIRE(data.events.size() == static_cast<size_t>(gen.num_events));
  REQUIRE(data.truth.size() == data.events.size());
  int64_t prev_ts = -1;
  for (size_t i = 0; i < data.events.size(); ++i) {
    const ClickEvent& e = data.events[i];
    CHECK(e.click_ts >= prev_ts);
    prev_ts = e.click_ts;
    CHECK(e.delay > 0);
    CHECK(data.truth[i].p_convert > 0.0);
    CHECK(data.truth[i].p_convert < 1.0);
    CHECK(data.truth[i].delay_rate > 0.0);
  }

  // Empirical CVR within the attribution window tracks the mean hidden
  // probability.
  double expected = 0.0, observed = 0.0;
  for (size_t i = 0; i < data.events.size(); ++i) {
    expected += harness::true_attributed_prob(data.truth[i],
                                              gen.attribution_window);
    observed += data.events[i].delay <= gen.attribution_window ? 1.0 : 0.0;
  }
  expected /= static_cast<double>(data.events.size());
  observed /= static_cast<double>(data.events.size());
  CHECK(std::fabs(expected - gen.target_cvr) < 0.002);  // calibrated mean
  CHECK(std::fabs(observed - expected) < 0.02);         // sampling noise

  // Same seed, same bytes; different seed, different draw.
  harness::GeneratedData again = harness::generate_events(gen);
  REQUIRE(again.events.size() == data.events.size());
  bool same = true;
  for (size_t i = 0; i < data.events.size(); ++i) {
    same = same && again.events[i].click_ts == data.events[i].click_ts &&
           again.events[i].delay == data.events[i].delay &&
           again.events[i].features == data.events[i].features;
  }
  CHECK(same);
  gen.seed = 6;
  harness::GeneratedData other = harness::generate_events(gen);
  bool different = false;
  for (size_t i = 0; i < data.events.size() && !different; ++i) {
    different = other.events[i].delay != data.events[i].delay ||
                other.events[i].features != data.events[i].features;
  }
  CHECK(different);
}

TEST_CASE("generator: unreachable delay calibration is a configuration "
          "error") {
  GeneratorConfig gen = small_generator(5);
  gen.target_fast_fraction = 0.005;  // below the exponential family's floor
  CHECK_THROWS_AS(harness::generate_events(gen), ConfigError);
}

TEST_CASE("generator: multi-domain presets shift feature distributions") {
  GeneratorConfig gen = small_generator(9);
  gen.num_events = 20000;
  gen.num_domains = 3;
  harness::GeneratedData data = harness::generate_events(gen);
  std::vector<int64_t> count(4, 0);
  std::vector<std::vector<int64_t>> hist(4, std::vector<int64_t>(20, 0));
  for (const ClickEvent& e : data.events) {
    REQUIRE(e.domain >= 1);
    REQUIRE(e.domain <= 3);
    count[static_cast<size_t>(e.domain)] += 1;
    hist[static_cast<size_t>(e.domain)][static_cast<size_t>(e.features[0])]
        += 1;
  }
  CHECK(count[1] > 0);
  CHECK(count[2] > 0);
  CHECK(count[3] > 0);
  // Field-0 distributions differ between domains 1 and 2 (total variation).
  double tv = 0.0;
  for (size_t v = 0; v < 20; ++v) {
    tv += std::fabs(static_cast<double>(hist[1][v]) /
                        static_cast<double>(count[1]) -
                    static_cast<double>(hist[2][v]) /
                        static_cast<double>(count[2]));
  }
  CHECK(tv / 2.0 > 0.05);
}

TEST_CASE("leak guard: conversions inside the streaming part count as zero") {
  stream::WindowConfig windows{900, 86400, std::nullopt};
  ClickEvent e;
  e.features = {0};
  e.click_ts = 1000;
  e.delay = 500;  // conversion at 1500
  CHECK(harness::leak_guarded_label(e, windows, 2000) == 1);
  CHECK(harness::leak_guarded_label(e, windows, 1200) == 0);  // lands later
  e.delay = 90000;  // outside the attribution window entirely
  CHECK(harness::leak_guarded_label(e, windows, 10'000'000) == 0);
  e.delay = stream::kNeverConverts;
  CHECK(harness::leak_guarded_label(e, windows, 10'000'000) == 0);
}

TEST_CASE("run_experiment: anchors, determinism, eval purity") {
  harness::GeneratedData data = harness::generate_events(small_generator(21));
  ExperimentConfig base = small_experiment();

  ExperimentConfig pre_cfg =
      harness::method_config(harness::MethodKind::kPretrained, base);
  ExperimentConfig oracle_cfg =
      harness::method_config(harness::MethodKind::kOracle, base);
  harness::ExperimentResult pre = harness::run_experiment(pre_cfg, data.events);
  harness::ExperimentResult oracle =
      harness::run_experiment(oracle_cfg, data.events);

  // RI anchors by construction.
  CHECK(metrics::relative_improvement(metrics::MetricKind::kAuc,
                                      pre.report.auc, pre.report.auc,
                                      oracle.report.auc) ==
        doctest::Approx(0.0));
  CHECK(metrics::relative_improvement(metrics::MetricKind::kAuc,
                                      oracle.report.auc, pre.report.auc,
                                      oracle.report.auc) ==
        doctest::Approx(100.0));

  // Determinism: identical config and seed give identical reports.
  harness::ExperimentResult rerun =
      harness::run_experiment(oracle_cfg, data.events);
  CHECK(rerun.report.auc == oracle.report.auc);
  CHECK(rerun.report.nll == oracle.report.nll);
  std::vector<harness::MethodRow> row1{{"m", oracle.report}};
  std::vector<harness::MethodRow> row2{{"m", rerun.report}};
  CHECK(harness::render_report_jsonl(row1) == harness::render_report_jsonl(row2));

  // Eval purity: duplicated records never enter evaluation, so the eval
  // counts match between a duplicating and a non-duplicating policy with the
  // same waiting window.
  ExperimentConfig win_cfg =
      harness::method_config(harness::MethodKind::kVanillaWin, base);
  ExperimentConfig rn_cfg =
      harness::method_config(harness::MethodKind::kVanillaRn, base);
  harness::ExperimentResult win = harness::run_experiment(win_cfg, data.events);
  harness::ExperimentResult rn = harness::run_experiment(rn_cfg, data.events);
  CHECK(win.report.total_count == rn.report.total_count);
  CHECK(rn.report.total_count <
        static_cast<int64_t>(data.events.size()));  // firsts only

  // But training did see the duplicates.
  CHECK(rn.trained_records > win.trained_records);
}

TEST_CASE("run_experiment: insufficient data raises configuration errors") {
  harness::GeneratedData data = harness::generate_events(small_generator(31));
  ExperimentConfig cfg = small_experiment();
  std::vector<ClickEvent> two(data.events.begin(), data.events.begin() + 2);
  CHECK_THROWS_AS(harness::run_experiment(cfg, two), ConfigError);

  cfg.pretrain_fraction = 0.0;
  CHECK_THROWS_AS(harness::run_experiment(cfg, data.events), ConfigError);
}

TEST_CASE("run_experiment: defer trains and reports clamp counters") {
  harness::GeneratedData data = harness::generate_events(small_generator(41));
  ExperimentConfig cfg =
      harness::method_config(harness::MethodKind::kDefer, small_experiment());
  harness::CvrModel model;
  harness::ExperimentResult res =
      harness::run_experiment(cfg, data.events, &model);
  CHECK(res.report.total_count > 0);
  CHECK(res.report.auc > 0.5);  // learns something on this easy preset
  CHECK(res.trained_records > 0);

  // Model round trip through the snapshot file.
  const std::string path = "/tmp/ctr_plain_model.bin";
  io::write_tensor_file(path, model.to_tensor_file());
  harness::CvrModel loaded =
      harness::CvrModel::from_tensor_file(io::read_tensor_file(path));
  std::vector<nn::FeatureVec> xs{data.events[0].features,
                                 data.events[1].features};
  const std::vector<double> a = model.predict(xs, 1);
  const std::vector<double> b = loaded.predict(xs, 1);
  CHECK(a == b);  // bitwise
  std::remove(path.c_str());
}

TEST_CASE("run_experiment: star model over multi-domain events") {
  GeneratorConfig gen = small_generator(51);
  gen.num_events = 8000;
  gen.num_domains = 3;
  harness::GeneratedData data = harness::generate_events(gen);
  ExperimentConfig cfg = small_experiment();
  cfg.model_kind = harness::ModelKind::kStar;
  cfg.num_domains = 3;
  cfg.policy = stream::StreamPolicy::kRealNegDup;
  cfg.loss = losses::LossKind::kVanilla;
  harness::ExperimentResult res = harness::run_experiment(cfg, data.events);
  CHECK(res.report.total_count > 0);
  CHECK(res.report.auc > 0.5);
}

TEST_CASE("sweep_window: validation and single-candidate equivalence") {
  harness::GeneratedData data = harness::generate_events(small_generator(61));
  ExperimentConfig cfg = small_experiment();
  cfg.loss = losses::LossKind::kVanilla;

  const int64_t w3 = 2 * 3600;
  std::vector<int64_t> outside{cfg.windows.w2 + 1};
  CHECK_THROWS_AS(harness::sweep_window(cfg, data.events, outside),
                  ConfigError);
  CHECK_THROWS_AS(
      harness::sweep_window(cfg, data.events, std::vector<int64_t>{}),
      ConfigError);

  std::vector<harness::SweepEntry> sweep =
      harness::sweep_window(cfg, data.events, std::vector<int64_t>{w3});
  REQUIRE(sweep.size() == 1);
  CHECK(sweep[0].w3 == w3);

  ExperimentConfig direct = cfg;
  direct.policy = stream::StreamPolicy::kRealNegDupApprox;
  direct.windows.w3 = w3;
  harness::ExperimentResult ref = harness::run_experiment(direct, data.events);
  CHECK(sweep[0].result.report.auc == ref.report.auc);
  CHECK(sweep[0].result.report.nll == ref.report.nll);
}

TEST_CASE("report rendering is stable and carries table columns") {
  metrics::MetricReport rep;
  rep.auc = 0.8394;
  rep.pr_auc = 0.6367;
  rep.nll = 0.3943;
  rep.ri_auc = 90.11;
  rep.ri_pr_auc = 88.25;
  rep.ri_nll = 96.61;
  rep.total_count = 123;
  std::vector<harness::MethodRow> rows{{"DEFER", rep}};
  const std::string table = harness::render_report_table(rows);
  CHECK(table.find("DEFER") != std::string::npos);
  CHECK(table.find("0.8394") != std::string::npos);
  CHECK(table.find("90.11%") != std::string::npos);
  const std::string jsonl = harness::render_report_jsonl(rows);
  CHECK(jsonl.find("\"ri_nll\":96.610000") != std::string::npos);
  CHECK(harness::render_report_table(rows) == table);
}

// ctrlab: synthetic delayed-feedback CVR/CTR lab.
//
//   ctrlab generate     synthesize a click/conversion event file
//   ctrlab train        pretrain + stream-train a model over an event file
//   ctrlab evaluate     hourly evaluation of a saved model on an event file
//   ctrlab sweep-window compare approximation windows for real negatives

#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "ctr/errors.hpp"
#include "ctr/harness/config.hpp"
#include "ctr/harness/experiment.hpp"
#include "ctr/harness/generator.hpp"
#include "ctr/harness/loader.hpp"
#include "ctr/harness/report_io.hpp"
#include "ctr/io/tensor_file.hpp"
#include "ctr/metrics/metrics.hpp"
#include "ctr/stream/build.hpp"

namespace {

using namespace ctr;

const std::set<std::string> kExperimentKeys = {
    "w1", "w2", "w3", "policy", "loss", "model", "pretrain_fraction",
    "pretrain_epochs", "seed", "embed_dim", "hidden", "batch_norm", "lr",
    "batch_size", "pure_is_ratio", "dp_hidden", "dp_embed_dim", "dp_lr",
    "star_use_aux"};

harness::ExperimentConfig experiment_config_from(
    const harness::KeyValueConfig& kv) {
  kv.require_known(kExperimentKeys);
  harness::ExperimentConfig cfg;
  cfg.windows.w1 = kv.get_duration("w1", cfg.windows.w1);
  cfg.windows.w2 = kv.get_duration("w2", cfg.windows.w2);
  if (kv.has("w3")) cfg.windows.w3 = kv.get_duration("w3", 0);
  cfg.policy = stream::stream_policy_from_string(
      kv.get_string("policy", stream::to_string(cfg.policy)));
  cfg.loss = losses::loss_kind_from_string(
      kv.get_string("loss", losses::to_string(cfg.loss)));
  cfg.model_kind = harness::model_kind_from_string(
      kv.get_string("model", harness::to_string(cfg.model_kind)));
  cfg.pretrain_fraction =
      kv.get_double("pretrain_fraction", cfg.pretrain_fraction);
  cfg.train.pretrain_epochs = static_cast<int>(
      kv.get_int("pretrain_epochs", cfg.train.pretrain_epochs));
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", 1));
  cfg.train.embed_dim =
      static_cast<int>(kv.get_int("embed_dim", cfg.train.embed_dim));
  cfg.train.hidden = kv.get_int_list("hidden", cfg.train.hidden);
  cfg.train.use_batch_norm = kv.get_bool("batch_norm",
                                         cfg.train.use_batch_norm);
  cfg.train.lr = kv.get_double("lr", cfg.train.lr);
  cfg.train.batch_size =
      static_cast<int>(kv.get_int("batch_size", cfg.train.batch_size));
  cfg.pure_is_ratio = kv.get_bool("pure_is_ratio", cfg.pure_is_ratio);
  cfg.train.dp_hidden = kv.get_int_list("dp_hidden", cfg.train.dp_hidden);
  cfg.train.dp_embed_dim =
      static_cast<int>(kv.get_int("dp_embed_dim", cfg.train.dp_embed_dim));
  cfg.train.dp_lr = kv.get_double("dp_lr", cfg.train.dp_lr);
  cfg.star_use_aux = kv.get_bool("star_use_aux", cfg.star_use_aux);
  return cfg;
}

void write_reports(const std::string& path,
                   std::span<const harness::MethodRow> rows) {
  harness::write_text_file(path, harness::render_report_table(rows));
  harness::write_text_file(path + ".jsonl", harness::render_report_jsonl(rows));
}

int cmd_generate(const std::string& preset, int64_t events, uint64_t seed,
                 int domains, const std::string& out) {
  harness::GeneratorConfig cfg = harness::preset_by_name(preset);
  cfg.num_events = events;
  cfg.seed = seed;
  cfg.num_domains = domains;
  harness::GeneratedData data = harness::generate_events(cfg);
  harness::save_events(out, data.events);
  std::cout << "wrote " << data.events.size() << " events to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& events_path,
              const std::string& policy_override,
              const std::string& loss_override, const std::string& out_model,
              const std::string& report_path) {
  harness::KeyValueConfig kv =
      config_path.empty() ? harness::KeyValueConfig::from_string("")
                          : harness::KeyValueConfig::from_file(config_path);
  if (!policy_override.empty()) kv.set("policy", policy_override);
  if (!loss_override.empty()) kv.set("loss", loss_override);
  harness::ExperimentConfig cfg = experiment_config_from(kv);

  std::vector<stream::ClickEvent> events = harness::load_events(events_path);
  cfg.num_domains = harness::infer_num_domains(events);

  harness::CvrModel model;
  harness::ExperimentResult result =
      harness::run_experiment(cfg, events, &model);

  if (!out_model.empty()) {
    io::TensorFile file = model.to_tensor_file();
    file.metadata["loss"] = losses::to_string(cfg.loss);
    file.metadata["w1"] = std::to_string(cfg.windows.w1);
    file.metadata["w2"] = std::to_string(cfg.windows.w2);
    io::write_tensor_file(out_model, file);
  }
  harness::MethodRow row{losses::to_string(cfg.loss) + " (" +
                             stream::to_string(cfg.policy) + ")",
                         result.report};
  if (!report_path.empty()) {
    write_reports(report_path, std::span<const harness::MethodRow>(&row, 1));
  }
  std::cout << harness::render_report_table(
      std::span<const harness::MethodRow>(&row, 1));
  if (result.clamps.denominator_clamps + result.clamps.weight_clamps > 0) {
    std::cout << "importance-weight clamps: denominator "
              << result.clamps.denominator_clamps << ", weight "
              << result.clamps.weight_clamps << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& events_path,
                 const std::string& report_path) {
  io::TensorFile file = io::read_tensor_file(model_path);
  harness::CvrModel model = harness::CvrModel::from_tensor_file(file);
  losses::LossKind loss = losses::LossKind::kVanilla;
  if (file.metadata.count("loss") > 0) {
    loss = losses::loss_kind_from_string(file.meta("loss"));
  }
  stream::WindowConfig windows;
  if (file.metadata.count("w1") > 0) {
    windows.w1 = std::stoll(file.meta("w1"));
    windows.w2 = std::stoll(file.meta("w2"));
  }

  std::vector<stream::ClickEvent> events = harness::load_events(events_path);
  if (events.empty()) throw DataError("no events to evaluate");

  // Hourly batches by click hour, true eventual labels.
  std::map<int64_t, std::vector<size_t>> hours;
  for (size_t i = 0; i < events.size(); ++i) {
    hours[events[i].click_ts / stream::kSecondsPerHour].push_back(i);
  }
  std::vector<metrics::HourMetrics> per_hour;
  for (const auto& [hour, idx] : hours) {
    std::vector<nn::FeatureVec> xs;
    std::vector<int> labels;
    std::map<int32_t, std::vector<size_t>> by_domain;
    for (size_t k = 0; k < idx.size(); ++k) {
      xs.push_back(events[idx[k]].features);
      labels.push_back(stream::eventual_label(events[idx[k]], windows));
      by_domain[events[idx[k]].domain].push_back(k);
    }
    std::vector<double> preds(xs.size());
    for (const auto& [domain, local] : by_domain) {
      std::vector<nn::FeatureVec> batch;
      for (size_t k : local) batch.push_back(xs[k]);
      std::vector<double> p = model.predict(batch, domain);
      for (size_t k = 0; k < local.size(); ++k) preds[local[k]] = p[k];
    }
    for (double& p : preds) {
      if (loss == losses::LossKind::kFnc) {
        p = losses::fnc_calibrate(std::min(p, 1.0 - 1e-9));
      } else if (loss == losses::LossKind::kFncRn) {
        p = losses::fnc_rn_calibrate(p);
      }
    }
    metrics::HourMetrics hm;
    hm.count = static_cast<int64_t>(xs.size());
    hm.nll = metrics::nll(preds, labels);
    bool pos = false, neg = false;
    for (int y : labels) (y == 1 ? pos : neg) = true;
    if (pos && neg) hm.auc = metrics::auc(preds, labels);
    if (pos) hm.pr_auc = metrics::pr_auc(preds, labels);
    per_hour.push_back(hm);
  }
  harness::MethodRow row{"evaluation", metrics::streaming_aggregate(per_hour)};
  if (!report_path.empty()) {
    write_reports(report_path, std::span<const harness::MethodRow>(&row, 1));
  }
  std::cout << harness::render_report_table(
      std::span<const harness::MethodRow>(&row, 1));
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& events_path,
              const std::string& candidates, const std::string& report_path) {
  harness::KeyValueConfig kv =
      config_path.empty() ? harness::KeyValueConfig::from_string("")
                          : harness::KeyValueConfig::from_file(config_path);
  harness::ExperimentConfig cfg = experiment_config_from(kv);
  std::vector<int64_t> w3s = harness::parse_duration_list(candidates);
  std::vector<stream::ClickEvent> events = harness::load_events(events_path);
  cfg.num_domains = harness::infer_num_domains(events);

  std::vector<harness::SweepEntry> entries =
      harness::sweep_window(cfg, events, w3s);
  std::vector<harness::MethodRow> rows;
  for (const harness::SweepEntry& e : entries) {
    rows.push_back({"w3=" + std::to_string(e.w3) + "s", e.result.report});
  }
  if (!report_path.empty()) write_reports(report_path, rows);
  std::cout << harness::render_report_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayed-feedback CVR training lab"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "synthesize an event file");
  std::string preset = "criteo-like", gen_out;
  int64_t gen_events = 100000;
  uint64_t gen_seed = 1;
  int gen_domains = 1;
  gen->add_option("--preset", preset, "criteo-like | taobao-like");
  gen->add_option("--events", gen_events, "number of events");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--domains", gen_domains, "number of domains");
  gen->add_option("--out", gen_out, "output path")->required();

  auto* train = app.add_subcommand("train", "pretrain + stream-train");
  std::string train_config, train_events, train_policy, train_loss,
      train_model, train_report;
  train->add_option("--config", train_config, "key = value config file");
  train->add_option("--events", train_events, "event file")->required();
  train->add_option("--stream-policy", train_policy, "policy override");
  train->add_option("--loss", train_loss, "loss override");
  train->add_option("--out-model", train_model, "model snapshot path");
  train->add_option("--report", train_report, "report path");

  auto* eval = app.add_subcommand("evaluate", "evaluate a saved model");
  std::string eval_model, eval_events, eval_report;
  eval->add_option("--model", eval_model, "model snapshot")->required();
  eval->add_option("--events", eval_events, "event file")->required();
  eval->add_option("--report", eval_report, "report path");

  auto* sweep = app.add_subcommand("sweep-window",
                                   "approximation-window sweep");
  std::string sweep_config, sweep_events, sweep_candidates = "1d,3d,5d,7d,9d",
              sweep_report;
  sweep->add_option("--config", sweep_config, "key = value config file");
  sweep->add_option("--events", sweep_events, "event file")->required();
  sweep->add_option("--candidates", sweep_candidates,
                    "comma-separated windows, e.g. \"1d,3d,5d,7d,9d\"");
  sweep->add_option("--report", sweep_report, "report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_generate(preset, gen_events, gen_seed, gen_domains, gen_out);
    }
    if (train->parsed()) {
      return cmd_train(train_config, train_events, train_policy, train_loss,
                       train_model, train_report);
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_model, eval_events, eval_report);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_config, sweep_events, sweep_candidates,
                       sweep_report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

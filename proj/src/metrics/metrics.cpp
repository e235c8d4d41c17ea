#include "ctr/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctr/errors.hpp"
#include "ctr/nn/layers.hpp"

namespace ctr::metrics {

namespace {

void check_paired(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("metrics: scores/labels length mismatch");
  }
  if (scores.empty()) {
    throw MetricUndefinedError("metrics: empty input");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_paired(scores, labels);
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] < scores[b];
  });

  // Rank-sum with average ranks over tie groups.
  double pos_rank_sum = 0.0;
  int64_t n_pos = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));  // 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricUndefinedError("auc: needs both classes");
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_paired(scores, labels);
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });

  int64_t total_pos = 0;
  for (int y : labels) total_pos += (y == 1);
  if (total_pos == 0) {
    throw MetricUndefinedError("pr_auc: needs at least one positive");
  }

  double accum = 0.0;
  int64_t tp = 0, seen = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    int64_t group_tp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      group_tp += (labels[order[j]] == 1);
      ++j;
    }
    tp += group_tp;
    seen += static_cast<int64_t>(j - i);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    accum += static_cast<double>(group_tp) * precision;
    i = j;
  }
  return accum / static_cast<double>(total_pos);
}

double nll(std::span<const double> predictions, std::span<const int> labels) {
  check_paired(predictions, labels);
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double f = nn::clamp_prediction(predictions[i]);
    sum += labels[i] == 1 ? -std::log(f) : -std::log(1.0 - f);
  }
  return sum / static_cast<double>(predictions.size());
}

double relative_improvement(MetricKind kind, double method_value,
                            double pretrained_value, double oracle_value) {
  const double denom = kind == MetricKind::kNll
                           ? pretrained_value - oracle_value
                           : oracle_value - pretrained_value;
  if (denom == 0.0) {
    throw MetricUndefinedError("relative_improvement: anchors coincide");
  }
  const double num = kind == MetricKind::kNll
                         ? pretrained_value - method_value
                         : method_value - pretrained_value;
  return 100.0 * num / denom;
}

MetricReport streaming_aggregate(std::span<const HourMetrics> per_hour) {
  MetricReport report;
  report.per_hour.assign(per_hour.begin(), per_hour.end());
  double auc_sum = 0.0, prauc_sum = 0.0, nll_sum = 0.0;
  int64_t auc_n = 0, prauc_n = 0, nll_n = 0, total = 0;
  for (const HourMetrics& h : per_hour) {
    total += h.count;
    if (h.count <= 0) continue;
    const double w = static_cast<double>(h.count);
    if (h.auc) {
      auc_sum += w * *h.auc;
      auc_n += h.count;
    }
    if (h.pr_auc) {
      prauc_sum += w * *h.pr_auc;
      prauc_n += h.count;
    }
    if (h.nll) {
      nll_sum += w * *h.nll;
      nll_n += h.count;
    }
  }
  if (auc_n == 0 && prauc_n == 0 && nll_n == 0) {
    throw MetricUndefinedError("streaming_aggregate: no defined hour metrics");
  }
  report.total_count = total;
  report.auc = auc_n > 0 ? auc_sum / static_cast<double>(auc_n) : 0.0;
  report.pr_auc = prauc_n > 0 ? prauc_sum / static_cast<double>(prauc_n) : 0.0;
  report.nll = nll_n > 0 ? nll_sum / static_cast<double>(nll_n) : 0.0;
  return report;
}

void fill_relative_improvements(MetricReport& report,
                                const MetricReport& pretrained,
                                const MetricReport& oracle) {
  report.ri_auc = relative_improvement(MetricKind::kAuc, report.auc,
                                       pretrained.auc, oracle.auc);
  report.ri_pr_auc = relative_improvement(MetricKind::kPrAuc, report.pr_auc,
                                          pretrained.pr_auc, oracle.pr_auc);
  report.ri_nll = relative_improvement(MetricKind::kNll, report.nll,
                                       pretrained.nll, oracle.nll);
}

}  // namespace ctr::metrics

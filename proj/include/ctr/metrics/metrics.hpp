#ifndef CTR_METRICS_METRICS_HPP_
#define CTR_METRICS_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctr::metrics {

// Pairwise concordance probability, tied pairs counted 1/2 (Mann-Whitney).
// Throws MetricUndefinedError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Average precision over descending-score thresholds (tied scores share one
// threshold). Throws MetricUndefinedError without a positive.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

// Mean negative log likelihood; predictions clamped away from {0,1}.
double nll(std::span<const double> predictions, std::span<const int> labels);

enum class MetricKind { kAuc, kPrAuc, kNll };

// Percentage of the pretrained-to-oracle gap the method covers. For NLL the
// sign flips because lower is better.
double relative_improvement(MetricKind kind, double method_value,
                            double pretrained_value, double oracle_value);

struct HourMetrics {
  std::optional<double> auc;
  std::optional<double> pr_auc;
  std::optional<double> nll;
  int64_t count = 0;
};

struct MetricReport {
  std::vector<HourMetrics> per_hour;
  double auc = 0.0;
  double pr_auc = 0.0;
  double nll = 0.0;
  int64_t total_count = 0;
  // Filled when anchors are available; percentages.
  std::optional<double> ri_auc;
  std::optional<double> ri_pr_auc;
  std::optional<double> ri_nll;
};

// Count-weighted aggregation; hours where a metric is undefined are excluded
// from that metric's average together with their counts.
MetricReport streaming_aggregate(std::span<const HourMetrics> per_hour);

void fill_relative_improvements(MetricReport& report,
                                const MetricReport& pretrained,
                                const MetricReport& oracle);

}  // namespace ctr::metrics

#endif  // CTR_METRICS_METRICS_HPP_

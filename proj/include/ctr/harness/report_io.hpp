#ifndef CTR_HARNESS_REPORT_IO_HPP_
#define CTR_HARNESS_REPORT_IO_HPP_

#include <span>
#include <string>
#include <vector>

#include "ctr/metrics/metrics.hpp"

namespace ctr::harness {

struct MethodRow {
  std::string name;
  metrics::MetricReport report;
};

// Human table, one row per method: AUC, PR-AUC, NLL, RI-AUC, RI-PR-AUC,
// RI-NLL. Fixed formatting so identical inputs give identical bytes.
std::string render_report_table(std::span<const MethodRow> rows);

// Line-delimited machine records: one "method" object per row plus one
// "hour" object per evaluated hour.
std::string render_report_jsonl(std::span<const MethodRow> rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ctr::harness

#endif  // CTR_HARNESS_REPORT_IO_HPP_

#include "ctr/harness/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctr/errors.hpp"

namespace ctr::harness {

namespace {

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string metric4(double v) { return fmt(v, "%.4f"); }

std::string ri2(const std::optional<double>& v) {
  if (!v) return "-";
  return fmt(*v, "%.2f%%");
}

std::string json_opt(const std::optional<double>& v) {
  if (!v) return "null";
  return fmt(*v, "%.6f");
}

}  // namespace

std::string render_report_table(std::span<const MethodRow> rows) {
  std::ostringstream out;
  size_t name_width = 8;
  for (const MethodRow& r : rows) {
    name_width = std::max(name_width, r.name.size());
  }
  auto pad = [&](const std::string& s, size_t w) {
    std::string p = s;
    while (p.size() < w) p.push_back(' ');
    return p;
  };
  out << pad("method", name_width) << "  " << pad("AUC", 8) << pad("PR-AUC", 8)
      << pad("NLL", 8) << pad("RI-AUC", 10) << pad("RI-PR-AUC", 11)
      << pad("RI-NLL", 10) << "samples\n";
  for (const MethodRow& r : rows) {
    out << pad(r.name, name_width) << "  " << pad(metric4(r.report.auc), 8)
        << pad(metric4(r.report.pr_auc), 8) << pad(metric4(r.report.nll), 8)
        << pad(ri2(r.report.ri_auc), 10) << pad(ri2(r.report.ri_pr_auc), 11)
        << pad(ri2(r.report.ri_nll), 10) << r.report.total_count << "\n";
  }
  return out.str();
}

std::string render_report_jsonl(std::span<const MethodRow> rows) {
  std::ostringstream out;
  for (const MethodRow& r : rows) {
    out << "{\"type\":\"method\",\"name\":\"" << r.name << "\""
        << ",\"auc\":" << fmt(r.report.auc, "%.6f")
        << ",\"pr_auc\":" << fmt(r.report.pr_auc, "%.6f")
        << ",\"nll\":" << fmt(r.report.nll, "%.6f")
        << ",\"ri_auc\":" << json_opt(r.report.ri_auc)
        << ",\"ri_pr_auc\":" << json_opt(r.report.ri_pr_auc)
        << ",\"ri_nll\":" << json_opt(r.report.ri_nll)
        << ",\"samples\":" << r.report.total_count << "}\n";
    for (size_t h = 0; h < r.report.per_hour.size(); ++h) {
      const metrics::HourMetrics& hm = r.report.per_hour[h];
      out << "{\"type\":\"hour\",\"method\":\"" << r.name << "\""
          << ",\"hour\":" << h << ",\"auc\":" << json_opt(hm.auc)
          << ",\"pr_auc\":" << json_opt(hm.pr_auc)
          << ",\"nll\":" << json_opt(hm.nll) << ",\"samples\":" << hm.count
          << "}\n";
    }
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace ctr::harness

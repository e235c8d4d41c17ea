#include "ctr/harness/loader.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ctr/errors.hpp"

namespace ctr::harness {

FormatProfile FormatProfile::by_name(const std::string& name) {
  if (name == "native") return native();
  if (name == "criteo") return criteo();
  throw ConfigError("unknown format profile: " + name);
}

namespace {

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw DataError("events file line " + std::to_string(line_no) + ": " + what);
}

int64_t parse_i64(const std::string& field, size_t line_no, const char* what) {
  int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    fail(line_no, std::string("bad ") + what + " '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<stream::ClickEvent> load_events(const std::string& path,
                                            const FormatProfile& profile) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file: " + path);
  std::vector<stream::ClickEvent> events;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    {
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (!line.empty() && line.back() == '\t') cols.push_back("");
    }
    const int needed = profile.features_start + 1;
    if (static_cast<int>(cols.size()) < needed) {
      fail(line_no, "expected at least " + std::to_string(needed) + " columns");
    }
    stream::ClickEvent e;
    const std::string& click = cols[static_cast<size_t>(profile.click_col)];
    if (click.empty()) fail(line_no, "missing click timestamp");
    e.click_ts = parse_i64(click, line_no, "click timestamp");
    if (e.click_ts < 0) fail(line_no, "negative click timestamp");

    const std::string& conv = cols[static_cast<size_t>(profile.conv_col)];
    if (conv.empty()) {
      e.delay = stream::kNeverConverts;
    } else {
      const int64_t conv_ts = parse_i64(conv, line_no, "conversion timestamp");
      if (conv_ts <= e.click_ts) {
        fail(line_no, "conversion timestamp not after click timestamp");
      }
      e.delay = conv_ts - e.click_ts;
    }
    if (profile.domain_col >= 0) {
      const int64_t d =
          parse_i64(cols[static_cast<size_t>(profile.domain_col)], line_no,
                    "domain id");
      if (d < 1) fail(line_no, "domain id must be >= 1");
      e.domain = static_cast<int32_t>(d);
    }
    for (size_t c = static_cast<size_t>(profile.features_start);
         c < cols.size(); ++c) {
      const int64_t v = parse_i64(cols[c], line_no, "feature id");
      if (v < 0) fail(line_no, "negative feature id");
      e.features.push_back(static_cast<int32_t>(v));
    }
    if (e.features.empty()) fail(line_no, "no feature ids");
    events.push_back(std::move(e));
  }
  return events;
}

void save_events(const std::string& path,
                 std::span<const stream::ClickEvent> events,
                 const FormatProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  if (profile.click_col != 0 || profile.conv_col != 1) {
    throw ConfigError("save_events: only column orders starting with "
                      "click_ts, conversion_ts are supported");
  }
  for (const stream::ClickEvent& e : events) {
    out << e.click_ts << '\t';
    if (e.converts()) out << e.conversion_ts();
    if (profile.domain_col >= 0) out << '\t' << e.domain;
    for (int32_t f : e.features) out << '\t' << f;
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace ctr::harness

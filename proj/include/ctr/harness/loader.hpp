#ifndef CTR_HARNESS_LOADER_HPP_
#define CTR_HARNESS_LOADER_HPP_

#include <span>
#include <string>
#include <vector>

#include "ctr/stream/events.hpp"

namespace ctr::harness {

// Column mapping for tab-separated event files. The native layout is
// click_ts, conversion_ts (empty when none), domain, feature ids...; the
// "criteo" profile has no domain column (every event lands in domain 1).
struct FormatProfile {
  int click_col = 0;
  int conv_col = 1;
  int domain_col = 2;      // -1: absent
  int features_start = 3;

  static FormatProfile native() { return {}; }
  static FormatProfile criteo() { return {0, 1, -1, 2}; }
  static FormatProfile by_name(const std::string& name);
};

// Parses and validates; conversions past the attribution window are NOT
// normalized here (that is stream-build semantics). Malformed lines raise
// DataError with the 1-based line number.
std::vector<stream::ClickEvent> load_events(
    const std::string& path, const FormatProfile& profile = {});

void save_events(const std::string& path,
                 std::span<const stream::ClickEvent> events,
                 const FormatProfile& profile = {});

}  // namespace ctr::harness

#endif  // CTR_HARNESS_LOADER_HPP_

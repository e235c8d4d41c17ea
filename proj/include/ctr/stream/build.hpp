#ifndef CTR_STREAM_BUILD_HPP_
#define CTR_STREAM_BUILD_HPP_

#include <span>
#include <string>
#include <vector>

#include "ctr/stream/events.hpp"

namespace ctr::stream {

enum class StreamPolicy {
  kNoDup,            // one record per event at click+w1, window label
  kNoWin,            // immediate negative, positive duplicate at conversion
  kWin,              // window label at click+w1, fake negatives duplicated
  kRealNegDup,       // window label at click+w1, every event duplicated
  kRealNegDupApprox, // real negatives approximated at w3
};

std::string to_string(StreamPolicy policy);
StreamPolicy stream_policy_from_string(const std::string& name);

// Turns events into a training ingestion stream under the policy; output is
// sorted by (ingest_ts, event_id, occurrence) so duplicates never precede
// their first occurrence.
std::vector<StreamRecord> build_stream(std::span<const ClickEvent> events,
                                       StreamPolicy policy,
                                       const WindowConfig& windows);

struct HourlyBatches {
  int64_t first_hour = 0;  // hour index of the first batch
  std::vector<std::vector<StreamRecord>> hours;  // empty hours preserved
};

// Records must be sorted by ingest_ts (build_stream output qualifies).
HourlyBatches chunk_by_hour(std::span<const StreamRecord> records);

}  // namespace ctr::stream

#endif  // CTR_STREAM_BUILD_HPP_

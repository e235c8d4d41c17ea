#ifndef CTR_STREAM_EVENTS_HPP_
#define CTR_STREAM_EVENTS_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ctr/nn/embedding.hpp"

namespace ctr::stream {

using nn::FeatureVec;

// Delay value meaning the conversion never happens.
constexpr int64_t kNeverConverts = std::numeric_limits<int64_t>::max();

constexpr int64_t kSecondsPerHour = 3600;

// One impression-click with its (hidden-to-models) conversion delay.
struct ClickEvent {
  FeatureVec features;
  int32_t domain = 1;       // 1-based domain indicator
  int64_t click_ts = 0;     // seconds since epoch
  int64_t delay = kNeverConverts;  // seconds, > 0; kNeverConverts if none

  bool converts() const { return delay != kNeverConverts; }
  int64_t conversion_ts() const { return click_ts + delay; }
};

struct WindowConfig {
  int64_t w1 = 900;          // waiting window, seconds
  int64_t w2 = 86400;        // attribution window, seconds
  std::optional<int64_t> w3; // approximation window, w1 < w3 < w2

  void validate() const;
  void validate_with_w3() const;
};

enum class SampleKind { kPositive, kFakeNegative, kRealNegative };

// Window-boundary convention: z exactly on a boundary counts as inside
// (z <= w1 positive, z <= w2 attributed).
SampleKind classify_sample(const ClickEvent& event, const WindowConfig& windows);

// Label the event would eventually receive: 1 iff the conversion lands inside
// the attribution window.
int eventual_label(const ClickEvent& event, const WindowConfig& windows);

enum class Occurrence { kFirst, kDuplicate };

// One training ingestion. Features and domain resolve through the source
// event (records keep the stream light); `source()` gives the event back.
struct StreamRecord {
  int64_t event_id = 0;   // index into the event list handed to build_stream
  int32_t label = 0;
  int64_t ingest_ts = 0;
  Occurrence occurrence = Occurrence::kFirst;
};

inline const ClickEvent& source(const StreamRecord& r,
                                std::span<const ClickEvent> events) {
  return events[static_cast<size_t>(r.event_id)];
}

}  // namespace ctr::stream

#endif  // CTR_STREAM_EVENTS_HPP_

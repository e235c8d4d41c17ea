#include "ctr/stream/build.hpp"

#include <algorithm>

#include "ctr/errors.hpp"

namespace ctr::stream {

void WindowConfig::validate() const {
  if (w1 <= 0 || w2 <= w1) {
    throw ConfigError("WindowConfig: need 0 < w1 < w2");
  }
  if (w3 && (*w3 <= w1 || *w3 >= w2)) {
    throw ConfigError("WindowConfig: need w1 < w3 < w2");
  }
}

void WindowConfig::validate_with_w3() const {
  validate();
  if (!w3) throw ConfigError("WindowConfig: this policy requires w3");
}

SampleKind classify_sample(const ClickEvent& event,
                           const WindowConfig& windows) {
  windows.validate();
  if (event.delay <= windows.w1) return SampleKind::kPositive;
  if (event.delay <= windows.w2) return SampleKind::kFakeNegative;
  return SampleKind::kRealNegative;
}

int eventual_label(const ClickEvent& event, const WindowConfig& windows) {
  return event.delay <= windows.w2 ? 1 : 0;
}

std::string to_string(StreamPolicy policy) {
  switch (policy) {
    case StreamPolicy::kNoDup: return "no-dup";
    case StreamPolicy::kNoWin: return "no-win";
    case StreamPolicy::kWin: return "win";
    case StreamPolicy::kRealNegDup: return "real-neg-dup";
    case StreamPolicy::kRealNegDupApprox: return "real-neg-dup-approx";
  }
  return "unknown";
}

StreamPolicy stream_policy_from_string(const std::string& name) {
  if (name == "no-dup") return StreamPolicy::kNoDup;
  if (name == "no-win") return StreamPolicy::kNoWin;
  if (name == "win") return StreamPolicy::kWin;
  if (name == "real-neg-dup") return StreamPolicy::kRealNegDup;
  if (name == "real-neg-dup-approx") return StreamPolicy::kRealNegDupApprox;
  throw ConfigError("unknown stream policy: " + name);
}

std::vector<StreamRecord> build_stream(std::span<const ClickEvent> events,
                                       StreamPolicy policy,
                                       const WindowConfig& windows) {
  if (policy == StreamPolicy::kRealNegDupApprox) {
    windows.validate_with_w3();
  } else {
    windows.validate();
  }

  std::vector<StreamRecord> out;
  out.reserve(policy == StreamPolicy::kNoDup ? events.size()
                                             : 2 * events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    const ClickEvent& e = events[i];
    if (e.click_ts < 0 || e.delay <= 0) {
      throw ContractError("build_stream: invalid event timing");
    }
    const int64_t id = static_cast<int64_t>(i);
    const SampleKind kind = classify_sample(e, windows);
    const int window_label = kind == SampleKind::kPositive ? 1 : 0;
    switch (policy) {
      case StreamPolicy::kNoDup:
        out.push_back({id, window_label, e.click_ts + windows.w1,
                       Occurrence::kFirst});
        break;
      case StreamPolicy::kNoWin:
        out.push_back({id, 0, e.click_ts, Occurrence::kFirst});
        if (e.converts() && e.delay <= windows.w2) {
          out.push_back({id, 1, e.click_ts + e.delay, Occurrence::kDuplicate});
        }
        break;
      case StreamPolicy::kWin:
        out.push_back({id, window_label, e.click_ts + windows.w1,
                       Occurrence::kFirst});
        if (kind == SampleKind::kFakeNegative) {
          out.push_back({id, 1, e.click_ts + e.delay, Occurrence::kDuplicate});
        }
        break;
      case StreamPolicy::kRealNegDup:
        out.push_back({id, window_label, e.click_ts + windows.w1,
                       Occurrence::kFirst});
        switch (kind) {
          case SampleKind::kPositive:
            // Duplicated alongside the first occurrence: that is the earliest
            // moment the final label is known.
            out.push_back({id, 1, e.click_ts + windows.w1,
                           Occurrence::kDuplicate});
            break;
          case SampleKind::kFakeNegative:
            out.push_back({id, 1, e.click_ts + e.delay,
                           Occurrence::kDuplicate});
            break;
          case SampleKind::kRealNegative:
            out.push_back({id, 0, e.click_ts + windows.w2,
                           Occurrence::kDuplicate});
            break;
        }
        break;
      case StreamPolicy::kRealNegDupApprox: {
        const int64_t w3 = *windows.w3;
        out.push_back({id, window_label, e.click_ts + windows.w1,
                       Occurrence::kFirst});
        if (kind == SampleKind::kPositive) {
          out.push_back({id, 1, e.click_ts + windows.w1,
                         Occurrence::kDuplicate});
        } else if (e.delay <= w3) {
          // Fake negative confirmed inside the approximation window.
          out.push_back({id, 1, e.click_ts + e.delay, Occurrence::kDuplicate});
        } else {
          // Treated as a real negative after w3; conversions in (w3, w2]
          // become mislabeled approximations.
          out.push_back({id, 0, e.click_ts + w3, Occurrence::kDuplicate});
        }
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const StreamRecord& a, const StreamRecord& b) {
              if (a.ingest_ts != b.ingest_ts) return a.ingest_ts < b.ingest_ts;
              if (a.event_id != b.event_id) return a.event_id < b.event_id;
              return a.occurrence < b.occurrence;
            });
  return out;
}

HourlyBatches chunk_by_hour(std::span<const StreamRecord> records) {
  HourlyBatches result;
  if (records.empty()) return result;
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].ingest_ts < records[i - 1].ingest_ts) {
      throw ContractError("chunk_by_hour: records must be sorted by ingest_ts");
    }
  }
  const int64_t first_hour = records.front().ingest_ts / kSecondsPerHour;
  const int64_t last_hour = records.back().ingest_ts / kSecondsPerHour;
  result.first_hour = first_hour;
  result.hours.resize(static_cast<size_t>(last_hour - first_hour + 1));
  for (const StreamRecord& r : records) {
    const int64_t h = r.ingest_ts / kSecondsPerHour - first_hour;
    result.hours[static_cast<size_t>(h)].push_back(r);
  }
  return result;
}

}  // namespace ctr::stream

#pragma once
// Unified user timeline data model: explicit actions and implicit impressions,
// line-delimited log serialization, timeline hygiene (gap truncation, length
// caps) and the synthetic engagement-log generator.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dv365/common.hpp"

namespace dv365 {

enum class MediaType : uint8_t { video, photo };
enum class Surface : uint8_t { reels, feed, explore, stories };
enum class ActionType : uint8_t {
  like,
  share,
  comment,
  save,
  follow,
  profile_visit,
  reshare
};
constexpr int kActionTypeCount = 7;

const char* to_string(MediaType t);
const char* to_string(Surface s);
const char* to_string(ActionType a);
MediaType media_type_from_string(std::string_view s);
Surface surface_from_string(std::string_view s);
ActionType action_type_from_string(std::string_view s);

struct MediaDescriptor {
  uint64_t media_id = 0;
  uint64_t author_id = 0;
  uint64_t topic_id = 0;
  MediaType media_type = MediaType::video;
  Surface surface = Surface::reels;

  bool valid() const { return media_id != 0 && author_id != 0 && topic_id != 0; }
};

struct ExplicitEvent {
  MediaDescriptor media;
  ActionType action_type = ActionType::like;
  int64_t ts = 0;
};

struct ImplicitEvent {
  MediaDescriptor media;
  double video_duration = 0;  // seconds; 0 for photos
  double dwell_time = 0;      // seconds
  int64_t ts = 0;
};

struct ExplicitTimeline {
  std::vector<ExplicitEvent> events;  // nondecreasing ts
};

struct ImplicitTimeline {
  std::vector<ImplicitEvent> events;  // nondecreasing ts
};

struct UserTimelines {
  ExplicitTimeline explicit_tl;
  ImplicitTimeline implicit_tl;
};

using UserLog = std::map<uint64_t, UserTimelines>;

// --- timeline hygiene ------------------------------------------------------

// Keeps events with ts <= reference_ts - gap. Input must be ts-sorted.
template <typename Event>
std::vector<Event> truncate_for_distant_interest(const std::vector<Event>& events,
                                                 int64_t reference_ts,
                                                 int64_t gap = kSecondsPerDay) {
  const int64_t cutoff = reference_ts - gap;
  size_t n = events.size();
  while (n > 0 && events[n - 1].ts > cutoff) --n;
  return std::vector<Event>(events.begin(), events.begin() + n);
}

// Keeps the max_len most recent events (a suffix of the sorted input).
template <typename Event>
std::vector<Event> cap_length(const std::vector<Event>& events, size_t max_len) {
  if (events.size() <= max_len) return events;
  return std::vector<Event>(events.end() - max_len, events.end());
}

UserTimelines truncate_for_distant_interest(const UserTimelines& tl,
                                            int64_t reference_ts,
                                            int64_t gap = kSecondsPerDay);

// --- event log wire format (format_version 1) -------------------------------
//
// UTF-8, one record per line, tab-separated. First line:
//   header \t format_version \t 1
// then
//   explicit \t user \t media \t author \t topic \t media_type \t surface \t action \t ts
//   implicit \t user \t media \t author \t topic \t media_type \t surface \t duration \t dwell \t ts

constexpr int kEventLogFormatVersion = 1;

struct ParseStats {
  size_t total_lines = 0;  // excluding header
  size_t malformed = 0;
};

void write_event_log(std::ostream& out, const UserLog& log);
void write_event_log_file(const std::string& path, const UserLog& log);

// Routes by kind, sorts per-user (stable, ties keep input order), accumulates
// per-line errors. Fails if >1% of lines are malformed; header mismatch fatal.
UserLog parse_event_log(std::istream& in, ParseStats* stats = nullptr);
UserLog parse_event_log_file(const std::string& path, ParseStats* stats = nullptr);

// --- synthetic generator -----------------------------------------------------

struct GenConfig {
  uint32_t n_users = 1000;
  uint32_t n_topics = 20;
  uint32_t n_days = 30;
  double events_per_user_day = 24;
  uint32_t stable_interest_dims = 3;
  double emerging_drift_rate = 0.1;  // per-day probability of redrawing
  uint64_t seed = 1;

  void validate() const;
};

struct SyntheticLog {
  GenConfig config;
  int64_t start_ts = 0;  // first day starts here
  UserLog users;
  // affinity[user_index][day][topic]; kept for analysis and tests.
  std::vector<std::vector<std::vector<double>>> daily_affinity;

  uint64_t user_id(uint32_t user_index) const { return user_index + 1; }
};

// Deterministic given config.seed. Each user holds a fixed stable interest
// mixture over topics plus an emerging topic redrawn with probability
// emerging_drift_rate per day; engagement probabilities and dwell times are
// monotone in user-topic affinity.
SyntheticLog generate_synthetic_logs(const GenConfig& config);

// Topic of a media id as assigned by the generator's media pools.
uint64_t media_topic(uint64_t media_id, uint32_t n_topics);

}  // namespace dv365

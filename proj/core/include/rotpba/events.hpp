#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rotpba {

struct Event {
  double t = 0.0;
  int x = 0;
  int y = 0;
  int pol = 1;  // +1 or -1

  bool operator==(const Event&) const = default;
};

using EventStream = std::vector<Event>;

/// One event together with the time of the previous event at the same pixel. The event
/// generation model ties it to the map intensity difference between the two warped points.
struct ResidualPair {
  std::size_t event_index = 0;
  double t = 0.0;       // t_k
  double t_prev = 0.0;  // t_k - dt_k
  int x = 0;
  int y = 0;
  int pol = 1;
};

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= begin && t <= end; }
};

struct PairingResult {
  std::vector<ResidualPair> pairs;
  std::vector<std::size_t> first_events;  // first in-window event per active pixel (no predecessor)
  std::size_t outside_window = 0;
  std::size_t zero_interval = 0;  // same-pixel duplicates with identical timestamps, not paired
};

/// Chains consecutive in-window events per pixel. Throws Error(kIngest) if `stream` is not
/// sorted by time or an event lies outside the sensor.
PairingResult pair_events(const std::vector<Event>& stream, const TimeWindow& window, int width,
                          int height);

struct EventReadStats {
  std::size_t lines = 0;
  std::size_t comments = 0;
};

/// Text format `t x y p`, one event per line, p in {0, 1} (0 -> -1). `#` starts a comment.
/// Paths ending in `.gz` are read and written through zlib.
EventStream load_events(const std::string& path, EventReadStats* stats = nullptr);
void save_events(const EventStream& events, const std::string& path);

/// Drops events outside [begin, end], returning how many were removed.
std::size_t clip_to_span(EventStream& events, double begin, double end);

}  // namespace rotpba

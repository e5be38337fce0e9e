#pragma once

#include <chrono>
#include <cstdint>

namespace paxoslease {

// Internal resolution for every deadline and timer.
using Duration = std::chrono::microseconds;

// Lease timespans travel on the wire in whole milliseconds.
using Millis = std::chrono::milliseconds;

// Tag clock for monotonic local time. State machines never read it; the
// driver (simulator or transport) injects `now` into every handler.
struct LocalClock {
  using duration = Duration;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<LocalClock, Duration>;
  static constexpr bool is_steady = true;
};

using TimePoint = LocalClock::time_point;

inline constexpr TimePoint at_us(std::int64_t us) { return TimePoint{Duration{us}}; }

inline constexpr std::int64_t to_us(TimePoint t) { return t.time_since_epoch().count(); }

}  // namespace paxoslease

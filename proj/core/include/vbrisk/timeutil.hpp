#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace vbrisk {

using Timestamp = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]` (a space may replace the
/// `T`; no designator means UTC). Fractional seconds are truncated.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Canonical UTC rendering `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp ts);

/// Wall-clock view of a UTC instant under a fixed UTC offset (no DST).
struct LocalTime {
  std::int64_t day;  // days since 1970-01-01 in local time
  int hour;          // 0..23
  int minute;        // 0..59
  bool weekend;      // Saturday or Sunday
};

LocalTime to_local(Timestamp ts, double utc_offset_hours);

}  // namespace vbrisk

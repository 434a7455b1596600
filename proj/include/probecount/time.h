#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace probecount {

using milliseconds = std::chrono::milliseconds;
using microseconds = std::chrono::microseconds;

/// UTC instant at millisecond resolution. All pipeline timestamps use this.
using instant = std::chrono::sys_time<milliseconds>;
using instant_us = std::chrono::sys_time<microseconds>;

inline instant from_epoch_ms(std::int64_t ms) { return instant{milliseconds{ms}}; }
inline std::int64_t epoch_ms(instant t) { return t.time_since_epoch().count(); }

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff]Z` (space separator and missing `Z`
/// tolerated) or a bare integer of epoch milliseconds.
/// Throws parse_error on anything else.
instant parse_instant(std::string_view text);

/// `YYYY-MM-DD` at 00:00:00 UTC.
instant parse_date(std::string_view text);

/// Always `YYYY-MM-DDTHH:MM:SS.fffZ`.
std::string format_instant(instant t);

std::string format_date(instant t);

}  // namespace probecount

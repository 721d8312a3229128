#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace wms {

using Clock = std::chrono::system_clock;
using TimePoint = std::chrono::time_point<Clock, std::chrono::microseconds>;

TimePoint now();

/// `2026-10-16T08:15:02.123456Z`. Always UTC, always six fractional digits.
std::string format_rfc3339(TimePoint t);

/// Accepts the form produced by format_rfc3339 plus the variants without
/// fractional seconds or with fewer digits. Offsets other than `Z` are rejected.
std::optional<TimePoint> parse_rfc3339(std::string_view text);

/// `20261016T081502Z`, used inside job identifiers.
std::string format_compact(TimePoint t);

} // namespace wms

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace coachsim {

/// UTC wall-clock time at millisecond resolution; the unit everything is persisted in.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Clock = std::function<Timestamp()>;

[[nodiscard]] Timestamp utc_now();

/// "2025-03-14T09:26:53.589Z"
[[nodiscard]] std::string format_iso8601(Timestamp ts);

/// Accepts the format produced by format_iso8601, with or without the
/// fractional part. Throws FormatError otherwise.
[[nodiscard]] Timestamp parse_iso8601(std::string_view text);

} // namespace coachsim

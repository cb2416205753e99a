#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ck {

/// Integer seconds. Absolute instants are seconds since 1970-01-01T00:00:00
/// of a naive local calendar (no time zone is attached to dataset timestamps).
using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerMinute = 60;
inline constexpr Seconds kSecondsPerDay = 86400;

class TimeFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parses `YYYY-MM-DDTHH:MM:SS` (a space separator is also accepted).
inline Seconds parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  std::string buf(text);
  int consumed = 0;
  if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s,
                  &consumed) != 7 ||
      static_cast<std::size_t>(consumed) != buf.size() || (sep != 'T' && sep != ' ')) {
    throw TimeFormatError("invalid timestamp '" + buf + "', expected YYYY-MM-DDTHH:MM:SS");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw TimeFormatError("timestamp out of range '" + buf + "'");
  }
  const Seconds days = sys_days{ymd}.time_since_epoch().count();
  return days * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

inline Seconds floor_div(Seconds a, Seconds b) {
  Seconds q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Seconds ceil_div(Seconds a, Seconds b) { return -floor_div(-a, b); }

/// Midnight of the calendar day containing `t`.
inline Seconds day_start(Seconds t) { return floor_div(t, kSecondsPerDay) * kSecondsPerDay; }

inline std::string format_date(Seconds t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{floor_div(t, kSecondsPerDay)}}};
  char out[16];
  std::snprintf(out, sizeof out, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return out;
}

inline std::string format_timestamp(Seconds t) {
  const Seconds sod = t - day_start(t);
  char out[16];
  std::snprintf(out, sizeof out, "T%02d:%02d:%02d", static_cast<int>(sod / 3600),
                static_cast<int>(sod / 60 % 60), static_cast<int>(sod % 60));
  return format_date(t) + out;
}

}  // namespace ck

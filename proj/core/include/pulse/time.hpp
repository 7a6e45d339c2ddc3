#pragma once

#include <cstdint>
#include <string>

namespace pulse {

// Instant in UTC, seconds since the Unix epoch. All on-disk timestamps are
// ISO-8601 with a trailing 'Z'; all arithmetic happens on this integer form.
struct Timestamp {
  std::int64_t secs = 0;

  friend bool operator==(Timestamp a, Timestamp b) { return a.secs == b.secs; }
  friend bool operator!=(Timestamp a, Timestamp b) { return a.secs != b.secs; }
  friend bool operator<(Timestamp a, Timestamp b) { return a.secs < b.secs; }
  friend bool operator<=(Timestamp a, Timestamp b) { return a.secs <= b.secs; }
  friend bool operator>(Timestamp a, Timestamp b) { return a.secs > b.secs; }
  friend bool operator>=(Timestamp a, Timestamp b) { return a.secs >= b.secs; }
};

inline Timestamp operator+(Timestamp t, std::int64_t secs) { return {t.secs + secs}; }
inline Timestamp operator-(Timestamp t, std::int64_t secs) { return {t.secs - secs}; }

// Calendar day in some user's local timezone, counted in whole days since the
// epoch. Day boundaries depend on the user's tz offset, so a LocalDate is only
// meaningful together with the offset that produced it.
struct LocalDate {
  std::int32_t days = 0;

  friend bool operator==(LocalDate a, LocalDate b) { return a.days == b.days; }
  friend bool operator!=(LocalDate a, LocalDate b) { return a.days != b.days; }
  friend bool operator<(LocalDate a, LocalDate b) { return a.days < b.days; }
  friend bool operator<=(LocalDate a, LocalDate b) { return a.days <= b.days; }
  friend bool operator>(LocalDate a, LocalDate b) { return a.days > b.days; }
  friend bool operator>=(LocalDate a, LocalDate b) { return a.days >= b.days; }
};

inline LocalDate operator+(LocalDate d, std::int32_t days) { return {d.days + days}; }
inline LocalDate operator-(LocalDate d, std::int32_t days) { return {d.days - days}; }

constexpr std::int64_t kSecsPerDay = 86400;
constexpr std::int64_t kSecsPerHour = 3600;

// Local calendar day containing the instant, given the user's offset from UTC
// in minutes (east positive).
LocalDate local_date_of(Timestamp t, int tz_offset_min);

// UTC instant at which the local day begins.
Timestamp day_start(LocalDate date, int tz_offset_min);

// Fractional local hour of day in [0, 24).
double local_hour_of(Timestamp t, int tz_offset_min);

// "2025-01-31T08:30:00Z" <-> Timestamp. Parsing accepts only this exact shape
// (UTC, second precision); anything else is a parse_error.
std::string to_iso8601(Timestamp t);
Timestamp parse_iso8601(const std::string& text);

// "2025-01-31" <-> LocalDate.
std::string to_date_string(LocalDate d);
LocalDate parse_date_string(const std::string& text);

}  // namespace pulse

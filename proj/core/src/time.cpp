#include "pulse/time.hpp"

#include <cstdio>

#include "pulse/error.hpp"

namespace pulse {
namespace {

// Floor division that stays correct for negative numerators.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

// Civil-calendar conversions (proleptic Gregorian), days relative to 1970-01-01.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = floor_div(y, 400);
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

LocalDate local_date_of(Timestamp t, int tz_offset_min) {
  return {static_cast<std::int32_t>(
      floor_div(t.secs + static_cast<std::int64_t>(tz_offset_min) * 60, kSecsPerDay))};
}

Timestamp day_start(LocalDate date, int tz_offset_min) {
  return {static_cast<std::int64_t>(date.days) * kSecsPerDay -
          static_cast<std::int64_t>(tz_offset_min) * 60};
}

double local_hour_of(Timestamp t, int tz_offset_min) {
  const std::int64_t local = t.secs + static_cast<std::int64_t>(tz_offset_min) * 60;
  return static_cast<double>(floor_mod(local, kSecsPerDay)) / 3600.0;
}

std::string to_iso8601(Timestamp t) {
  const std::int64_t days = floor_div(t.secs, kSecsPerDay);
  const std::int64_t rem = floor_mod(t.secs, kSecsPerDay);
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

Timestamp parse_iso8601(const std::string& text) {
  int y, mo, d, h, mi, s;
  char z = 0;
  if (text.size() != 20 ||
      std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
      z != 'Z') {
    raise(ErrorCode::parse_error, "bad timestamp (want YYYY-MM-DDThh:mm:ssZ): " + text);
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 ||
      s < 0) {
    raise(ErrorCode::parse_error, "timestamp out of range: " + text);
  }
  return {days_from_civil(y, mo, d) * kSecsPerDay + h * 3600 + mi * 60 + s};
}

std::string to_date_string(LocalDate date) {
  int y, m, d;
  civil_from_days(date.days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

LocalDate parse_date_string(const std::string& text) {
  int y, m, d;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || m < 1 ||
      m > 12 || d < 1 || d > 31) {
    raise(ErrorCode::parse_error, "bad date (want YYYY-MM-DD): " + text);
  }
  return {static_cast<std::int32_t>(days_from_civil(y, m, d))};
}

}  // namespace pulse

#pragma once

// Hand-built fixtures shared across the unit tests. Values are chosen so the
// expected tool outputs can be recomputed by hand in the assertions.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pulse/evalkit.hpp"
#include "pulse/model.hpp"
#include "pulse/time.hpp"
#include "pulse/timestore.hpp"

namespace fixtures {

inline pulse::Timestamp ts(const std::string& iso) { return pulse::parse_iso8601(iso); }

// --- event builders ----------------------------------------------------------

inline pulse::SensingEvent motion_ev(const std::string& user, const std::string& iso,
                                     pulse::MotionActivity a, double minutes) {
  return {user, ts(iso), pulse::Modality::motion, pulse::MotionPayload{a, minutes}};
}

inline pulse::SensingEvent screen_ev(const std::string& user, const std::string& iso,
                                     pulse::ScreenKind k, double minutes = 0) {
  return {user, ts(iso), pulse::Modality::screen, pulse::ScreenPayload{k, minutes}};
}

inline pulse::SensingEvent gps_ev(const std::string& user, const std::string& iso, double km,
                                  bool at_home, int cluster) {
  return {user, ts(iso), pulse::Modality::gps, pulse::GpsPayload{km, at_home, cluster}};
}

inline pulse::SensingEvent app_ev(const std::string& user, const std::string& iso,
                                  const std::string& category, double minutes) {
  return {user, ts(iso), pulse::Modality::app_usage, pulse::AppUsagePayload{category, minutes}};
}

inline pulse::SensingEvent key_ev(const std::string& user, const std::string& iso, int chars,
                                  double minutes) {
  return {user, ts(iso), pulse::Modality::keyboard, pulse::KeyboardPayload{chars, minutes}};
}

inline pulse::SensingEvent sleep_ev(const std::string& user, const std::string& start_iso,
                                    const std::string& end_iso) {
  return {user, ts(end_iso), pulse::Modality::sleep, pulse::SleepPayload{ts(start_iso), ts(end_iso)}};
}

inline pulse::SensingEvent light_ev(const std::string& user, const std::string& iso, double lux) {
  return {user, ts(iso), pulse::Modality::light, pulse::LightPayload{lux}};
}

// Alternating-bit target pattern keyed to the entry number, so every fixture
// entry has deterministic, distinct labels.
inline pulse::BinaryTargets pattern_targets(int i) {
  pulse::BinaryTargets t{};
  for (int j = 0; j < pulse::kNumBinaryTargets; ++j) t[static_cast<std::size_t>(j)] = ((i + j) % 2 == 0);
  return t;
}

inline pulse::EmaEntry ema(const std::string& user, const std::string& iso, double pa, double na,
                           double er, int pattern_i,
                           std::optional<std::string> diary = std::nullopt) {
  pulse::EmaEntry e;
  e.user_id = user;
  e.timestamp = ts(iso);
  e.pa_score = pa;
  e.na_score = na;
  e.er_desire_score = er;
  e.binary_targets = pattern_targets(pattern_i);
  e.diary = std::move(diary);
  return e;
}

// --- the mini cohort ----------------------------------------------------------
//
// u001  ios, UTC. One fully instrumented day (2025-03-01) with hand-checkable
//       aggregates: 7.5 h sleep ending 06:30 (onset 23.0), stationary 42 /
//       walking 11 / running 8 minutes before 14:00, two screen sessions
//       (12.5 + 23.0 min), first unlock 08:05, gps 0.2 km home + 2.4 km away,
//       keyboard 120 chars, light 350 lux before 14:00. Four survey entries.
// a001  android, UTC-5, app-usage events, two entries.
// p001/p002  training-fold peers with diaries, one instrumented day each.

struct MiniCohort {
  std::vector<pulse::UserProfile> profiles;
  std::vector<pulse::SensingEvent> events;
  std::vector<pulse::EmaEntry> entries;
};

inline MiniCohort mini_cohort() {
  using pulse::MotionActivity;
  using pulse::ScreenKind;
  MiniCohort c;

  pulse::UserProfile u;
  u.user_id = "u001";
  u.platform = pulse::Platform::ios;
  u.tz_offset_min = 0;
  u.demographics = "adult";
  u.cancer_history = "in_treatment";
  u.traits = {{"neuroticism", 0.4}};
  c.profiles.push_back(u);

  pulse::UserProfile a;
  a.user_id = "a001";
  a.platform = pulse::Platform::android;
  a.tz_offset_min = -300;
  a.demographics = "adult";
  a.cancer_history = "post_treatment";
  c.profiles.push_back(a);

  pulse::UserProfile p1 = u;
  p1.user_id = "p001";
  c.profiles.push_back(p1);
  pulse::UserProfile p2 = u;
  p2.user_id = "p002";
  c.profiles.push_back(p2);

  // u001 events, 2025-03-01 (+ one next-morning sleep event).
  c.events.push_back(sleep_ev("u001", "2025-02-28T23:00:00Z", "2025-03-01T06:30:00Z"));
  c.events.push_back(sleep_ev("u001", "2025-03-01T23:30:00Z", "2025-03-02T07:00:00Z"));
  c.events.push_back(motion_ev("u001", "2025-03-01T09:10:00Z", MotionActivity::stationary, 42.0));
  c.events.push_back(motion_ev("u001", "2025-03-01T09:35:00Z", MotionActivity::walking, 11.0));
  c.events.push_back(motion_ev("u001", "2025-03-01T12:50:00Z", MotionActivity::running, 8.0));
  c.events.push_back(motion_ev("u001", "2025-03-01T15:40:00Z", MotionActivity::automotive, 7.0));
  c.events.push_back(screen_ev("u001", "2025-03-01T08:05:00Z", ScreenKind::unlock));
  c.events.push_back(screen_ev("u001", "2025-03-01T08:06:00Z", ScreenKind::session, 12.5));
  c.events.push_back(screen_ev("u001", "2025-03-01T13:10:00Z", ScreenKind::unlock));
  c.events.push_back(screen_ev("u001", "2025-03-01T13:11:00Z", ScreenKind::session, 23.0));
  c.events.push_back(gps_ev("u001", "2025-03-01T09:05:00Z", 0.2, true, 0));
  c.events.push_back(gps_ev("u001", "2025-03-01T13:05:00Z", 2.4, false, 2));
  c.events.push_back(key_ev("u001", "2025-03-01T10:15:00Z", 120, 4.0));
  c.events.push_back(light_ev("u001", "2025-03-01T10:00:00Z", 350.0));
  c.events.push_back(light_ev("u001", "2025-03-01T22:00:00Z", 30.0));

  c.entries.push_back(ema("u001", "2025-03-01T09:00:00Z", 30, 10, 4, 0,
                          "calm morning walk in the park"));
  c.entries.push_back(ema("u001", "2025-03-01T14:00:00Z", 25, 18, 6, 1,
                          "stressful meeting with the care team"));
  c.entries.push_back(ema("u001", "2025-03-01T20:00:00Z", 28, 12, 5, 2));
  c.entries.push_back(ema("u001", "2025-03-02T09:00:00Z", 35, 8, 2, 3,
                          "slept well and feeling hopeful today"));

  // a001 events (UTC instants; local day = UTC-5).
  c.events.push_back(app_ev("a001", "2025-03-01T15:00:00Z", "social", 25.0));
  c.events.push_back(app_ev("a001", "2025-03-01T16:00:00Z", "productivity", 12.0));
  c.events.push_back(screen_ev("a001", "2025-03-01T14:55:00Z", ScreenKind::unlock));
  c.events.push_back(screen_ev("a001", "2025-03-01T14:56:00Z", ScreenKind::session, 10.0));
  c.events.push_back(motion_ev("a001", "2025-03-01T15:30:00Z", MotionActivity::stationary, 50.0));

  c.entries.push_back(ema("a001", "2025-03-01T18:00:00Z", 20, 20, 7, 0,
                          "long tiring afternoon of chores"));
  c.entries.push_back(ema("a001", "2025-03-02T18:00:00Z", 22, 25, 3, 1,
                          "quiet evening reading at home"));

  // Peers: one instrumented morning each plus diaries for the text index.
  c.events.push_back(motion_ev("p001", "2025-03-01T09:00:00Z", MotionActivity::stationary, 30.0));
  c.events.push_back(screen_ev("p001", "2025-03-01T10:00:00Z", ScreenKind::session, 15.0));
  c.entries.push_back(ema("p001", "2025-03-01T09:00:00Z", 32, 8, 3, 0,
                          "calm walk in the park this morning"));
  c.entries.push_back(ema("p001", "2025-03-01T14:00:00Z", 22, 24, 7, 1,
                          "stressful meeting with the team today"));
  c.entries.push_back(ema("p001", "2025-03-01T20:00:00Z", 28, 12, 4, 2,
                          "quiet evening reading at home"));

  c.events.push_back(motion_ev("p002", "2025-03-01T08:30:00Z", MotionActivity::walking, 25.0));
  c.events.push_back(gps_ev("p002", "2025-03-01T09:00:00Z", 1.2, false, 1));
  c.entries.push_back(ema("p002", "2025-03-01T09:30:00Z", 30, 10, 2, 0,
                          "long walk by the river felt calm"));
  c.entries.push_back(ema("p002", "2025-03-01T15:00:00Z", 18, 30, 8, 1,
                          "worried about the scan results tomorrow"));
  c.entries.push_back(ema("p002", "2025-03-01T21:00:00Z", 34, 9, 3, 2,
                          "pleasant dinner with the family tonight"));

  return c;
}

inline pulse::Store mini_store() {
  MiniCohort c = mini_cohort();
  return pulse::Store::ingest(c.profiles, c.events, c.entries);
}

// Five-day single-user cohort ("m001", ios, UTC) with a strict two-regime day
// pattern driving baseline and similarity expectations:
//   active days (Feb 25, Feb 27): walking 60 min, 5.0 km away from home
//   quiet days  (Feb 26, Feb 28, Mar 1): walking 10 min, 0.2 km at home
// Every day: stationary 60 min @10:00, walking @10:30, unlock @10:55, screen
// session 20 min @11:00, gps fix @12:00. Two surveys per day (09:00, 14:00);
// sequential entry number i sets pa=20+i, na=10+i, er=i and pattern_targets(i).
// The natural context is the last survey, 2025-03-01T14:00:00Z (entry 9).
inline MiniCohort multiday_cohort() {
  using pulse::MotionActivity;
  using pulse::ScreenKind;
  MiniCohort c;
  pulse::UserProfile m;
  m.user_id = "m001";
  m.platform = pulse::Platform::ios;
  m.tz_offset_min = 0;
  m.demographics = "adult";
  m.cancer_history = "in_treatment";
  c.profiles.push_back(m);

  const std::vector<std::string> dates = {"2025-02-25", "2025-02-26", "2025-02-27",
                                          "2025-02-28", "2025-03-01"};
  int seq = 0;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const std::string& d = dates[i];
    const bool active = (i % 2 == 0) && i != 4;
    const double walk_min = active ? 60.0 : 10.0;
    const double km = active ? 5.0 : 0.2;
    c.events.push_back(motion_ev("m001", d + "T10:00:00Z", MotionActivity::stationary, 60.0));
    c.events.push_back(motion_ev("m001", d + "T10:30:00Z", MotionActivity::walking, walk_min));
    c.events.push_back(screen_ev("m001", d + "T10:55:00Z", ScreenKind::unlock));
    c.events.push_back(screen_ev("m001", d + "T11:00:00Z", ScreenKind::session, 20.0));
    c.events.push_back(gps_ev("m001", d + "T12:00:00Z", km, !active, active ? 3 : 0));
    for (const char* hh : {"T09:00:00Z", "T14:00:00Z"}) {
      c.entries.push_back(ema("m001", d + hh, 20.0 + seq, 10.0 + seq, seq, seq));
      ++seq;
    }
  }
  return c;
}

inline pulse::Store multiday_store() {
  MiniCohort c = multiday_cohort();
  return pulse::Store::ingest(c.profiles, c.events, c.entries);
}

// --- filesystem helpers --------------------------------------------------------

// Fresh scratch directory under the system temp root; unique per call.
inline std::string fresh_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("pulse_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// --- eval row builder -----------------------------------------------------------

inline pulse::EvalRow basic_row(const std::string& user, int entry, const std::string& condition) {
  pulse::EvalRow r;
  r.user_id = user;
  r.entry_index = entry;
  r.condition = condition;
  return r;
}

}  // namespace fixtures

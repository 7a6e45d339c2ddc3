#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pulse/time.hpp"

namespace pulse {

// ---------------------------------------------------------------------------
// Sensing side
// ---------------------------------------------------------------------------

enum class Platform { ios, android };

enum class Modality { motion, screen, gps, app_usage, keyboard, sleep, light };
constexpr int kNumModalities = 7;

enum class MotionActivity { stationary, walking, running, automotive };
constexpr int kNumMotionActivities = 4;

enum class ScreenKind { unlock, lock, session };

std::string_view to_string(Platform p);
std::string_view to_string(Modality m);
std::string_view to_string(MotionActivity a);
std::string_view to_string(ScreenKind k);
Platform platform_from_string(std::string_view s);
Modality modality_from_string(std::string_view s);
MotionActivity motion_activity_from_string(std::string_view s);
ScreenKind screen_kind_from_string(std::string_view s);

struct MotionPayload {
  MotionActivity activity = MotionActivity::stationary;
  double duration_min = 0;
};

struct ScreenPayload {
  ScreenKind kind = ScreenKind::session;
  double duration_min = 0;  // meaningful for kind == session
};

struct GpsPayload {
  double displacement_km = 0;  // distance covered since the previous fix
  bool at_home = false;
  int cluster_id = 0;  // stable per-user place cluster (0 = home)
};

struct AppUsagePayload {
  std::string category;  // e.g. "social", "productivity"
  double duration_min = 0;
};

struct KeyboardPayload {
  int chars = 0;
  double duration_min = 0;
};

struct SleepPayload {
  Timestamp start;  // episode start; the event itself is stamped at the end
  Timestamp end;
};

struct LightPayload {
  double lux = 0;
};

using SensingPayload = std::variant<MotionPayload, ScreenPayload, GpsPayload, AppUsagePayload,
                                    KeyboardPayload, SleepPayload, LightPayload>;

struct SensingEvent {
  std::string user_id;
  Timestamp timestamp;
  Modality modality = Modality::motion;
  SensingPayload payload;
};

// ---------------------------------------------------------------------------
// Self-report side
// ---------------------------------------------------------------------------

// Binary prediction targets, in canonical order. Serialization, reports and
// prediction schemas all use exactly these names.
constexpr int kNumBinaryTargets = 16;
const std::array<std::string_view, kNumBinaryTargets>& binary_target_names();

// Index into binary_target_names(); not_found error for unknown names.
int binary_target_index(std::string_view name);
bool is_binary_target(std::string_view name);

// The four targets headline reports focus on.
const std::array<std::string_view, 4>& focus_target_names();

enum class ScoreKind { pa, na, er_desire };
std::string_view to_string(ScoreKind k);

// Inclusive score ranges; PA/NA share one scale, ER desire has its own.
struct TargetSchema {
  double pa_min = 0, pa_max = 50;
  double na_min = 0, na_max = 50;
  double er_min = 0, er_max = 10;

  double score_min(ScoreKind k) const;
  double score_max(ScoreKind k) const;
};

using BinaryTargets = std::array<bool, kNumBinaryTargets>;

struct EmaEntry {
  std::string user_id;
  Timestamp timestamp;
  double pa_score = 0;
  double na_score = 0;
  double er_desire_score = 0;
  BinaryTargets binary_targets{};
  std::optional<std::string> diary;  // absent when the participant skipped it

  double score(ScoreKind k) const;
  bool target(std::string_view name) const { return binary_targets[static_cast<std::size_t>(binary_target_index(name))]; }
};

struct UserProfile {
  std::string user_id;
  Platform platform = Platform::ios;
  int tz_offset_min = 0;  // local-time offset from UTC, east positive
  std::string demographics;
  std::string cancer_history;
  std::map<std::string, double> traits;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Labels one user's continuous scores against that user's own median: true
// iff score > median (ties are false). Median of an even count is the mean of
// the two middle values. Requires >= 2 entries (insufficient_data otherwise).
// Ground-truth construction only; never exposed through the sensing tools.
std::vector<bool> derive_state_labels(const std::vector<double>& scores);

struct UserValidation {
  std::string user_id;
  int n_entries = 0;
  int n_events = 0;
  std::vector<std::string> modalities_seen;  // sorted canonical names
};

struct ValidationReport {
  int n_users = 0;
  int n_entries = 0;
  int n_events = 0;
  std::vector<UserValidation> per_user;        // sorted by user_id
  std::vector<std::string> violations;         // human-readable, deterministic order
  bool ok() const { return violations.empty(); }
};

// Structural dataset checks: duplicate profiles, orphan events/entries,
// per-user EMA ordering, platform/modality consistency (app_usage only on
// android), payload sanity (non-negative durations, sleep end after start).
// Report-only: never throws on content problems.
ValidationReport validate_dataset(const std::vector<UserProfile>& profiles,
                                  const std::vector<SensingEvent>& events,
                                  const std::vector<EmaEntry>& entries);

}  // namespace pulse

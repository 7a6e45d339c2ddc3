#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pulse/model.hpp"
#include "pulse/time.hpp"

namespace pulse {

// Read capability bound to one user at one EMA instant. Every read through a
// context sees events with timestamp strictly before ema_timestamp and nothing
// else; the instant itself is excluded. Cheap value object, safe to copy
// across threads (the owning Store must outlive it).
struct AccessContext {
  std::string user_id;
  Timestamp ema_timestamp;
  int tz_offset_min = 0;
  std::set<Modality> capabilities;  // modalities with >= 1 event before the boundary

  LocalDate boundary_date() const { return local_date_of(ema_timestamp, tz_offset_min); }
};

enum class ModalityStatus { available, unavailable_platform, unavailable_sparse };
std::string_view to_string(ModalityStatus s);

// Result of a windowed read: either events plus available, or an explicit
// data-not-available status (platform gap or zero prior events). Absence is a
// first-class answer, never an error.
struct WindowResult {
  ModalityStatus status = ModalityStatus::available;
  std::vector<SensingEvent> events;
};

// Names of the numeric per-day features, in the canonical order used by
// sensing fingerprints, compare_to_baseline and docs/formats.md.
constexpr int kNumDailyFeatures = 15;
const std::array<std::string_view, kNumDailyFeatures>& daily_feature_names();
int daily_feature_index(std::string_view name);  // not_found on unknown name

// Per-day behavioral aggregates. A field is populated only when its modality
// contributed at least one event to the day's span; the has_* flags mirror
// that. Sleep episodes are credited to the local date their END falls on;
// sleep_onset_hour is the local clock hour of the credited episode's start.
struct DailyAggregates {
  LocalDate date;
  bool partial = false;  // span was clipped at the context boundary

  bool has_sleep = false, has_motion = false, has_screen = false, has_gps = false,
       has_app = false, has_keyboard = false, has_light = false;

  std::optional<double> sleep_duration_h;
  std::optional<double> sleep_onset_hour;
  std::optional<double> stationary_min;
  std::optional<double> walking_min;
  std::optional<double> running_min;
  std::optional<double> automotive_min;
  std::optional<double> screen_total_min;
  std::optional<double> screen_sessions;
  std::optional<double> first_unlock_hour;
  std::optional<double> distance_km;
  std::optional<double> time_at_home_frac;
  std::optional<double> location_variance;
  std::optional<double> app_total_min;
  std::optional<double> keyboard_chars;
  std::optional<double> light_mean_lux;
  std::map<std::string, double> app_min_by_category;  // empty unless has_app

  // Value of a named feature (daily_feature_names order); nullopt if absent.
  std::optional<double> feature(std::string_view name) const;
  std::optional<double> feature(int index) const;
};

// Immutable per-cohort event/EMA store. Built once by ingest(); all reads go
// through an AccessContext so the temporal boundary is enforced in exactly one
// place.
class Store {
 public:
  // Validates referential integrity (duplicate profiles, orphan rows are
  // errors here, unlike the report-only validate_dataset), sorts events by
  // (user, modality, timestamp) and EMAs by (user, timestamp), then freezes.
  static Store ingest(std::vector<UserProfile> profiles, std::vector<SensingEvent> events,
                      std::vector<EmaEntry> entries);

  // Convenience: load profiles.jsonl / events.jsonl / ema.jsonl from dir.
  static Store open_dir(const std::string& dir);

  const UserProfile& profile(const std::string& user_id) const;
  std::span<const EmaEntry> entries(const std::string& user_id) const;
  std::vector<std::string> user_ids() const;

  // All events of one user+modality, time-ascending (test/oracle access; tool
  // code goes through query_window).
  std::span<const SensingEvent> all_events(const std::string& user_id, Modality m) const;

  // Binds a context. ema_timestamp must equal the timestamp of one of the
  // user's EMA entries (not_found otherwise).
  AccessContext open_context(const std::string& user_id, Timestamp ema_timestamp) const;

  // Events with start <= t < end. Preconditions: start < end and
  // end <= ctx.ema_timestamp (boundary_violation otherwise).
  WindowResult query_window(const AccessContext& ctx, Modality m, Timestamp start,
                            Timestamp end) const;

  // Aggregates for a local calendar day; the covered span ends at
  // min(end-of-day, boundary). A date whose span is empty (day starts at or
  // after the boundary) is a boundary_violation.
  DailyAggregates daily_aggregates(const AccessContext& ctx, LocalDate date) const;

  ModalityStatus modality_status(const AccessContext& ctx, Modality m) const;

  // Position of the context's EMA in the user's chronological sequence
  // (0-based) plus the entries strictly before the boundary.
  int entry_index_of(const AccessContext& ctx) const;
  std::vector<const EmaEntry*> entries_before(const AccessContext& ctx) const;

  // Earliest event timestamp visible under the context, any modality;
  // nullopt when the user has no admissible events at all.
  std::optional<Timestamp> first_event_before(const AccessContext& ctx) const;

 private:
  struct UserData {
    UserProfile profile;
    std::array<std::vector<SensingEvent>, kNumModalities> events;
    std::vector<EmaEntry> entries;
  };

  const UserData& user(const std::string& user_id) const;

  std::map<std::string, UserData> users_;
};

}  // namespace pulse

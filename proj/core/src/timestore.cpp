#include "pulse/timestore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"

namespace pulse {

std::string_view to_string(ModalityStatus s) {
  switch (s) {
    case ModalityStatus::available: return "available";
    case ModalityStatus::unavailable_platform: return "unavailable_platform";
    case ModalityStatus::unavailable_sparse: return "unavailable_sparse";
  }
  return "?";
}

const std::array<std::string_view, kNumDailyFeatures>& daily_feature_names() {
  static const std::array<std::string_view, kNumDailyFeatures> names = {
      "sleep_duration_h", "sleep_onset_hour", "stationary_min",    "walking_min",
      "running_min",      "automotive_min",   "screen_total_min",  "screen_sessions",
      "first_unlock_hour", "distance_km",     "time_at_home_frac", "location_variance",
      "app_total_min",    "keyboard_chars",   "light_mean_lux",
  };
  return names;
}

int daily_feature_index(std::string_view name) {
  const auto& names = daily_feature_names();
  for (int i = 0; i < kNumDailyFeatures; ++i) {
    if (names[static_cast<std::size_t>(i)] == name) return i;
  }
  raise(ErrorCode::not_found, "unknown daily feature: " + std::string(name));
}

std::optional<double> DailyAggregates::feature(int index) const {
  switch (index) {
    case 0: return sleep_duration_h;
    case 1: return sleep_onset_hour;
    case 2: return stationary_min;
    case 3: return walking_min;
    case 4: return running_min;
    case 5: return automotive_min;
    case 6: return screen_total_min;
    case 7: return screen_sessions;
    case 8: return first_unlock_hour;
    case 9: return distance_km;
    case 10: return time_at_home_frac;
    case 11: return location_variance;
    case 12: return app_total_min;
    case 13: return keyboard_chars;
    case 14: return light_mean_lux;
    default: raise(ErrorCode::not_found, "daily feature index out of range");
  }
}

std::optional<double> DailyAggregates::feature(std::string_view name) const {
  return feature(daily_feature_index(name));
}

Store Store::ingest(std::vector<UserProfile> profiles, std::vector<SensingEvent> events,
                    std::vector<EmaEntry> entries) {
  Store store;
  for (auto& p : profiles) {
    const std::string id = p.user_id;
    if (store.users_.count(id)) raise(ErrorCode::invalid_argument, "duplicate user_id: " + id);
    store.users_[id].profile = std::move(p);
  }
  for (auto& e : events) {
    auto it = store.users_.find(e.user_id);
    if (it == store.users_.end()) {
      raise(ErrorCode::invalid_argument, "event for unknown user: " + e.user_id);
    }
    it->second.events[static_cast<std::size_t>(e.modality)].push_back(std::move(e));
  }
  for (auto& e : entries) {
    auto it = store.users_.find(e.user_id);
    if (it == store.users_.end()) {
      raise(ErrorCode::invalid_argument, "EMA entry for unknown user: " + e.user_id);
    }
    it->second.entries.push_back(std::move(e));
  }
  for (auto& [id, data] : store.users_) {
    for (auto& lane : data.events) {
      std::stable_sort(lane.begin(), lane.end(), [](const SensingEvent& a, const SensingEvent& b) {
        return a.timestamp < b.timestamp;
      });
    }
    std::stable_sort(data.entries.begin(), data.entries.end(),
                     [](const EmaEntry& a, const EmaEntry& b) { return a.timestamp < b.timestamp; });
  }
  return store;
}

Store Store::open_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  return ingest(load_profiles_jsonl((base / "profiles.jsonl").string()),
                load_events_jsonl((base / "events.jsonl").string()),
                load_ema_jsonl((base / "ema.jsonl").string()));
}

const Store::UserData& Store::user(const std::string& user_id) const {
  auto it = users_.find(user_id);
  if (it == users_.end()) raise(ErrorCode::not_found, "unknown user: " + user_id);
  return it->second;
}

const UserProfile& Store::profile(const std::string& user_id) const {
  return user(user_id).profile;
}

std::span<const EmaEntry> Store::entries(const std::string& user_id) const {
  return user(user_id).entries;
}

std::vector<std::string> Store::user_ids() const {
  std::vector<std::string> ids;
  ids.reserve(users_.size());
  for (const auto& [id, _] : users_) ids.push_back(id);
  return ids;
}

std::span<const SensingEvent> Store::all_events(const std::string& user_id, Modality m) const {
  return user(user_id).events[static_cast<std::size_t>(m)];
}

AccessContext Store::open_context(const std::string& user_id, Timestamp ema_timestamp) const {
  const UserData& data = user(user_id);
  const bool known = std::any_of(data.entries.begin(), data.entries.end(),
                                 [&](const EmaEntry& e) { return e.timestamp == ema_timestamp; });
  if (!known) {
    raise(ErrorCode::not_found,
          "no EMA entry for " + user_id + " at " + to_iso8601(ema_timestamp));
  }
  AccessContext ctx;
  ctx.user_id = user_id;
  ctx.ema_timestamp = ema_timestamp;
  ctx.tz_offset_min = data.profile.tz_offset_min;
  for (int m = 0; m < kNumModalities; ++m) {
    const auto& lane = data.events[static_cast<std::size_t>(m)];
    if (!lane.empty() && lane.front().timestamp < ema_timestamp) {
      ctx.capabilities.insert(static_cast<Modality>(m));
    }
  }
  return ctx;
}

ModalityStatus Store::modality_status(const AccessContext& ctx, Modality m) const {
  const UserData& data = user(ctx.user_id);
  if (m == Modality::app_usage && data.profile.platform == Platform::ios) {
    return ModalityStatus::unavailable_platform;
  }
  return ctx.capabilities.count(m) ? ModalityStatus::available
                                   : ModalityStatus::unavailable_sparse;
}

WindowResult Store::query_window(const AccessContext& ctx, Modality m, Timestamp start,
                                 Timestamp end) const {
  if (!(start < end)) {
    raise(ErrorCode::invalid_argument, "query window is empty (start >= end)");
  }
  if (ctx.ema_timestamp < end) {
    raise(ErrorCode::boundary_violation,
          "window end " + to_iso8601(end) + " is after the context boundary " +
              to_iso8601(ctx.ema_timestamp));
  }
  WindowResult out;
  out.status = modality_status(ctx, m);
  if (out.status != ModalityStatus::available) return out;

  const auto& lane = user(ctx.user_id).events[static_cast<std::size_t>(m)];
  auto lo = std::lower_bound(lane.begin(), lane.end(), start,
                             [](const SensingEvent& e, Timestamp t) { return e.timestamp < t; });
  for (auto it = lo; it != lane.end() && it->timestamp < end; ++it) out.events.push_back(*it);
  return out;
}

namespace {

struct DayAccumulator {
  // sleep
  double sleep_h = 0;
  std::optional<double> onset_hour;  // of the first-ending credited episode
  Timestamp first_end{0};
  bool any_sleep = false;
  // motion
  double motion_min[kNumMotionActivities] = {0, 0, 0, 0};
  bool any_motion = false;
  // screen
  double screen_min = 0;
  int sessions = 0;
  std::optional<double> first_unlock;
  bool any_screen = false;
  // gps
  double km = 0;
  int fixes = 0, home_fixes = 0;
  double w_sum = 0, w_mean = 0, w_m2 = 0;  // displacement-weighted cluster stats
  bool any_gps = false;
  // app
  double app_min = 0;
  std::map<std::string, double> by_category;
  bool any_app = false;
  // keyboard
  double chars = 0;
  bool any_keyboard = false;
  // light
  double lux_sum = 0;
  int lux_n = 0;
};

}  // namespace

DailyAggregates Store::daily_aggregates(const AccessContext& ctx, LocalDate date) const {
  const int tz = ctx.tz_offset_min;
  const Timestamp span_start = day_start(date, tz);
  const Timestamp day_end = day_start(date + 1, tz);
  if (!(span_start < ctx.ema_timestamp)) {
    raise(ErrorCode::boundary_violation,
          "day " + to_date_string(date) + " starts at or after the context boundary");
  }
  const Timestamp span_end = std::min(day_end, ctx.ema_timestamp);

  DailyAggregates agg;
  agg.date = date;
  agg.partial = span_end < day_end;

  DayAccumulator acc;
  const UserData& data = user(ctx.user_id);
  for (int mi = 0; mi < kNumModalities; ++mi) {
    const Modality m = static_cast<Modality>(mi);
    if (modality_status(ctx, m) != ModalityStatus::available) continue;
    const auto& lane = data.events[static_cast<std::size_t>(mi)];
    auto lo = std::lower_bound(lane.begin(), lane.end(), span_start,
                               [](const SensingEvent& e, Timestamp t) { return e.timestamp < t; });
    for (auto it = lo; it != lane.end() && it->timestamp < span_end; ++it) {
      const SensingEvent& ev = *it;
      switch (m) {
        case Modality::sleep: {
          const auto& p = std::get<SleepPayload>(ev.payload);
          // Credited here because the event is stamped at the episode end and
          // that end falls inside this local day's span.
          acc.sleep_h += static_cast<double>(p.end.secs - p.start.secs) / 3600.0;
          if (!acc.any_sleep || p.end < acc.first_end) {
            acc.first_end = p.end;
            acc.onset_hour = local_hour_of(p.start, tz);
          }
          acc.any_sleep = true;
          break;
        }
        case Modality::motion: {
          const auto& p = std::get<MotionPayload>(ev.payload);
          acc.motion_min[static_cast<std::size_t>(p.activity)] += p.duration_min;
          acc.any_motion = true;
          break;
        }
        case Modality::screen: {
          const auto& p = std::get<ScreenPayload>(ev.payload);
          acc.any_screen = true;
          if (p.kind == ScreenKind::session) {
            acc.screen_min += p.duration_min;
            acc.sessions += 1;
          } else if (p.kind == ScreenKind::unlock && !acc.first_unlock) {
            acc.first_unlock = local_hour_of(ev.timestamp, tz);
          }
          break;
        }
        case Modality::gps: {
          const auto& p = std::get<GpsPayload>(ev.payload);
          acc.any_gps = true;
          acc.km += p.displacement_km;
          acc.fixes += 1;
          if (p.at_home) acc.home_fixes += 1;
          // Displacement-weighted running variance of cluster occupancy
          // (West 1979); log-scaled on output. Weight = 1 + displacement.
          const double w = 1.0 + p.displacement_km;
          const double x = static_cast<double>(p.cluster_id);
          acc.w_sum += w;
          const double d = x - acc.w_mean;
          acc.w_mean += (w / acc.w_sum) * d;
          acc.w_m2 += w * d * (x - acc.w_mean);
          break;
        }
        case Modality::app_usage: {
          const auto& p = std::get<AppUsagePayload>(ev.payload);
          acc.any_app = true;
          acc.app_min += p.duration_min;
          acc.by_category[p.category] += p.duration_min;
          break;
        }
        case Modality::keyboard: {
          const auto& p = std::get<KeyboardPayload>(ev.payload);
          acc.any_keyboard = true;
          acc.chars += p.chars;
          break;
        }
        case Modality::light: {
          const auto& p = std::get<LightPayload>(ev.payload);
          acc.lux_sum += p.lux;
          acc.lux_n += 1;
          break;
        }
      }
    }
  }

  if (acc.any_sleep) {
    agg.has_sleep = true;
    agg.sleep_duration_h = acc.sleep_h;
    agg.sleep_onset_hour = acc.onset_hour;
  }
  if (acc.any_motion) {
    agg.has_motion = true;
    agg.stationary_min = acc.motion_min[0];
    agg.walking_min = acc.motion_min[1];
    agg.running_min = acc.motion_min[2];
    agg.automotive_min = acc.motion_min[3];
  }
  if (acc.any_screen) {
    agg.has_screen = true;
    agg.screen_total_min = acc.screen_min;
    agg.screen_sessions = static_cast<double>(acc.sessions);
    agg.first_unlock_hour = acc.first_unlock;
  }
  if (acc.any_gps) {
    agg.has_gps = true;
    agg.distance_km = acc.km;
    agg.time_at_home_frac = static_cast<double>(acc.home_fixes) / acc.fixes;
    agg.location_variance = std::log1p(acc.w_m2 / acc.w_sum);
  }
  if (acc.any_app) {
    agg.has_app = true;
    agg.app_total_min = acc.app_min;
    agg.app_min_by_category = acc.by_category;
  }
  if (acc.any_keyboard) {
    agg.has_keyboard = true;
    agg.keyboard_chars = acc.chars;
  }
  if (acc.lux_n > 0) {
    agg.has_light = true;
    agg.light_mean_lux = acc.lux_sum / acc.lux_n;
  }
  return agg;
}

int Store::entry_index_of(const AccessContext& ctx) const {
  const auto& list = user(ctx.user_id).entries;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].timestamp == ctx.ema_timestamp) return static_cast<int>(i);
  }
  raise(ErrorCode::not_found, "context timestamp no longer present");
}

std::vector<const EmaEntry*> Store::entries_before(const AccessContext& ctx) const {
  std::vector<const EmaEntry*> out;
  for (const auto& e : user(ctx.user_id).entries) {
    if (e.timestamp < ctx.ema_timestamp) out.push_back(&e);
  }
  return out;
}

std::optional<Timestamp> Store::first_event_before(const AccessContext& ctx) const {
  std::optional<Timestamp> first;
  const UserData& data = user(ctx.user_id);
  for (const auto& lane : data.events) {
    if (lane.empty()) continue;
    const Timestamp t = lane.front().timestamp;
    if (t < ctx.ema_timestamp && (!first || t < *first)) first = t;
  }
  return first;
}

}  // namespace pulse

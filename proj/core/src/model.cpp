#include "pulse/model.hpp"

#include <algorithm>
#include <set>

#include "pulse/error.hpp"

namespace pulse {

std::string_view to_string(Platform p) {
  return p == Platform::ios ? "ios" : "android";
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::motion: return "motion";
    case Modality::screen: return "screen";
    case Modality::gps: return "gps";
    case Modality::app_usage: return "app_usage";
    case Modality::keyboard: return "keyboard";
    case Modality::sleep: return "sleep";
    case Modality::light: return "light";
  }
  return "?";
}

std::string_view to_string(MotionActivity a) {
  switch (a) {
    case MotionActivity::stationary: return "stationary";
    case MotionActivity::walking: return "walking";
    case MotionActivity::running: return "running";
    case MotionActivity::automotive: return "automotive";
  }
  return "?";
}

std::string_view to_string(ScreenKind k) {
  switch (k) {
    case ScreenKind::unlock: return "unlock";
    case ScreenKind::lock: return "lock";
    case ScreenKind::session: return "session";
  }
  return "?";
}

Platform platform_from_string(std::string_view s) {
  if (s == "ios") return Platform::ios;
  if (s == "android") return Platform::android;
  raise(ErrorCode::parse_error, "unknown platform: " + std::string(s));
}

Modality modality_from_string(std::string_view s) {
  if (s == "motion") return Modality::motion;
  if (s == "screen") return Modality::screen;
  if (s == "gps") return Modality::gps;
  if (s == "app_usage") return Modality::app_usage;
  if (s == "keyboard") return Modality::keyboard;
  if (s == "sleep") return Modality::sleep;
  if (s == "light") return Modality::light;
  raise(ErrorCode::parse_error, "unknown modality: " + std::string(s));
}

MotionActivity motion_activity_from_string(std::string_view s) {
  if (s == "stationary") return MotionActivity::stationary;
  if (s == "walking") return MotionActivity::walking;
  if (s == "running") return MotionActivity::running;
  if (s == "automotive") return MotionActivity::automotive;
  raise(ErrorCode::parse_error, "unknown motion activity: " + std::string(s));
}

ScreenKind screen_kind_from_string(std::string_view s) {
  if (s == "unlock") return ScreenKind::unlock;
  if (s == "lock") return ScreenKind::lock;
  if (s == "session") return ScreenKind::session;
  raise(ErrorCode::parse_error, "unknown screen event kind: " + std::string(s));
}

const std::array<std::string_view, kNumBinaryTargets>& binary_target_names() {
  static const std::array<std::string_view, kNumBinaryTargets> names = {
      "PA_State",       "NA_State",           "happy",         "sad",
      "afraid",         "miserable",          "worried",       "cheerful",
      "pleased",        "grateful",           "lonely",        "interaction_quality",
      "physical_pain",  "future_outlook",     "ER_desire_State", "INT_availability",
  };
  return names;
}

int binary_target_index(std::string_view name) {
  const auto& names = binary_target_names();
  for (int i = 0; i < kNumBinaryTargets; ++i) {
    if (names[static_cast<std::size_t>(i)] == name) return i;
  }
  raise(ErrorCode::not_found, "unknown binary target: " + std::string(name));
}

bool is_binary_target(std::string_view name) {
  const auto& names = binary_target_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::array<std::string_view, 4>& focus_target_names() {
  static const std::array<std::string_view, 4> names = {"PA_State", "NA_State", "ER_desire_State",
                                                        "INT_availability"};
  return names;
}

std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::pa: return "pa";
    case ScoreKind::na: return "na";
    case ScoreKind::er_desire: return "er_desire";
  }
  return "?";
}

double TargetSchema::score_min(ScoreKind k) const {
  switch (k) {
    case ScoreKind::pa: return pa_min;
    case ScoreKind::na: return na_min;
    case ScoreKind::er_desire: return er_min;
  }
  return 0;
}

double TargetSchema::score_max(ScoreKind k) const {
  switch (k) {
    case ScoreKind::pa: return pa_max;
    case ScoreKind::na: return na_max;
    case ScoreKind::er_desire: return er_max;
  }
  return 0;
}

double EmaEntry::score(ScoreKind k) const {
  switch (k) {
    case ScoreKind::pa: return pa_score;
    case ScoreKind::na: return na_score;
    case ScoreKind::er_desire: return er_desire_score;
  }
  return 0;
}

std::vector<bool> derive_state_labels(const std::vector<double>& scores) {
  if (scores.size() < 2) {
    raise(ErrorCode::insufficient_data,
          "state labels need >= 2 entries, got " + std::to_string(scores.size()));
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<bool> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > median;
  return labels;
}

namespace {

bool payload_ok(const SensingEvent& ev, std::string& why) {
  bool ok = true;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MotionPayload> || std::is_same_v<T, ScreenPayload> ||
                      std::is_same_v<T, AppUsagePayload> || std::is_same_v<T, KeyboardPayload>) {
          if (p.duration_min < 0) {
            why = "negative duration";
            ok = false;
          }
        }
        if constexpr (std::is_same_v<T, KeyboardPayload>) {
          if (p.chars < 0) {
            why = "negative char count";
            ok = false;
          }
        }
        if constexpr (std::is_same_v<T, SleepPayload>) {
          if (!(p.start < p.end)) {
            why = "sleep episode end not after start";
            ok = false;
          }
        }
        if constexpr (std::is_same_v<T, GpsPayload>) {
          if (p.displacement_km < 0) {
            why = "negative displacement";
            ok = false;
          }
        }
        if constexpr (std::is_same_v<T, LightPayload>) {
          if (p.lux < 0) {
            why = "negative lux";
            ok = false;
          }
        }
      },
      ev.payload);
  return ok;
}

}  // namespace

ValidationReport validate_dataset(const std::vector<UserProfile>& profiles,
                                  const std::vector<SensingEvent>& events,
                                  const std::vector<EmaEntry>& entries) {
  ValidationReport report;
  std::map<std::string, const UserProfile*> by_id;
  for (const auto& p : profiles) {
    if (!by_id.emplace(p.user_id, &p).second) {
      report.violations.push_back("duplicate profile for user " + p.user_id);
    }
  }
  report.n_users = static_cast<int>(by_id.size());
  report.n_events = static_cast<int>(events.size());
  report.n_entries = static_cast<int>(entries.size());

  std::map<std::string, UserValidation> per_user;
  std::map<std::string, std::set<std::string>> modalities;
  for (const auto& [id, _] : by_id) per_user[id].user_id = id;

  int orphan_events = 0, bad_payloads = 0, platform_violations = 0;
  for (const auto& ev : events) {
    auto it = by_id.find(ev.user_id);
    if (it == by_id.end()) {
      ++orphan_events;
      continue;
    }
    per_user[ev.user_id].n_events++;
    modalities[ev.user_id].insert(std::string(to_string(ev.modality)));
    if (ev.modality == Modality::app_usage && it->second->platform == Platform::ios) {
      ++platform_violations;
    }
    std::string why;
    if (!payload_ok(ev, why)) ++bad_payloads;
  }
  if (orphan_events > 0) {
    report.violations.push_back(std::to_string(orphan_events) +
                                " event(s) reference unknown users");
  }
  if (platform_violations > 0) {
    report.violations.push_back(std::to_string(platform_violations) +
                                " app_usage event(s) on ios users (android-only modality)");
  }
  if (bad_payloads > 0) {
    report.violations.push_back(std::to_string(bad_payloads) + " event payload(s) out of range");
  }

  int orphan_entries = 0;
  std::map<std::string, Timestamp> last_ts;
  std::set<std::string> misordered;
  for (const auto& e : entries) {
    if (by_id.find(e.user_id) == by_id.end()) {
      ++orphan_entries;
      continue;
    }
    per_user[e.user_id].n_entries++;
    auto it = last_ts.find(e.user_id);
    if (it != last_ts.end() && !(it->second < e.timestamp)) misordered.insert(e.user_id);
    last_ts[e.user_id] = e.timestamp;
  }
  if (orphan_entries > 0) {
    report.violations.push_back(std::to_string(orphan_entries) +
                                " EMA entr(ies) reference unknown users");
  }
  for (const auto& id : misordered) {
    report.violations.push_back("EMA timestamps not strictly increasing for user " + id);
  }

  for (auto& [id, uv] : per_user) {
    uv.modalities_seen.assign(modalities[id].begin(), modalities[id].end());
    report.per_user.push_back(uv);
  }
  return report;
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::boundary_violation: return "boundary_violation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::format_error: return "format_error";
    case ErrorCode::fold_leakage: return "fold_leakage";
    case ErrorCode::leak_rejected: return "leak_rejected";
    case ErrorCode::pairing_error: return "pairing_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::unavailable: return "unavailable";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::protocol_error: return "protocol_error";
  }
  return "?";
}

}  // namespace pulse

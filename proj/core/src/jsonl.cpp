#include "pulse/jsonl.hpp"

#include <cstdint>
#include <fstream>

#include "pulse/error.hpp"

namespace pulse {
namespace {

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) raise(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

double need_num(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number()) raise(ErrorCode::parse_error, std::string("field '") + key + "' not numeric");
  return v.get<double>();
}

std::string need_str(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string()) raise(ErrorCode::parse_error, std::string("field '") + key + "' not a string");
  return v.get<std::string>();
}

}  // namespace

json to_json(const UserProfile& p) {
  json j;
  j["user_id"] = p.user_id;
  j["platform"] = std::string(to_string(p.platform));
  j["tz_offset_min"] = p.tz_offset_min;
  j["demographics"] = p.demographics;
  j["cancer_history"] = p.cancer_history;
  j["traits"] = p.traits;
  return j;
}

UserProfile profile_from_json(const json& j) {
  UserProfile p;
  p.user_id = need_str(j, "user_id");
  p.platform = platform_from_string(need_str(j, "platform"));
  p.tz_offset_min = static_cast<int>(need_num(j, "tz_offset_min"));
  p.demographics = need_str(j, "demographics");
  p.cancer_history = need_str(j, "cancer_history");
  const json& traits = need(j, "traits");
  if (!traits.is_object()) raise(ErrorCode::parse_error, "field 'traits' not an object");
  for (auto it = traits.begin(); it != traits.end(); ++it) {
    if (!it.value().is_number())
      raise(ErrorCode::parse_error, "trait '" + it.key() + "' not numeric");
    p.traits[it.key()] = it.value().get<double>();
  }
  return p;
}

json to_json(const SensingEvent& e) {
  json j;
  j["user_id"] = e.user_id;
  j["timestamp"] = to_iso8601(e.timestamp);
  j["modality"] = std::string(to_string(e.modality));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MotionPayload>) {
          j["activity"] = std::string(to_string(p.activity));
          j["duration_min"] = p.duration_min;
        } else if constexpr (std::is_same_v<T, ScreenPayload>) {
          j["kind"] = std::string(to_string(p.kind));
          j["duration_min"] = p.duration_min;
        } else if constexpr (std::is_same_v<T, GpsPayload>) {
          j["displacement_km"] = p.displacement_km;
          j["at_home"] = p.at_home;
          j["cluster_id"] = p.cluster_id;
        } else if constexpr (std::is_same_v<T, AppUsagePayload>) {
          j["category"] = p.category;
          j["duration_min"] = p.duration_min;
        } else if constexpr (std::is_same_v<T, KeyboardPayload>) {
          j["chars"] = p.chars;
          j["duration_min"] = p.duration_min;
        } else if constexpr (std::is_same_v<T, SleepPayload>) {
          j["start"] = to_iso8601(p.start);
          j["end"] = to_iso8601(p.end);
        } else if constexpr (std::is_same_v<T, LightPayload>) {
          j["lux"] = p.lux;
        }
      },
      e.payload);
  return j;
}

SensingEvent event_from_json(const json& j) {
  SensingEvent e;
  e.user_id = need_str(j, "user_id");
  e.timestamp = parse_iso8601(need_str(j, "timestamp"));
  e.modality = modality_from_string(need_str(j, "modality"));
  switch (e.modality) {
    case Modality::motion: {
      MotionPayload p;
      p.activity = motion_activity_from_string(need_str(j, "activity"));
      p.duration_min = need_num(j, "duration_min");
      e.payload = p;
      break;
    }
    case Modality::screen: {
      ScreenPayload p;
      p.kind = screen_kind_from_string(need_str(j, "kind"));
      p.duration_min = j.contains("duration_min") ? need_num(j, "duration_min") : 0.0;
      e.payload = p;
      break;
    }
    case Modality::gps: {
      GpsPayload p;
      p.displacement_km = need_num(j, "displacement_km");
      const json& ah = need(j, "at_home");
      if (!ah.is_boolean()) raise(ErrorCode::parse_error, "field 'at_home' not boolean");
      p.at_home = ah.get<bool>();
      p.cluster_id = static_cast<int>(need_num(j, "cluster_id"));
      e.payload = p;
      break;
    }
    case Modality::app_usage: {
      AppUsagePayload p;
      p.category = need_str(j, "category");
      p.duration_min = need_num(j, "duration_min");
      e.payload = p;
      break;
    }
    case Modality::keyboard: {
      KeyboardPayload p;
      p.chars = static_cast<int>(need_num(j, "chars"));
      p.duration_min = need_num(j, "duration_min");
      e.payload = p;
      break;
    }
    case Modality::sleep: {
      SleepPayload p;
      p.start = parse_iso8601(need_str(j, "start"));
      p.end = parse_iso8601(need_str(j, "end"));
      e.payload = p;
      break;
    }
    case Modality::light: {
      LightPayload p;
      p.lux = need_num(j, "lux");
      e.payload = p;
      break;
    }
  }
  return e;
}

json to_json(const EmaEntry& e) {
  json j;
  j["user_id"] = e.user_id;
  j["timestamp"] = to_iso8601(e.timestamp);
  j["pa_score"] = e.pa_score;
  j["na_score"] = e.na_score;
  j["er_desire_score"] = e.er_desire_score;
  json targets = json::object();
  const auto& names = binary_target_names();
  for (int i = 0; i < kNumBinaryTargets; ++i) {
    targets[std::string(names[static_cast<std::size_t>(i)])] =
        e.binary_targets[static_cast<std::size_t>(i)];
  }
  j["binary_targets"] = targets;
  if (e.diary) j["diary"] = *e.diary;
  return j;
}

EmaEntry entry_from_json(const json& j) {
  EmaEntry e;
  e.user_id = need_str(j, "user_id");
  e.timestamp = parse_iso8601(need_str(j, "timestamp"));
  e.pa_score = need_num(j, "pa_score");
  e.na_score = need_num(j, "na_score");
  e.er_desire_score = need_num(j, "er_desire_score");
  const json& targets = need(j, "binary_targets");
  if (!targets.is_object() || targets.size() != kNumBinaryTargets) {
    raise(ErrorCode::parse_error, "binary_targets must carry exactly 16 labels");
  }
  const auto& names = binary_target_names();
  for (int i = 0; i < kNumBinaryTargets; ++i) {
    const std::string name(names[static_cast<std::size_t>(i)]);
    auto it = targets.find(name);
    if (it == targets.end() || !it->is_boolean()) {
      raise(ErrorCode::parse_error, "binary_targets missing boolean '" + name + "'");
    }
    e.binary_targets[static_cast<std::size_t>(i)] = it->get<bool>();
  }
  if (j.contains("diary")) {
    if (!j["diary"].is_string()) raise(ErrorCode::parse_error, "field 'diary' not a string");
    e.diary = j["diary"].get<std::string>();
  }
  return e;
}

std::vector<json> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::not_found, "cannot open " + path);
  std::vector<json> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      raise(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": blank line");
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      raise(ErrorCode::parse_error,
            path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

void save_jsonl(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::not_found, "cannot write " + path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

namespace {

// Wraps per-record converters with file:line context on failure.
template <typename T, typename Fn>
std::vector<T> load_typed(const std::string& path, Fn&& convert) {
  std::vector<json> rows = load_jsonl(path);
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(convert(rows[i]));
    } catch (const Error& e) {
      raise(e.code(), path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<UserProfile> load_profiles_jsonl(const std::string& path) {
  return load_typed<UserProfile>(path, profile_from_json);
}
std::vector<SensingEvent> load_events_jsonl(const std::string& path) {
  return load_typed<SensingEvent>(path, event_from_json);
}
std::vector<EmaEntry> load_ema_jsonl(const std::string& path) {
  return load_typed<EmaEntry>(path, entry_from_json);
}

namespace {
template <typename T>
void save_rows(const std::string& path, const std::vector<T>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::not_found, "cannot write " + path);
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}
}  // namespace

void save_profiles_jsonl(const std::string& path, const std::vector<UserProfile>& rows) {
  save_rows(path, rows);
}
void save_events_jsonl(const std::string& path, const std::vector<SensingEvent>& rows) {
  save_rows(path, rows);
}
void save_ema_jsonl(const std::string& path, const std::vector<EmaEntry>& rows) {
  save_rows(path, rows);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string fnv1a_hex_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::not_found, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

}  // namespace pulse

#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pulse/model.hpp"

namespace pulse {

using json = nlohmann::json;

// JSON object forms used in the *.jsonl dataset files. Field layouts are
// documented in docs/formats.md; loaders reject missing or ill-typed fields
// with a parse_error naming the file line.
json to_json(const UserProfile& p);
json to_json(const SensingEvent& e);
json to_json(const EmaEntry& e);
UserProfile profile_from_json(const json& j);
SensingEvent event_from_json(const json& j);
EmaEntry entry_from_json(const json& j);

// Whole-file helpers. One JSON object per line; blank lines rejected.
std::vector<UserProfile> load_profiles_jsonl(const std::string& path);
std::vector<SensingEvent> load_events_jsonl(const std::string& path);
std::vector<EmaEntry> load_ema_jsonl(const std::string& path);
void save_profiles_jsonl(const std::string& path, const std::vector<UserProfile>& rows);
void save_events_jsonl(const std::string& path, const std::vector<SensingEvent>& rows);
void save_ema_jsonl(const std::string& path, const std::vector<EmaEntry>& rows);

// Generic line-oriented plumbing shared by the dataset loaders and the eval /
// memory artifacts.
std::vector<json> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<json>& rows);

// FNV-1a 64-bit over a file's bytes, hex-encoded; used for manifest checksums
// and response digests. The raw 64-bit form also seeds per-user generator
// streams.
std::string fnv1a_hex_file(const std::string& path);
std::string fnv1a_hex(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace pulse

#include "pulse/memory.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"

namespace pulse {
namespace {

constexpr int kDigitWindowAfter = 24;
constexpr int kDigitWindowBefore = 12;

// Guarded vocabulary: the 16 binary target names plus the aliases raw scores
// travel under. Lowercase; multi-word aliases match across single spaces.
const std::vector<std::string>& guarded_terms() {
  static const std::vector<std::string> terms = {
      "pa_state", "na_state", "happy", "sad", "afraid", "miserable", "worried", "cheerful",
      "pleased", "grateful", "lonely", "interaction_quality", "physical_pain", "future_outlook",
      "er_desire_state", "int_availability",
      // score aliases
      "pa", "na", "er desire", "er_desire", "positive affect", "negative affect",
      "emotion regulation desire", "availability",
  };
  return terms;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Case-insensitive find of `term` in `lower` (already lowercased) starting at
// `from`, demanding word boundaries on both sides.
std::size_t find_word(const std::string& lower, const std::string& term, std::size_t from) {
  std::size_t pos = lower.find(term, from);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
    const std::size_t end = pos + term.size();
    const bool right_ok = end >= lower.size() || !is_word_char(lower[end]);
    if (left_ok && right_ok) return pos;
    pos = lower.find(term, pos + 1);
  }
  return std::string::npos;
}

bool digit_nearby(const std::string& text, std::size_t term_begin, std::size_t term_end) {
  const std::size_t lo = term_begin >= kDigitWindowBefore ? term_begin - kDigitWindowBefore : 0;
  const std::size_t hi = std::min(text.size(), term_end + kDigitWindowAfter);
  for (std::size_t i = lo; i < hi; ++i) {
    if (i >= term_begin && i < term_end) continue;  // term body itself
    if (std::isdigit(static_cast<unsigned char>(text[i]))) return true;
  }
  return false;
}

}  // namespace

LeakScan scan_for_score_leaks(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  LeakScan scan;
  for (const auto& term : guarded_terms()) {
    std::size_t pos = 0;
    while ((pos = find_word(lower, term, pos)) != std::string::npos) {
      const std::size_t end = pos + term.size();
      if (digit_nearby(lower, pos, end)) {
        scan.rejected = true;
        const std::size_t lo = pos >= kDigitWindowBefore ? pos - kDigitWindowBefore : 0;
        const std::size_t hi = std::min(lower.size(), end + kDigitWindowAfter);
        scan.offending_span = std::string(text.substr(lo, hi - lo));
        return scan;
      }
      pos = end;
    }
  }
  return scan;
}

const std::vector<ReflectionRecord> ReflectionLog::kEmpty;

void ReflectionLog::append(const ReflectionRecord& record) {
  auto last = last_entry_index(record.user_id);
  if (last && record.entry_index <= *last) {
    raise(ErrorCode::invalid_argument,
          "reflection entry_index " + std::to_string(record.entry_index) + " not after " +
              std::to_string(*last) + " for user " + record.user_id);
  }
  LeakScan scan = scan_for_score_leaks(record.text);
  if (scan.rejected) {
    raise(ErrorCode::leak_rejected, "reflection leaks scores near: \"" + scan.offending_span + "\"");
  }
  by_user_[record.user_id].push_back(record);
}

const std::vector<ReflectionRecord>& ReflectionLog::records(const std::string& user_id) const {
  auto it = by_user_.find(user_id);
  return it == by_user_.end() ? kEmpty : it->second;
}

std::optional<int> ReflectionLog::last_entry_index(const std::string& user_id) const {
  const auto& recs = records(user_id);
  if (recs.empty()) return std::nullopt;
  return recs.back().entry_index;
}

namespace {

std::string render_record(const ReflectionRecord& r) {
  std::string block = "[entry ";
  block += std::to_string(r.entry_index + 1);
  block += " | ";
  block += r.receptivity_outcome ? "receptive" : "unreceptive";
  block += "] ";
  block += r.text;
  block += "\n";
  return block;
}

}  // namespace

MemoryDocument ReflectionLog::render(const std::string& user_id, int budget_chars) const {
  if (budget_chars <= 0) raise(ErrorCode::invalid_argument, "memory budget must be positive");
  const auto& recs = records(user_id);
  MemoryDocument doc;
  doc.records_total = static_cast<int>(recs.size());
  if (recs.empty()) return doc;

  std::string header =
      "Session memory: " + std::to_string(recs.size()) + " prior reflections, newest first.\n";
  std::string body;
  const auto budget = static_cast<std::size_t>(budget_chars);
  for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
    std::string block = render_record(*it);
    if (header.size() + body.size() + block.size() > budget) {
      if (doc.records_included == 0) {
        // Newest record alone overflows: cut it and mark the cut.
        static const std::string kMark = " ...[truncated]\n";
        const std::size_t room = budget > header.size() + kMark.size()
                                     ? budget - header.size() - kMark.size()
                                     : 0;
        body = block.substr(0, room) + kMark;
        doc.records_included = 1;
        doc.truncated = true;
      }
      break;
    }
    body += block;
    doc.records_included += 1;
  }
  doc.rendered = header + body;
  if (doc.rendered.size() > budget) doc.rendered.resize(budget);  // hard guarantee
  return doc;
}

void ReflectionLog::save_user(const std::string& dir, const std::string& user_id) const {
  std::filesystem::create_directories(dir);
  std::vector<json> rows;
  for (const auto& r : records(user_id)) {
    rows.push_back({{"user_id", r.user_id},
                    {"entry_index", r.entry_index},
                    {"created_at", to_iso8601(r.created_at)},
                    {"text", r.text},
                    {"receptivity_outcome", r.receptivity_outcome}});
  }
  save_jsonl((std::filesystem::path(dir) / (user_id + ".jsonl")).string(), rows);
}

void ReflectionLog::load_user(const std::string& dir, const std::string& user_id) {
  const auto path = (std::filesystem::path(dir) / (user_id + ".jsonl")).string();
  if (!std::filesystem::exists(path)) return;
  by_user_.erase(user_id);
  for (const auto& j : load_jsonl(path)) {
    ReflectionRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.entry_index = j.at("entry_index").get<int>();
    r.created_at = parse_iso8601(j.at("created_at").get<std::string>());
    r.text = j.at("text").get<std::string>();
    r.receptivity_outcome = j.at("receptivity_outcome").get<bool>();
    append(r);  // re-runs ordering and leak checks
  }
}

}  // namespace pulse

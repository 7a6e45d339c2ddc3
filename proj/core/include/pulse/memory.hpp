#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pulse/time.hpp"

namespace pulse {

// One per-entry reflection. `receptivity_outcome` is the only ground-truth
// bit allowed into memory: it records whether the entry turned out receptive
// (desire-to-regulate rising AND available for an interaction). The text is
// the agent's own reasoning about behavior; raw scores and labels never pass
// the leak filter below.
struct ReflectionRecord {
  std::string user_id;
  int entry_index = 0;  // strictly increasing per user
  Timestamp created_at; // the reflected entry's EMA timestamp, not wall clock
  std::string text;
  bool receptivity_outcome = false;
};

// Pattern filter guarding memory against outcome leaks: any guarded term (a
// binary target name or a score alias such as "PA" / "negative affect") with
// a digit within 24 chars after or 12 chars before it is a leak. Matching is
// case-insensitive on word boundaries. Deliberately aggressive; callers handle
// false positives by regenerating, then falling back to a clean template.
struct LeakScan {
  bool rejected = false;
  std::string offending_span;  // excerpt around the first hit
};

LeakScan scan_for_score_leaks(std::string_view text);

struct MemoryDocument {
  std::string rendered;
  int records_included = 0;
  int records_total = 0;
  bool truncated = false;  // newest record did not fit whole
  int char_count() const { return static_cast<int>(rendered.size()); }
};

// Append-only per-user reflection logs with JSONL persistence.
class ReflectionLog {
 public:
  // entry_index must exceed the user's last appended index
  // (invalid_argument), and text must pass the leak filter (leak_rejected,
  // message carries the offending span).
  void append(const ReflectionRecord& record);

  const std::vector<ReflectionRecord>& records(const std::string& user_id) const;
  std::optional<int> last_entry_index(const std::string& user_id) const;

  // Newest-first document under a hard character budget. Whole records are
  // included until the next would overflow; if even the newest record alone
  // overflows, it is cut to fit and marked. budget_chars must be positive.
  MemoryDocument render(const std::string& user_id, int budget_chars) const;

  // One JSONL file per user: <dir>/<user_id>.jsonl.
  void save_user(const std::string& dir, const std::string& user_id) const;
  void load_user(const std::string& dir, const std::string& user_id);

 private:
  std::map<std::string, std::vector<ReflectionRecord>> by_user_;
  static const std::vector<ReflectionRecord> kEmpty;
};

// Memory budget used by the prediction runtime (characters).
constexpr int kDefaultMemoryBudgetChars = 51000;

}  // namespace pulse

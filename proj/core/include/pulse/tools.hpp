#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pulse/retrieval.hpp"
#include "pulse/timestore.hpp"

namespace pulse {

using json = nlohmann::json;

// Uniform tool envelope. `structured` is the machine-readable payload;
// `rendered` is derived from it by render_tool() and contains no information
// of its own; `data_notes` mirrors structured["data_notes"] (coverage gaps,
// clipping, truncation). Responses are deterministic functions of
// (store, context, arguments).
struct ToolResponse {
  std::string tool_name;
  json structured;
  std::string rendered;
  std::vector<std::string> data_notes;

  json to_json() const;
  static ToolResponse from_json(const json& j);
};

// Renders the fixed text template for a tool's structured payload. Pure;
// calling it again on a response's own structured payload reproduces
// `rendered` byte for byte. Bump kRenderTemplateVersion when templates change.
constexpr int kRenderTemplateVersion = 1;
std::string render_tool(const std::string& tool_name, const json& structured);

// Number formatting shared by every render template: integers bare, otherwise
// up to two decimals with trailing zeros trimmed. Tests rely on rendered
// numbers being exactly fmt_num() of a structured leaf.
std::string fmt_num(double v);

struct ToolSchema {
  std::string name;
  std::string description;
  json input_schema;  // JSON-Schema-shaped: type/properties/required

  json to_json() const;
};

struct ToolConfig {
  int max_raw_events = 200;
  int min_baseline_days = 3;
  int default_k = 5;  // schema default for the retrieval tools
};

// Parameter bounds, shared between in-process validation, the published
// schemas and the wire server.
constexpr int kMaxSummaryLookbackDays = 7;
constexpr int kMaxSegmentHours = 6;
constexpr int kMaxHoursBefore = 48;
constexpr int kMaxDurationHours = 24;
constexpr int kMaxReceptivityLookbackDays = 14;

enum class Granularity { hourly, daily };
std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

// The eight sensing-investigation tools, bound to one access context. The
// peer index may be null: find_peer_cases then reports itself unavailable.
class ToolKit {
 public:
  ToolKit(const Store& store, AccessContext ctx, const PeerIndex* peers = nullptr,
          ToolConfig config = {});

  const AccessContext& context() const { return ctx_; }

  // 1. Day-level overview, most recent day first; trend block when
  //    lookback_days > 1; recency block on the boundary day.
  ToolResponse get_daily_summary(int lookback_days) const;

  // 2. The boundary day tiled into segments of the requested width (last
  //    segment clipped at the boundary).
  ToolResponse get_behavioral_timeline(int segment_hours) const;

  // 3. Bucketed aggregates for one modality over an offset window; the window
  //    is clipped at the boundary with a note.
  ToolResponse query_sensing(Modality m, int hours_before, int duration_hours,
                             Granularity granularity) const;

  // 4. Raw events, chronological, capped at config.max_raw_events.
  ToolResponse query_raw_events(Modality m, int hours_before, int duration_hours) const;

  // 5. Today's (or a given date's) value of a daily feature against the
  //    user's own prior-day distribution; z uses population sd.
  ToolResponse compare_to_baseline(const std::string& metric,
                                   std::optional<LocalDate> date = std::nullopt) const;

  // 6. Past availability labels plus a coarse day activity index. Emotion
  //    scores never appear here.
  ToolResponse get_receptivity_history(int lookback_days) const;

  // 7. Most similar of the user's own prior days (fingerprint cosine,
  //    z-stats fitted on those prior days), with day-level outcomes.
  ToolResponse find_similar_days(int k) const;

  // 8. Nearest training-fold cases by diary text or sensing fingerprint;
  //    the context user is excluded before ranking.
  ToolResponse find_peer_cases(PeerSpace space, const std::optional<std::string>& query_text,
                               int k) const;

  // Published schemas (exactly eight, canonical order) and name dispatch.
  static std::vector<ToolSchema> schemas(const ToolConfig& config = {});
  ToolResponse call(const std::string& name, const json& args) const;

 private:
  json recency_block() const;

  const Store& store_;
  AccessContext ctx_;
  const PeerIndex* peers_;
  ToolConfig config_;
};

}  // namespace pulse

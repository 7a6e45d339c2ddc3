#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pulse/backend.hpp"
#include "pulse/memory.hpp"
#include "pulse/retrieval.hpp"
#include "pulse/timestore.hpp"
#include "pulse/tools.hpp"

namespace pulse {

// ---------------------------------------------------------------------------
// Experimental condition: which driver produces the prediction and which of
// the person's signals it may see. The diary_only cell exists only in the
// single-pass architecture (it is the text-only baseline shape).
// ---------------------------------------------------------------------------

enum class Architecture { structured, agentic };
enum class ModalityCondition { sensing_only, multimodal, diary_only };

std::string_view to_string(Architecture a);
std::string_view to_string(ModalityCondition m);
Architecture architecture_from_string(std::string_view s);
ModalityCondition modality_condition_from_string(std::string_view s);

struct RunCondition {
  Architecture architecture = Architecture::agentic;
  ModalityCondition modality = ModalityCondition::multimodal;

  // invalid_argument when the pair is not a supported cell.
  void validate() const;

  std::string label() const;  // e.g. "agentic_multimodal"
  static RunCondition from_label(std::string_view label);

  json to_json() const;
  static RunCondition from_json(const json& j);

  bool operator==(const RunCondition&) const = default;
};

// The five cells exercised by the factorial harness, in canonical order.
std::vector<RunCondition> factorial_conditions();

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct ToolTraceItem {
  std::string tool_name;
  json arguments;
  std::string response_digest;  // content hash of the structured payload

  json to_json() const;
  static ToolTraceItem from_json(const json& j);
};

constexpr int kMaxTurns = 16;

struct Prediction {
  BinaryTargets binary_targets{};
  double pa_pred = 0.0;
  double na_pred = 0.0;
  double er_desire_pred = 0.0;
  std::string reasoning;
  double confidence = 0.0;
  std::vector<ToolTraceItem> tool_trace;
  int turns_used = 0;  // backend calls consumed

  json to_json() const;
  static Prediction from_json(const json& j);
};

// Extracts the outermost balanced JSON object from free-form text and
// validates it: all 16 targets present and boolean, the three scores inside
// their scales, confidence in [0,1]. format_error lists every violation.
Prediction parse_prediction(const std::string& text, const TargetSchema& schema = {});

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct RuntimeConfig {
  int max_turns = kMaxTurns;
  int peer_anchor_k = 5;          // reference cases in single-pass prompts
  int summary_lookback_days = 3;  // behavior overview span in those prompts
  int reflection_max_chars = 800;
  int memory_budget_chars = kDefaultMemoryBudgetChars;
  std::string memory_dir;  // when set, reflection logs persist here
  ToolConfig tools;
  TargetSchema schema;
};

// Single backend call over a prompt assembled in a fixed section order:
// person profile, behavior overview (not in diary_only), today's diary (not
// in sensing_only), memory, reference cases, output instructions. One retry
// on an unparseable reply, then format_error.
Prediction predict_structured(const Store& store, const AccessContext& ctx,
                              const RunCondition& condition, const PeerIndex* peers,
                              const MemoryDocument& memory, InferenceBackend& backend,
                              const RuntimeConfig& config = {},
                              std::vector<Message>* transcript_out = nullptr);

// Tool loop: the backend may request tool calls, each answered in-transcript
// (errors included); capped at config.max_turns backend calls, with a forced
// finalize instruction injected before the last permitted call.
Prediction predict_agentic(const Store& store, const AccessContext& ctx,
                           const RunCondition& condition, const PeerIndex* peers,
                           const MemoryDocument& memory, InferenceBackend& backend,
                           const RuntimeConfig& config = {},
                           std::vector<Message>* transcript_out = nullptr);

// Dispatch on condition.architecture.
Prediction predict_entry(const Store& store, const AccessContext& ctx,
                         const RunCondition& condition, const PeerIndex* peers,
                         const MemoryDocument& memory, InferenceBackend& backend,
                         const RuntimeConfig& config = {},
                         std::vector<Message>* transcript_out = nullptr);

// Prompt assembly, exposed for the section-order and signal-isolation tests.
std::vector<Message> build_structured_prompt(const Store& store, const AccessContext& ctx,
                                             const RunCondition& condition,
                                             const PeerIndex* peers,
                                             const MemoryDocument& memory,
                                             const RuntimeConfig& config);
std::vector<Message> build_agentic_preamble(const Store& store, const AccessContext& ctx,
                                            const RunCondition& condition,
                                            const MemoryDocument& memory,
                                            const RuntimeConfig& config);

// One backend call producing a reflection of at most config.reflection_max
// characters; a leak-filter rejection triggers one rewrite attempt with a
// sanitization instruction, then a fixed clean template.
std::string reflect(const AccessContext& ctx, const Prediction& prediction,
                    bool receptivity_outcome, InferenceBackend& backend,
                    const RuntimeConfig& config = {});

// Ground-truth receptivity of entry i: desire-to-regulate rose against the
// previous entry (first entry: above mid-scale) AND the person reported being
// available for an interaction.
bool receptivity_outcome_for(const Store& store, const std::string& user_id, int entry_index,
                             const TargetSchema& schema = {});

// ---------------------------------------------------------------------------
// Sequenced execution
// ---------------------------------------------------------------------------

struct EntryRunResult {
  int entry_index = 0;
  Timestamp timestamp;
  Prediction prediction;
  bool receptivity_outcome = false;
};

struct UserRunResult {
  std::string user_id;
  std::vector<EntryRunResult> entries;
  std::vector<ReflectionRecord> reflections;
  bool aborted = false;
  std::string abort_reason;
};

// Entries of one user strictly in chronological order; the reflection for
// entry i lands in memory before entry i+1 starts. A format error aborts the
// remainder of this user's sequence (recorded, not thrown).
UserRunResult run_user_sequence(const Store& store, const std::string& user_id,
                                const RunCondition& condition, const PeerIndex* peers,
                                InferenceBackend& backend, const RuntimeConfig& config = {});

constexpr int kDefaultConcurrency = 5;

// Users processed concurrently, at most `concurrency_limit` in flight;
// results in user_ids order regardless of scheduling.
std::vector<UserRunResult> run_cohort(const Store& store,
                                      const std::vector<std::string>& user_ids,
                                      const RunCondition& condition, const PeerIndex* peers,
                                      InferenceBackend& backend,
                                      int concurrency_limit = kDefaultConcurrency,
                                      const RuntimeConfig& config = {});

}  // namespace pulse

#include "pulse/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"

namespace pulse {

// ---------------------------------------------------------------------------
// RunCondition
// ---------------------------------------------------------------------------

std::string_view to_string(Architecture a) {
  return a == Architecture::structured ? "structured" : "agentic";
}

std::string_view to_string(ModalityCondition m) {
  switch (m) {
    case ModalityCondition::sensing_only: return "sensing_only";
    case ModalityCondition::multimodal: return "multimodal";
    case ModalityCondition::diary_only: return "diary_only";
  }
  return "multimodal";
}

Architecture architecture_from_string(std::string_view s) {
  if (s == "structured") return Architecture::structured;
  if (s == "agentic") return Architecture::agentic;
  raise(ErrorCode::invalid_argument, "unknown architecture: " + std::string(s));
}

ModalityCondition modality_condition_from_string(std::string_view s) {
  if (s == "sensing_only") return ModalityCondition::sensing_only;
  if (s == "multimodal") return ModalityCondition::multimodal;
  if (s == "diary_only") return ModalityCondition::diary_only;
  raise(ErrorCode::invalid_argument, "unknown modality condition: " + std::string(s));
}

void RunCondition::validate() const {
  if (modality == ModalityCondition::diary_only && architecture == Architecture::agentic) {
    raise(ErrorCode::invalid_argument,
          "diary_only runs only in the single-pass architecture");
  }
}

std::string RunCondition::label() const {
  return std::string(to_string(architecture)) + "_" + std::string(to_string(modality));
}

RunCondition RunCondition::from_label(std::string_view label) {
  const auto sep = label.find('_');
  if (sep == std::string_view::npos) {
    raise(ErrorCode::invalid_argument, "bad condition label: " + std::string(label));
  }
  RunCondition c;
  c.architecture = architecture_from_string(label.substr(0, sep));
  c.modality = modality_condition_from_string(label.substr(sep + 1));
  c.validate();
  return c;
}

json RunCondition::to_json() const {
  return {{"architecture", std::string(to_string(architecture))},
          {"modality", std::string(to_string(modality))}};
}

RunCondition RunCondition::from_json(const json& j) {
  RunCondition c;
  c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  c.modality = modality_condition_from_string(j.at("modality").get<std::string>());
  c.validate();
  return c;
}

std::vector<RunCondition> factorial_conditions() {
  return {
      {Architecture::structured, ModalityCondition::sensing_only},
      {Architecture::structured, ModalityCondition::multimodal},
      {Architecture::agentic, ModalityCondition::sensing_only},
      {Architecture::agentic, ModalityCondition::multimodal},
      {Architecture::structured, ModalityCondition::diary_only},
  };
}

// ---------------------------------------------------------------------------
// Prediction (de)serialization
// ---------------------------------------------------------------------------

json ToolTraceItem::to_json() const {
  return {{"tool_name", tool_name}, {"arguments", arguments}, {"response_digest", response_digest}};
}

ToolTraceItem ToolTraceItem::from_json(const json& j) {
  ToolTraceItem t;
  t.tool_name = j.at("tool_name").get<std::string>();
  t.arguments = j.at("arguments");
  t.response_digest = j.at("response_digest").get<std::string>();
  return t;
}

json Prediction::to_json() const {
  json targets = json::object();
  const auto& names = binary_target_names();
  for (int t = 0; t < kNumBinaryTargets; ++t) {
    targets[std::string(names[static_cast<std::size_t>(t)])] =
        binary_targets[static_cast<std::size_t>(t)];
  }
  json trace = json::array();
  for (const auto& t : tool_trace) trace.push_back(t.to_json());
  return {{"binary_targets", std::move(targets)},
          {"pa_pred", pa_pred},
          {"na_pred", na_pred},
          {"er_desire_pred", er_desire_pred},
          {"reasoning", reasoning},
          {"confidence", confidence},
          {"tool_trace", std::move(trace)},
          {"turns_used", turns_used}};
}

Prediction Prediction::from_json(const json& j) {
  Prediction p;
  const auto& names = binary_target_names();
  for (int t = 0; t < kNumBinaryTargets; ++t) {
    p.binary_targets[static_cast<std::size_t>(t)] =
        j.at("binary_targets").at(std::string(names[static_cast<std::size_t>(t)])).get<bool>();
  }
  p.pa_pred = j.at("pa_pred").get<double>();
  p.na_pred = j.at("na_pred").get<double>();
  p.er_desire_pred = j.at("er_desire_pred").get<double>();
  p.reasoning = j.value("reasoning", "");
  p.confidence = j.at("confidence").get<double>();
  if (j.contains("tool_trace")) {
    for (const auto& t : j.at("tool_trace")) p.tool_trace.push_back(ToolTraceItem::from_json(t));
  }
  p.turns_used = j.value("turns_used", 0);
  return p;
}

// ---------------------------------------------------------------------------
// parse_prediction
// ---------------------------------------------------------------------------

namespace {

// First balanced, parseable JSON object in the text (string-aware scan).
std::optional<json> extract_json_object(const std::string& text) {
  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          try {
            return json::parse(text.substr(start, i - start + 1));
          } catch (const json::exception&) {
            break;  // balanced but unparseable; try the next '{'
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Prediction parse_prediction(const std::string& text, const TargetSchema& schema) {
  const auto obj = extract_json_object(text);
  if (!obj) raise(ErrorCode::format_error, "no JSON object found in reply");
  const json& j = *obj;

  std::vector<std::string> problems;
  Prediction p;

  const auto& names = binary_target_names();
  if (!j.contains("binary_targets") || !j.at("binary_targets").is_object()) {
    problems.push_back("binary_targets missing");
  } else {
    const json& targets = j.at("binary_targets");
    for (int t = 0; t < kNumBinaryTargets; ++t) {
      const std::string name(names[static_cast<std::size_t>(t)]);
      if (!targets.contains(name) || !targets.at(name).is_boolean()) {
        problems.push_back("binary_targets." + name);
      } else {
        p.binary_targets[static_cast<std::size_t>(t)] = targets.at(name).get<bool>();
      }
    }
  }

  auto read_score = [&](const char* key, ScoreKind kind, double& out) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      problems.push_back(std::string(key) + " missing or not numeric");
      return;
    }
    out = j.at(key).get<double>();
    if (out < schema.score_min(kind) || out > schema.score_max(kind)) {
      problems.push_back(std::string(key) + " out of range");
    }
  };
  read_score("pa_pred", ScoreKind::pa, p.pa_pred);
  read_score("na_pred", ScoreKind::na, p.na_pred);
  read_score("er_desire_pred", ScoreKind::er_desire, p.er_desire_pred);

  if (!j.contains("confidence") || !j.at("confidence").is_number()) {
    problems.push_back("confidence missing or not numeric");
  } else {
    p.confidence = j.at("confidence").get<double>();
    if (p.confidence < 0.0 || p.confidence > 1.0) problems.push_back("confidence out of range");
  }
  p.reasoning = j.value("reasoning", "");

  if (!problems.empty()) {
    std::string msg = "prediction schema violations:";
    for (const auto& f : problems) msg += " " + f + ";";
    raise(ErrorCode::format_error, msg);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kStructuredSystemPrompt =
    "You estimate a person's momentary emotional state and interruptibility for a supportive "
    "check-in system. Read the briefing sections in order, weigh behavior against the person's "
    "own patterns, and answer with a single JSON object exactly as instructed. Do not invent "
    "data that is not in the briefing.";

constexpr std::string_view kAgenticSystemPrompt =
    "You estimate a person's momentary emotional state and interruptibility for a supportive "
    "check-in system. Investigate the person's recent behavior yourself using the tools on "
    "offer: start broad, then drill into anything unusual, compare against the person's own "
    "baseline, and consult similar cases. When you have enough evidence, reply with only the "
    "final JSON object exactly as instructed.";

constexpr std::string_view kContinueInstruction =
    "Continue. Call a tool or reply with only the final JSON object.";

std::string schema_instructions(const TargetSchema& schema) {
  std::ostringstream out;
  out << "## Output format\n"
      << "Reply with one JSON object and nothing else. Keys:\n"
      << "- \"binary_targets\": object with a boolean for each of:";
  for (const auto& name : binary_target_names()) out << " " << name << ",";
  out << "\n- \"pa_pred\": number in [" << schema.pa_min << ", " << schema.pa_max << "]\n"
      << "- \"na_pred\": number in [" << schema.na_min << ", " << schema.na_max << "]\n"
      << "- \"er_desire_pred\": number in [" << schema.er_min << ", " << schema.er_max << "]\n"
      << "- \"confidence\": number in [0, 1]\n"
      << "- \"reasoning\": short string\n";
  return out.str();
}

std::string profile_section(const UserProfile& profile) {
  std::ostringstream out;
  out << "## Person\n"
      << "Phone platform: " << to_string(profile.platform) << ".\n";
  if (!profile.demographics.empty()) out << "Background: " << profile.demographics << ".\n";
  if (!profile.cancer_history.empty()) {
    out << "Health history: " << profile.cancer_history << ".\n";
  }
  for (const auto& [name, value] : profile.traits) {
    out << "Trait " << name << ": " << value << ".\n";
  }
  return out.str();
}

std::string memory_section(const MemoryDocument& memory) {
  return "## Notes from earlier check-ins\n" + memory.rendered;
}

const EmaEntry& current_entry(const Store& store, const AccessContext& ctx) {
  const int idx = store.entry_index_of(ctx);
  return store.entries(ctx.user_id)[static_cast<std::size_t>(idx)];
}

std::string anchors_section(const Store& store, const AccessContext& ctx,
                            const RunCondition& condition, const PeerIndex* peers,
                            const std::optional<std::string>& diary,
                            const RuntimeConfig& config) {
  std::string out = "## Reference cases\n";
  if (peers == nullptr) return out + "(none available)\n";
  ToolKit kit(store, ctx, peers, config.tools);
  const bool diary_allowed = condition.modality != ModalityCondition::sensing_only;
  const bool sensing_allowed = condition.modality != ModalityCondition::diary_only;
  try {
    if (diary_allowed && diary && !diary->empty()) {
      return out + kit.find_peer_cases(PeerSpace::text, *diary, config.peer_anchor_k).rendered;
    }
    if (sensing_allowed) {
      return out +
             kit.find_peer_cases(PeerSpace::sensing, std::nullopt, config.peer_anchor_k).rendered;
    }
    return out + "(no diary today, so no text matches)\n";
  } catch (const Error&) {
    return out + "(none available)\n";
  }
}

std::string forced_finalize_instruction() {
  return std::string(kForcedFinalizeMarker);
}

std::string digest_of(const json& structured) { return fnv1a_hex(structured.dump()); }

}  // namespace

std::vector<Message> build_structured_prompt(const Store& store, const AccessContext& ctx,
                                             const RunCondition& condition,
                                             const PeerIndex* peers,
                                             const MemoryDocument& memory,
                                             const RuntimeConfig& config) {
  condition.validate();
  const EmaEntry& entry = current_entry(store, ctx);
  const UserProfile& profile = store.profile(ctx.user_id);

  std::ostringstream body;
  body << profile_section(profile) << "\n";

  if (condition.modality != ModalityCondition::diary_only) {
    ToolKit kit(store, ctx, nullptr, config.tools);
    body << "## Recent behavior\n"
         << kit.get_daily_summary(config.summary_lookback_days).rendered << "\n";
  }
  if (condition.modality != ModalityCondition::sensing_only) {
    body << "## Today's diary\n"
         << (entry.diary && !entry.diary->empty() ? *entry.diary : "(none provided)") << "\n\n";
  }
  body << memory_section(memory) << "\n"
       << anchors_section(store, ctx, condition, peers, entry.diary, config) << "\n"
       << schema_instructions(config.schema);

  return {{MessageRole::system, std::string(kStructuredSystemPrompt), "", std::nullopt},
          {MessageRole::user, body.str(), "", std::nullopt}};
}

std::vector<Message> build_agentic_preamble(const Store& store, const AccessContext& ctx,
                                            const RunCondition& condition,
                                            const MemoryDocument& memory,
                                            const RuntimeConfig& config) {
  condition.validate();
  if (condition.architecture != Architecture::agentic) {
    raise(ErrorCode::invalid_argument, "agentic preamble requires the agentic architecture");
  }
  const UserProfile& profile = store.profile(ctx.user_id);

  std::ostringstream body;
  body << profile_section(profile) << "\n";
  if (condition.modality != ModalityCondition::sensing_only) {
    const EmaEntry& entry = current_entry(store, ctx);
    body << "## Today's diary\n"
         << (entry.diary && !entry.diary->empty() ? *entry.diary : "(none provided)") << "\n\n";
  }
  body << memory_section(memory) << "\n"
       << "Investigate with the tools, then answer.\n\n"
       << schema_instructions(config.schema);

  return {{MessageRole::system, std::string(kAgenticSystemPrompt), "", std::nullopt},
          {MessageRole::user, body.str(), "", std::nullopt}};
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

Prediction predict_structured(const Store& store, const AccessContext& ctx,
                              const RunCondition& condition, const PeerIndex* peers,
                              const MemoryDocument& memory, InferenceBackend& backend,
                              const RuntimeConfig& config, std::vector<Message>* transcript_out) {
  condition.validate();
  if (condition.architecture != Architecture::structured) {
    raise(ErrorCode::invalid_argument, "predict_structured requires the structured architecture");
  }
  BackendRequest request;
  request.transcript = build_structured_prompt(store, ctx, condition, peers, memory, config);

  int turns = 0;
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    BackendReply reply = backend.complete(request);
    ++turns;
    if (reply.kind == BackendReply::Kind::call_tool) {
      last_error = "tool call requested in a single-pass prompt";
      request.transcript.push_back(
          {MessageRole::assistant, "(requested a tool that is not on offer)", "", std::nullopt});
      request.transcript.push_back(
          {MessageRole::user, std::string(kRetryParseMarker), "", std::nullopt});
      continue;
    }
    try {
      Prediction p = parse_prediction(reply.text, config.schema);
      p.turns_used = turns;
      request.transcript.push_back({MessageRole::assistant, reply.text, "", std::nullopt});
      if (transcript_out) *transcript_out = request.transcript;
      return p;
    } catch (const Error& e) {
      last_error = e.what();
      request.transcript.push_back({MessageRole::assistant, reply.text, "", std::nullopt});
      request.transcript.push_back(
          {MessageRole::user, std::string(kRetryParseMarker), "", std::nullopt});
    }
  }
  if (transcript_out) *transcript_out = request.transcript;
  raise(ErrorCode::format_error, "unparseable reply after retry: " + last_error);
}

Prediction predict_agentic(const Store& store, const AccessContext& ctx,
                           const RunCondition& condition, const PeerIndex* peers,
                           const MemoryDocument& memory, InferenceBackend& backend,
                           const RuntimeConfig& config, std::vector<Message>* transcript_out) {
  condition.validate();
  if (condition.architecture != Architecture::agentic) {
    raise(ErrorCode::invalid_argument, "predict_agentic requires the agentic architecture");
  }
  if (config.max_turns < 1 || config.max_turns > kMaxTurns) {
    raise(ErrorCode::invalid_argument, "max_turns must be in [1, 16]");
  }

  ToolKit kit(store, ctx, peers, config.tools);
  BackendRequest request;
  request.transcript = build_agentic_preamble(store, ctx, condition, memory, config);
  request.tools = ToolKit::schemas(config.tools);

  std::vector<ToolTraceItem> trace;
  bool parse_retry_used = false;

  auto finish_transcript = [&] {
    if (transcript_out) *transcript_out = request.transcript;
  };

  for (int turns = 1; turns <= config.max_turns; ++turns) {
    const bool forced = turns == config.max_turns;
    if (forced) {
      request.transcript.push_back(
          {MessageRole::user, forced_finalize_instruction(), "", std::nullopt});
    }
    BackendReply reply = backend.complete(request);

    if (reply.kind == BackendReply::Kind::call_tool) {
      if (forced) {
        finish_transcript();
        raise(ErrorCode::format_error, "tool call after the finalize instruction");
      }
      const ToolCallRequest& call = *reply.tool_call;
      request.transcript.push_back({MessageRole::assistant,
                                    "Calling " + call.tool_name + " with " + call.arguments.dump(),
                                    "", std::nullopt});
      Message result;
      result.role = MessageRole::tool;
      result.tool_name = call.tool_name;
      try {
        ToolResponse response = kit.call(call.tool_name, call.arguments);
        result.content = response.rendered;
        result.tool_structured = response.structured;
        trace.push_back({call.tool_name, call.arguments, digest_of(response.structured)});
      } catch (const Error& e) {
        result.content = std::string("Error: ") + e.what();
        trace.push_back({call.tool_name, call.arguments, "error"});
      }
      request.transcript.push_back(std::move(result));
      continue;
    }

    // Text reply: final if it parses; otherwise keep the loop going (one
    // dedicated retry for an explicit finalize that fails to parse).
    request.transcript.push_back({MessageRole::assistant, reply.text, "", std::nullopt});
    try {
      Prediction p = parse_prediction(reply.text, config.schema);
      p.turns_used = turns;
      p.tool_trace = std::move(trace);
      finish_transcript();
      return p;
    } catch (const Error& e) {
      if (forced || (reply.kind == BackendReply::Kind::finalize && parse_retry_used)) {
        finish_transcript();
        raise(ErrorCode::format_error, std::string("unparseable final reply: ") + e.what());
      }
      if (reply.kind == BackendReply::Kind::finalize) {
        parse_retry_used = true;
        request.transcript.push_back(
            {MessageRole::user, std::string(kRetryParseMarker), "", std::nullopt});
      } else {
        request.transcript.push_back(
            {MessageRole::user, std::string(kContinueInstruction), "", std::nullopt});
      }
    }
  }
  finish_transcript();
  raise(ErrorCode::format_error, "no final answer within the turn cap");
}

Prediction predict_entry(const Store& store, const AccessContext& ctx,
                         const RunCondition& condition, const PeerIndex* peers,
                         const MemoryDocument& memory, InferenceBackend& backend,
                         const RuntimeConfig& config, std::vector<Message>* transcript_out) {
  if (condition.architecture == Architecture::structured) {
    return predict_structured(store, ctx, condition, peers, memory, backend, config,
                              transcript_out);
  }
  return predict_agentic(store, ctx, condition, peers, memory, backend, config, transcript_out);
}

// ---------------------------------------------------------------------------
// Reflection
// ---------------------------------------------------------------------------

namespace {

std::string fallback_reflection(bool receptivity_outcome) {
  return std::string("Check-in recorded. The person ") +
         (receptivity_outcome ? "did engage" : "did not engage") +
         " afterwards. Keep leaning on the person's own day-to-day patterns rather than "
         "one-off readings, and stay cautious about interrupting when the recent signals "
         "look busy.";
}

std::string truncate_to(std::string text, int limit) {
  if (static_cast<int>(text.size()) > limit) text.resize(static_cast<std::size_t>(limit));
  return text;
}

}  // namespace

std::string reflect(const AccessContext& ctx, const Prediction& prediction,
                    bool receptivity_outcome, InferenceBackend& backend,
                    const RuntimeConfig& config) {
  std::ostringstream ask;
  ask << kReflectionRequestMarker << " (under " << config.reflection_max_chars
      << " characters). You used " << prediction.tool_trace.size()
      << " tool call(s). Check-in outcome: " << (receptivity_outcome ? "engaged" : "declined")
      << ". Do not mention any tracked-state names or numeric scores.";

  BackendRequest request;
  request.transcript = {
      {MessageRole::system, std::string(kStructuredSystemPrompt), "", std::nullopt},
      {MessageRole::user, ask.str(), "", std::nullopt}};

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string text;
    try {
      BackendReply reply = backend.complete(request);
      text = truncate_to(reply.text, config.reflection_max_chars);
    } catch (const Error&) {
      break;  // backend trouble: fall through to the template
    }
    if (!text.empty() && !scan_for_score_leaks(text).rejected) return text;
    request.transcript.push_back({MessageRole::assistant, text, "", std::nullopt});
    request.transcript.push_back(
        {MessageRole::user,
         "That mentioned a tracked state or a number too close to one. Rewrite the reflection "
         "with no numbers and no tracked-state names.",
         "", std::nullopt});
  }
  (void)ctx;
  return fallback_reflection(receptivity_outcome);
}

bool receptivity_outcome_for(const Store& store, const std::string& user_id, int entry_index,
                             const TargetSchema& schema) {
  const auto entries = store.entries(user_id);
  if (entry_index < 0 || entry_index >= static_cast<int>(entries.size())) {
    raise(ErrorCode::invalid_argument, "entry index out of range");
  }
  const EmaEntry& entry = entries[static_cast<std::size_t>(entry_index)];
  const double midpoint = (schema.er_min + schema.er_max) / 2.0;
  const bool desire_rose =
      entry_index == 0
          ? entry.er_desire_score > midpoint
          : entry.er_desire_score > entries[static_cast<std::size_t>(entry_index - 1)].er_desire_score;
  return desire_rose && entry.target("INT_availability");
}

// ---------------------------------------------------------------------------
// Sequenced execution
// ---------------------------------------------------------------------------

UserRunResult run_user_sequence(const Store& store, const std::string& user_id,
                                const RunCondition& condition, const PeerIndex* peers,
                                InferenceBackend& backend, const RuntimeConfig& config) {
  condition.validate();
  UserRunResult out;
  out.user_id = user_id;
  ReflectionLog log;
  if (!config.memory_dir.empty()) {
    try {
      log.load_user(config.memory_dir, user_id);
    } catch (const Error&) {
      // Fresh start when no prior log exists.
    }
  }

  const auto entries = store.entries(user_id);
  for (int i = 0; i < static_cast<int>(entries.size()); ++i) {
    const EmaEntry& entry = entries[static_cast<std::size_t>(i)];
    const AccessContext ctx = store.open_context(user_id, entry.timestamp);
    const MemoryDocument memory = log.render(user_id, config.memory_budget_chars);

    EntryRunResult row;
    row.entry_index = i;
    row.timestamp = entry.timestamp;
    try {
      row.prediction = predict_entry(store, ctx, condition, peers, memory, backend, config);
    } catch (const Error& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    row.receptivity_outcome = receptivity_outcome_for(store, user_id, i, config.schema);

    const std::string reflection =
        reflect(ctx, row.prediction, row.receptivity_outcome, backend, config);
    ReflectionRecord record;
    record.user_id = user_id;
    record.entry_index = i;
    record.created_at = entry.timestamp;
    record.text = reflection;
    record.receptivity_outcome = row.receptivity_outcome;
    log.append(record);

    out.entries.push_back(std::move(row));
  }
  out.reflections = log.records(user_id);
  if (!config.memory_dir.empty()) log.save_user(config.memory_dir, user_id);
  return out;
}

std::vector<UserRunResult> run_cohort(const Store& store,
                                      const std::vector<std::string>& user_ids,
                                      const RunCondition& condition, const PeerIndex* peers,
                                      InferenceBackend& backend, int concurrency_limit,
                                      const RuntimeConfig& config) {
  condition.validate();
  if (concurrency_limit < 1) raise(ErrorCode::invalid_argument, "concurrency_limit must be >= 1");

  std::vector<UserRunResult> results(user_ids.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= user_ids.size()) return;
      try {
        results[i] = run_user_sequence(store, user_ids[i], condition, peers, backend, config);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> hold(error_mutex);
        if (first_error.empty()) first_error = e.what();
        results[i].user_id = user_ids[i];
        results[i].aborted = true;
        results[i].abort_reason = e.what();
      }
    }
  };

  const int n_threads =
      std::min<int>(concurrency_limit, static_cast<int>(user_ids.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(std::max(n_threads, 0)));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace pulse

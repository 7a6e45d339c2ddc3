#pragma once

#include <nlohmann/json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulse/tools.hpp"

namespace pulse {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Transcript model. A conversation is an ordered list of messages; tool
// results carry the rendered text (what a remote model reads) plus the
// structured payload for in-process consumers such as the scripted policies.
// Remote adapters serialize only role/content/tool_name.
// ---------------------------------------------------------------------------

enum class MessageRole { system, user, assistant, tool };
std::string_view to_string(MessageRole role);
MessageRole message_role_from_string(std::string_view s);

struct Message {
  MessageRole role = MessageRole::user;
  std::string content;
  std::string tool_name;                 // role == tool only
  std::optional<json> tool_structured;   // role == tool only; never sent over HTTP

  json to_json() const;
  static Message from_json(const json& j);
};

// Fixed phrases the runtime injects; backends key behavior off these markers
// rather than off hidden state, so every policy decision is a pure function
// of the transcript.
inline constexpr std::string_view kForcedFinalizeMarker =
    "No further tool calls are possible. Reply with only the final JSON object.";
inline constexpr std::string_view kReflectionRequestMarker =
    "Write a brief private reflection on how this check-in went";
inline constexpr std::string_view kRetryParseMarker =
    "That reply could not be parsed. Re-emit only the final JSON object.";

struct ToolCallRequest {
  std::string tool_name;
  json arguments;
};

struct BackendReply {
  enum class Kind { say, call_tool, finalize };
  Kind kind = Kind::say;
  std::string text;                       // say / finalize
  std::optional<ToolCallRequest> tool_call;  // call_tool
};

struct BackendRequest {
  std::vector<Message> transcript;
  std::vector<ToolSchema> tools;  // empty when tool use is not on offer
};

// One inference step: given the transcript (and the tools on offer), produce
// exactly one of {assistant text, tool invocation, final answer}.
// Implementations must be safe for concurrent independent calls.
class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  virtual BackendReply complete(const BackendRequest& request) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend: a deterministic policy driven purely by the transcript.
//
// Policy file format (JSON, versioned):
//   {"policy_version": 1, "kind": "replay",
//    "steps": [{"action": "call_tool", "tool": "...", "arguments": {...}},
//              {"action": "say", "text": "..."},
//              {"action": "finalize", "text": "..."}]}
//   {"policy_version": 1, "kind": "rule_agent", "parameters": {...}}
//
// The replay policy indexes steps by the number of assistant turns already in
// the transcript (so no internal cursor is needed and concurrent transcripts
// cannot interfere); past the last step it repeats the final one.
// ---------------------------------------------------------------------------

class ScriptedBackend : public InferenceBackend {
 public:
  explicit ScriptedBackend(json policy);
  static ScriptedBackend from_file(const std::string& path);

  BackendReply complete(const BackendRequest& request) override;
  std::string name() const override { return "scripted:" + kind_; }

  const json& policy() const { return policy_; }

 private:
  BackendReply replay_step(const BackendRequest& request) const;
  BackendReply rule_agent_step(const BackendRequest& request) const;
  BackendReply rule_agent_finalize(const BackendRequest& request) const;

  json policy_;
  std::string kind_;
};

// Default parameterization of the built-in rule-following policy
// (tool plan, recency thresholds, score gains, confidence schedule).
json default_rule_agent_policy_json();

// ---------------------------------------------------------------------------
// HTTP chat-completions adapter. Configured by environment variables:
//   PULSE_BACKEND_ENDPOINT  e.g. "http://127.0.0.1:8000" (required)
//   PULSE_BACKEND_MODEL     model identifier (required)
//   PULSE_BACKEND_API_KEY   bearer token (optional)
//   PULSE_BACKEND_PATH      default "/v1/chat/completions"
// The wire shapes are the common chat-completions ones; both helpers are pure
// and unit-tested without a network.
// ---------------------------------------------------------------------------

json build_chat_request(const BackendRequest& request, const std::string& model);
BackendReply parse_chat_reply(const json& reply);

class HttpBackend : public InferenceBackend {
 public:
  HttpBackend(std::string endpoint, std::string model, std::string api_key = "",
              std::string path = "/v1/chat/completions");
  static std::unique_ptr<HttpBackend> from_env();

  BackendReply complete(const BackendRequest& request) override;
  std::string name() const override { return "http:" + model_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  std::string path_;
};

// "rule", "scripted:<policy-file>", or "http" (env-configured).
std::unique_ptr<InferenceBackend> make_backend(const std::string& spec);

}  // namespace pulse

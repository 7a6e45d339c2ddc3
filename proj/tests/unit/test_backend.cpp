// Inference backends: transcript model, scripted policies (replay and rule
// agent), the pure chat-completions adapters, and the backend factory.
#include <cstdlib>
#include <string>
#include <vector>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "pulse/backend.hpp"

using namespace pulse;
using testutil::raises;

namespace {

Message msg(MessageRole role, std::string content) {
  Message m;
  m.role = role;
  m.content = std::move(content);
  return m;
}

Message tool_msg(std::string name, std::string rendered, json structured) {
  Message m;
  m.role = MessageRole::tool;
  m.content = std::move(rendered);
  m.tool_name = std::move(name);
  m.tool_structured = std::move(structured);
  return m;
}

json replay_policy() {
  return {{"policy_version", 1},
          {"kind", "replay"},
          {"steps",
           json::array({{{"action", "call_tool"},
                         {"tool", "get_daily_summary"},
                         {"arguments", {{"lookback_days", 2}}}},
                        {{"action", "say"}, {"text", "thinking"}},
                        {{"action", "finalize"}, {"text", "done"}}})}};
}

BackendRequest request_with_assistant_turns(int n) {
  BackendRequest req;
  req.transcript.push_back(msg(MessageRole::system, "sys"));
  req.transcript.push_back(msg(MessageRole::user, "go"));
  for (int i = 0; i < n; ++i) {
    req.transcript.push_back(msg(MessageRole::assistant, "turn " + std::to_string(i)));
  }
  return req;
}

}  // namespace

TEST_CASE("messages serialize by role") {
  Message a = msg(MessageRole::assistant, "hello");
  json ja = a.to_json();
  CHECK(ja.at("role") == "assistant");
  CHECK(ja.at("content") == "hello");
  CHECK_FALSE(ja.contains("tool_name"));
  CHECK_FALSE(ja.contains("tool_structured"));

  Message t = tool_msg("get_daily_summary", "text", {{"x", 1}});
  json jt = t.to_json();
  CHECK(jt.at("role") == "tool");
  CHECK(jt.at("tool_name") == "get_daily_summary");
  CHECK(jt.at("tool_structured") == json{{"x", 1}});

  Message back = Message::from_json(jt);
  CHECK(back.role == MessageRole::tool);
  CHECK(back.tool_name == "get_daily_summary");
  REQUIRE(back.tool_structured.has_value());
  CHECK(back.tool_structured->dump() == t.tool_structured->dump());

  CHECK(message_role_from_string("system") == MessageRole::system);
  CHECK(message_role_from_string("user") == MessageRole::user);
  CHECK(raises(ErrorCode::parse_error, [] { message_role_from_string("robot"); }));
}

TEST_CASE("prompt markers are distinct fixed phrases") {
  CHECK_FALSE(kForcedFinalizeMarker.empty());
  CHECK_FALSE(kReflectionRequestMarker.empty());
  CHECK_FALSE(kRetryParseMarker.empty());
  CHECK(kForcedFinalizeMarker != kReflectionRequestMarker);
  CHECK(kForcedFinalizeMarker != kRetryParseMarker);
  CHECK(kReflectionRequestMarker != kRetryParseMarker);
}

TEST_CASE("replay policy: step chosen by assistant-turn count, last step repeats") {
  ScriptedBackend backend(replay_policy());
  CHECK(backend.name() == "scripted:replay");

  BackendReply r0 = backend.complete(request_with_assistant_turns(0));
  CHECK(r0.kind == BackendReply::Kind::call_tool);
  REQUIRE(r0.tool_call.has_value());
  CHECK(r0.tool_call->tool_name == "get_daily_summary");
  CHECK(r0.tool_call->arguments.at("lookback_days") == 2);

  BackendReply r1 = backend.complete(request_with_assistant_turns(1));
  CHECK(r1.kind == BackendReply::Kind::say);
  CHECK(r1.text == "thinking");

  BackendReply r2 = backend.complete(request_with_assistant_turns(2));
  CHECK(r2.kind == BackendReply::Kind::finalize);
  CHECK(r2.text == "done");

  // Beyond the script the last step repeats; no internal cursor exists, so
  // call order across transcripts cannot matter.
  CHECK(backend.complete(request_with_assistant_turns(9)).text == "done");
  CHECK(backend.complete(request_with_assistant_turns(0)).tool_call->tool_name ==
        "get_daily_summary");
  CHECK(backend.complete(request_with_assistant_turns(1)).text == "thinking");
}

TEST_CASE("replay policy: defaults and validation") {
  // Arguments default to an empty object.
  json p = replay_policy();
  p["steps"][0].erase("arguments");
  ScriptedBackend backend(p);
  BackendReply r = backend.complete(request_with_assistant_turns(0));
  CHECK(r.tool_call->arguments == json::object());

  CHECK(raises(ErrorCode::config_error, [] { ScriptedBackend(json::array()); }));
  CHECK(raises(ErrorCode::config_error, [] { ScriptedBackend(json{{"kind", "replay"}}); }));
  CHECK(raises(ErrorCode::config_error, [] {
    ScriptedBackend(json{{"policy_version", 2}, {"kind", "replay"}, {"steps", json::array()}});
  }));
  CHECK(raises(ErrorCode::config_error, [] {
    ScriptedBackend(json{{"policy_version", 1}, {"kind", "replay"}});
  }));
  CHECK(raises(ErrorCode::config_error, [] {
    ScriptedBackend(json{{"policy_version", 1}, {"kind", "replay"}, {"steps", json::array()}});
  }));
  CHECK(raises(ErrorCode::config_error, [] {
    ScriptedBackend(json{{"policy_version", 1}, {"kind", "mystery"}});
  }));

  json bad_action = replay_policy();
  bad_action["steps"][0]["action"] = "dance";
  ScriptedBackend bad(bad_action);
  CHECK(raises(ErrorCode::config_error,
               [&] { bad.complete(request_with_assistant_turns(0)); }));
}

TEST_CASE("policy files load with parse errors surfaced") {
  const std::string dir = fixtures::fresh_dir("policy");
  fixtures::write_file(dir + "/ok.json", replay_policy().dump());
  ScriptedBackend ok = ScriptedBackend::from_file(dir + "/ok.json");
  CHECK(ok.complete(request_with_assistant_turns(2)).text == "done");

  CHECK(raises(ErrorCode::config_error,
               [&] { ScriptedBackend::from_file(dir + "/missing.json"); }));
  fixtures::write_file(dir + "/bad.json", "{not json");
  CHECK(raises(ErrorCode::parse_error, [&] { ScriptedBackend::from_file(dir + "/bad.json"); }));
}

TEST_CASE("rule agent: fixed tool plan, then a finalize that parses") {
  ScriptedBackend agent(default_rule_agent_policy_json());
  CHECK(agent.name() == "scripted:rule_agent");

  BackendRequest req = request_with_assistant_turns(0);
  req.tools = ToolKit::schemas({});

  const char* expected_plan[] = {"get_daily_summary", "get_behavioral_timeline",
                                 "compare_to_baseline", "find_peer_cases"};
  for (const char* tool : expected_plan) {
    BackendReply r = agent.complete(req);
    REQUIRE(r.kind == BackendReply::Kind::call_tool);
    CHECK(r.tool_call->tool_name == tool);
    req.transcript.push_back(msg(MessageRole::assistant, "calling " + r.tool_call->tool_name));
    req.transcript.push_back(tool_msg(r.tool_call->tool_name, "result", json::object()));
  }
  // The peer call carries the configured k.
  CHECK(req.transcript.back().tool_name == "find_peer_cases");

  BackendReply fin = agent.complete(req);
  REQUIRE(fin.kind == BackendReply::Kind::finalize);
  json out = json::parse(fin.text);
  CHECK(out.at("binary_targets").size() == static_cast<std::size_t>(kNumBinaryTargets));
  CHECK(out.at("pa_pred").is_number());
  CHECK(out.at("na_pred").is_number());
  CHECK(out.at("er_desire_pred").is_number());
  CHECK(out.at("confidence").is_number());
  CHECK(out.at("reasoning").is_string());
}

TEST_CASE("rule agent: peer call uses the policy's k parameter") {
  json policy = default_rule_agent_policy_json();
  policy["parameters"]["peer_k"] = 2;
  ScriptedBackend agent(policy);
  BackendRequest req = request_with_assistant_turns(0);
  req.tools = ToolKit::schemas({});
  for (int i = 0; i < 3; ++i) {
    req.transcript.push_back(tool_msg("t" + std::to_string(i), "r", json::object()));
  }
  BackendReply r = agent.complete(req);
  REQUIRE(r.kind == BackendReply::Kind::call_tool);
  CHECK(r.tool_call->tool_name == "find_peer_cases");
  CHECK(r.tool_call->arguments.at("k") == 2);
}

TEST_CASE("rule agent: finalizes immediately without tools or when told to stop") {
  ScriptedBackend agent(default_rule_agent_policy_json());

  BackendRequest no_tools = request_with_assistant_turns(0);
  CHECK(agent.complete(no_tools).kind == BackendReply::Kind::finalize);

  BackendRequest forced = request_with_assistant_turns(0);
  forced.tools = ToolKit::schemas({});
  forced.transcript.push_back(msg(MessageRole::user, std::string(kForcedFinalizeMarker)));
  CHECK(agent.complete(forced).kind == BackendReply::Kind::finalize);

  BackendRequest retry = request_with_assistant_turns(0);
  retry.tools = ToolKit::schemas({});
  retry.transcript.push_back(msg(MessageRole::user, std::string(kRetryParseMarker)));
  CHECK(agent.complete(retry).kind == BackendReply::Kind::finalize);
}

TEST_CASE("rule agent: availability derives from the recency facts") {
  ScriptedBackend agent(default_rule_agent_policy_json());

  auto finalize_with_recency = [&](json recency) {
    BackendRequest req = request_with_assistant_turns(0);
    json summary = {{"days", json::array({{{"date", "2025-03-01"},
                                           {"partial", true},
                                           {"recency", std::move(recency)}}})}};
    req.transcript.push_back(tool_msg("get_daily_summary", "summary", summary));
    req.transcript.push_back(msg(MessageRole::user, std::string(kForcedFinalizeMarker)));
    BackendReply r = agent.complete(req);
    REQUIRE(r.kind == BackendReply::Kind::finalize);
    return json::parse(r.text);
  };
  auto recency = [](json screen, json auto_min, json sleep_end) {
    return json{{"minutes_since_last_screen_event", std::move(screen)},
                {"minutes_since_last_unlock", nullptr},
                {"automotive_min_last_60", std::move(auto_min)},
                {"minutes_since_last_sleep_end", std::move(sleep_end)}};
  };

  CHECK(finalize_with_recency(recency(49.0, 0.0, 450.0)).at("binary_targets")
            .at("INT_availability") == true);
  // Recently in a vehicle.
  CHECK(finalize_with_recency(recency(49.0, 5.0, 450.0)).at("binary_targets")
            .at("INT_availability") == false);
  // Screen idle too long.
  CHECK(finalize_with_recency(recency(130.0, 0.0, 450.0)).at("binary_targets")
            .at("INT_availability") == false);
  // Just woke up.
  CHECK(finalize_with_recency(recency(49.0, 0.0, 20.0)).at("binary_targets")
            .at("INT_availability") == false);
  // No screen signal at all.
  CHECK(finalize_with_recency(recency(nullptr, 0.0, 450.0)).at("binary_targets")
            .at("INT_availability") == false);
}

TEST_CASE("rule agent: deviation shifts scores and confidence") {
  ScriptedBackend agent(default_rule_agent_policy_json());
  BackendRequest req = request_with_assistant_turns(0);
  req.transcript.push_back(tool_msg("compare_to_baseline", "b",
                                    {{"metric", "screen_total_min"}, {"z", 2.0}}));
  req.transcript.push_back(msg(MessageRole::user, std::string(kForcedFinalizeMarker)));
  json out = json::parse(agent.complete(req).text);
  // Neutral 25/25/5 shifted by gains 3/3/1 per sd.
  CHECK(out.at("na_pred") == 31.0);
  CHECK(out.at("pa_pred") == 19.0);
  CHECK(out.at("er_desire_pred") == 7.0);
  CHECK(out.at("binary_targets").at("NA_State") == true);
  CHECK(out.at("binary_targets").at("PA_State") == false);
  CHECK(out.at("binary_targets").at("ER_desire_State") == true);
  CHECK(out.at("confidence") == 0.7);  // base 0.5 + one signal
  CHECK(out.at("reasoning").get<std::string>().find("deviation") != std::string::npos);
}

TEST_CASE("rule agent: peer outcomes vote on the remaining targets") {
  ScriptedBackend agent(default_rule_agent_policy_json());
  auto peer_row = [](double pa, double na, double er, bool sad_flag) {
    json targets = json::object();
    for (const auto& name : binary_target_names()) targets[std::string(name)] = false;
    targets["sad"] = sad_flag;
    return json{{"outcomes", {{"pa_score", pa},
                              {"na_score", na},
                              {"er_desire_score", er},
                              {"binary_targets", targets}}}};
  };
  BackendRequest req = request_with_assistant_turns(0);
  req.transcript.push_back(tool_msg(
      "find_peer_cases", "p",
      {{"results", json::array({peer_row(30, 6, 2, true), peer_row(34, 10, 4, true),
                                peer_row(20, 8, 3, false)})}}));
  req.transcript.push_back(msg(MessageRole::user, std::string(kForcedFinalizeMarker)));
  json out = json::parse(agent.complete(req).text);
  CHECK(out.at("pa_pred") == 28.0);  // mean of 30, 34, 20
  CHECK(out.at("na_pred") == 8.0);
  CHECK(out.at("er_desire_pred") == 3.0);
  CHECK(out.at("binary_targets").at("sad") == true);        // 2 of 3 peers
  CHECK(out.at("binary_targets").at("happy") == false);     // no votes
  CHECK(out.at("binary_targets").at("PA_State") == true);   // mean 28 > 25
  CHECK(out.at("binary_targets").at("NA_State") == false);
  CHECK(out.at("confidence") == 0.7);
}

TEST_CASE("rule agent: reflection requests get a deliberate plain-text answer") {
  ScriptedBackend agent(default_rule_agent_policy_json());
  BackendRequest req = request_with_assistant_turns(1);
  req.transcript.push_back(msg(MessageRole::user, std::string(kReflectionRequestMarker)));
  BackendReply r = agent.complete(req);
  REQUIRE(r.kind == BackendReply::Kind::finalize);
  CHECK(r.text.find("did not engage") != std::string::npos);

  req.transcript.insert(req.transcript.end() - 1, msg(MessageRole::user, "outcome: engaged"));
  BackendReply r2 = agent.complete(req);
  CHECK(r2.text.find("did engage") != std::string::npos);
  CHECK(r2.text.find("did not engage") == std::string::npos);
}

TEST_CASE("chat request body: roles, tool names, schemas, fixed temperature") {
  BackendRequest req = request_with_assistant_turns(1);
  req.transcript.push_back(tool_msg("get_daily_summary", "rendered text", {{"secret", 1}}));
  req.tools = ToolKit::schemas({});

  json body = build_chat_request(req, "test-model");
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  REQUIRE(body.at("messages").size() == 4);
  CHECK(body.at("messages")[0].at("role") == "system");
  CHECK(body.at("messages")[2].at("role") == "assistant");
  const json& wire_tool = body.at("messages")[3];
  CHECK(wire_tool.at("role") == "tool");
  CHECK(wire_tool.at("name") == "get_daily_summary");
  CHECK(wire_tool.at("content") == "rendered text");
  // The structured payload never crosses the wire.
  CHECK(body.dump().find("secret") == std::string::npos);

  REQUIRE(body.at("tools").size() == 8);
  CHECK(body.at("tools")[0].at("type") == "function");
  CHECK(body.at("tools")[0].at("function").at("name") == "get_daily_summary");
  CHECK(body.at("tools")[0].at("function").contains("parameters"));

  BackendRequest bare = request_with_assistant_turns(0);
  CHECK_FALSE(build_chat_request(bare, "m").contains("tools"));
}

TEST_CASE("chat replies parse into the three reply kinds") {
  json tool_reply = {{"choices",
                      json::array({{{"message",
                                     {{"tool_calls",
                                       json::array({{{"function",
                                                      {{"name", "query_sensing"},
                                                       {"arguments",
                                                        "{\"modality\":\"motion\"}"}}}}})}}}}})}};
  BackendReply r = parse_chat_reply(tool_reply);
  CHECK(r.kind == BackendReply::Kind::call_tool);
  CHECK(r.tool_call->tool_name == "query_sensing");
  CHECK(r.tool_call->arguments.at("modality") == "motion");

  // Arguments may also arrive as a JSON object.
  json obj_args = tool_reply;
  obj_args["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"] =
      json{{"modality", "gps"}};
  CHECK(parse_chat_reply(obj_args).tool_call->arguments.at("modality") == "gps");

  json text_reply = {{"choices", json::array({{{"message", {{"content", "hello"}}}}})}};
  BackendReply t = parse_chat_reply(text_reply);
  CHECK(t.kind == BackendReply::Kind::say);
  CHECK(t.text == "hello");

  json null_content = {{"choices", json::array({{{"message", {{"content", nullptr}}}}})}};
  CHECK(parse_chat_reply(null_content).text.empty());

  CHECK(raises(ErrorCode::backend_error, [] { parse_chat_reply(json::object()); }));
  CHECK(raises(ErrorCode::backend_error,
               [] { parse_chat_reply(json{{"choices", json::array()}}); }));
  json bad_args = tool_reply;
  bad_args["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"] = "{oops";
  CHECK(raises(ErrorCode::backend_error, [&] { parse_chat_reply(bad_args); }));
}

TEST_CASE("backend factory") {
  CHECK(make_backend("rule")->name() == "scripted:rule_agent");

  const std::string dir = fixtures::fresh_dir("factory");
  fixtures::write_file(dir + "/p.json", replay_policy().dump());
  CHECK(make_backend("scripted:" + dir + "/p.json")->name() == "scripted:replay");

  CHECK(raises(ErrorCode::config_error, [] { make_backend("telepathy"); }));

  ::unsetenv("PULSE_BACKEND_ENDPOINT");
  ::unsetenv("PULSE_BACKEND_MODEL");
  CHECK(raises(ErrorCode::config_error, [] { make_backend("http"); }));

  ::setenv("PULSE_BACKEND_ENDPOINT", "http://127.0.0.1:9", 1);
  ::setenv("PULSE_BACKEND_MODEL", "m", 1);
  CHECK(make_backend("http")->name() == "http:m");
  ::unsetenv("PULSE_BACKEND_ENDPOINT");
  ::unsetenv("PULSE_BACKEND_MODEL");
}

TEST_CASE("http backend constructor validation") {
  CHECK(raises(ErrorCode::config_error, [] { HttpBackend("", "model"); }));
  CHECK(raises(ErrorCode::config_error, [] { HttpBackend("http://x", ""); }));
  CHECK(HttpBackend("http://x", "m").name() == "http:m");
}

#include "pulse/wire.hpp"

#include <istream>
#include <ostream>

#include "pulse/error.hpp"
#include "pulse/time.hpp"

namespace pulse {

int wire_error_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::config_error:
    case ErrorCode::insufficient_data:
      return kWireInvalidParams;
    case ErrorCode::not_found:
      return kWireMethodNotFound;
    case ErrorCode::parse_error:
      return kWireParseError;
    case ErrorCode::boundary_violation:
      return kWireBoundaryViolation;
    case ErrorCode::unavailable:
      return kWireUnavailable;
    case ErrorCode::protocol_error:
      return kWireInvalidRequest;
    case ErrorCode::format_error:
    case ErrorCode::fold_leakage:
    case ErrorCode::leak_rejected:
    case ErrorCode::pairing_error:
    case ErrorCode::backend_error:
      return kWireInternalError;
  }
  return kWireInternalError;
}

namespace {

json make_result(const json& id, json result) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
}

json make_error(const json& id, int code, const std::string& message,
                const std::string& kind = "") {
  json err = {{"code", code}, {"message", message}};
  if (!kind.empty()) err["data"] = {{"kind", kind}};
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", std::move(err)}};
}

std::string get_required_string(const json& params, const char* key) {
  if (!params.contains(key) || !params.at(key).is_string()) {
    raise(ErrorCode::invalid_argument, std::string("initialize requires string `") + key + "`");
  }
  return params.at(key).get<std::string>();
}

}  // namespace

ToolServer::ToolServer(const Store* store, std::string dataset_label, ToolServerOptions options)
    : options_(options),
      store_(store),
      dataset_label_(std::move(dataset_label)),
      preloaded_(true) {
  if (store_ == nullptr) raise(ErrorCode::invalid_argument, "preloaded server needs a store");
}

ToolServer::ToolServer(ToolServerOptions options) : options_(options) {}

json ToolServer::do_initialize(const json& id, const json& params) {
  if (!params.is_object()) {
    return make_error(id, kWireInvalidParams, "initialize params must be an object",
                      std::string(error_code_name(ErrorCode::invalid_argument)));
  }
  try {
    const std::string user_id = get_required_string(params, "user_id");
    const Timestamp ema_ts = parse_iso8601(get_required_string(params, "ema_timestamp"));
    if (preloaded_) {
      if (params.contains("dataset") && !dataset_label_.empty() &&
          params.at("dataset").get<std::string>() != dataset_label_) {
        raise(ErrorCode::invalid_argument, "this server is bound to dataset " + dataset_label_);
      }
    } else {
      const std::string dataset = get_required_string(params, "dataset");
      owned_store_.emplace(Store::open_dir(dataset));
      store_ = &*owned_store_;
      dataset_label_ = dataset;
    }
    const AccessContext ctx = store_->open_context(user_id, ema_ts);
    kit_.emplace(*store_, ctx, options_.peers, options_.tool_config);
    initialized_ = true;
    return make_result(id, {{"server", "pulse-tools"},
                            {"protocol_version", 1},
                            {"render_template_version", kRenderTemplateVersion},
                            {"context",
                             {{"user_id", user_id},
                              {"ema_timestamp", to_iso8601(ema_ts)},
                              {"entry_index", store_->entry_index_of(ctx)}}}});
  } catch (const Error& e) {
    // Bad user / timestamp / dataset are caller mistakes, not missing methods.
    const int code =
        e.code() == ErrorCode::not_found ? kWireInvalidParams : wire_error_code(e.code());
    return make_error(id, code, e.what(), std::string(error_code_name(e.code())));
  } catch (const std::exception& e) {
    return make_error(id, kWireInternalError, e.what());
  }
}

json ToolServer::dispatch(const json& request) {
  if (!request.is_object()) {
    return make_error(json(), kWireInvalidRequest, "request must be a JSON object");
  }
  const json id = request.contains("id") ? request.at("id") : json();
  if (request.value("jsonrpc", "") != "2.0") {
    return make_error(id, kWireInvalidRequest, "missing jsonrpc: \"2.0\"");
  }
  if (!request.contains("method") || !request.at("method").is_string()) {
    return make_error(id, kWireInvalidRequest, "missing method");
  }
  const std::string method = request.at("method").get<std::string>();
  const json params = request.contains("params") ? request.at("params") : json::object();

  if (method == "initialize") {
    if (initialized_) {
      return make_error(id, kWireBadState, "context already initialized; one per process");
    }
    return do_initialize(id, params);
  }
  if (!initialized_) {
    return make_error(id, kWireBadState, "initialize must be the first request");
  }
  if (method == "tools/list") {
    json tools = json::array();
    for (const auto& schema : ToolKit::schemas(options_.tool_config)) {
      tools.push_back(schema.to_json());
    }
    return make_result(id, {{"tools", std::move(tools)}});
  }
  if (method == "tools/call") {
    if (!params.is_object() || !params.contains("name") || !params.at("name").is_string()) {
      return make_error(id, kWireInvalidParams, "tools/call requires a string `name`");
    }
    const json arguments =
        params.contains("arguments") ? params.at("arguments") : json::object();
    try {
      return make_result(id, kit_->call(params.at("name").get<std::string>(), arguments).to_json());
    } catch (const Error& e) {
      return make_error(id, wire_error_code(e.code()), e.what(),
                        std::string(error_code_name(e.code())));
    } catch (const std::exception& e) {
      return make_error(id, kWireInternalError, e.what());
    }
  }
  return make_error(id, kWireMethodNotFound, "unknown method: " + method);
}

int ToolServer::run(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    json response;
    std::string method = "?";
    json request;
    bool parsed = true;
    try {
      request = json::parse(line);
    } catch (const json::exception& e) {
      parsed = false;
      response = make_error(json(), kWireParseError, std::string("parse error: ") + e.what());
    }
    if (parsed) {
      if (request.is_object() && request.contains("method") &&
          request.at("method").is_string()) {
        method = request.at("method").get<std::string>();
      }
      response = dispatch(request);
    }
    out << response.dump() << "\n";
    out.flush();
    if (options_.log != nullptr) {
      *options_.log << "pulse-tools: " << method << " -> "
                    << (response.contains("error")
                            ? "error " +
                                  std::to_string(response["error"]["code"].get<int>())
                            : "ok")
                    << "\n";
    }
    // The very first request must establish the context; stop serving (with a
    // failing status) when it did not.
    if (!initialized_) break;
  }
  return initialized_ ? 0 : 1;
}

}  // namespace pulse

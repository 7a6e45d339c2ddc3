#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pulse/error.hpp"
#include "pulse/retrieval.hpp"
#include "pulse/timestore.hpp"
#include "pulse/tools.hpp"

namespace pulse {

// JSON-RPC 2.0 numeric error codes used on the wire.
constexpr int kWireParseError = -32700;
constexpr int kWireInvalidRequest = -32600;
constexpr int kWireMethodNotFound = -32601;
constexpr int kWireInvalidParams = -32602;
constexpr int kWireInternalError = -32603;
constexpr int kWireBoundaryViolation = -32000;
constexpr int kWireUnavailable = -32001;
constexpr int kWireBadState = -32002;

// Wire code for an internal failure category.
int wire_error_code(ErrorCode code);

struct ToolServerOptions {
  const PeerIndex* peers = nullptr;  // peer lookups report unavailable when absent
  ToolConfig tool_config{};
  std::ostream* log = nullptr;  // one diagnostic line per request; never the reply stream
};

// Newline-delimited JSON-RPC 2.0 endpoint bound to exactly one
// (user, survey-timestamp) context for its whole life.
//
// The first request must be `initialize` with params {user_id, ema_timestamp,
// dataset}; afterwards `tools/list` and `tools/call` {name, arguments} answer
// until the input stream closes. A second initialize, or any other method
// before one, is a state error. Tool failures come back as structured error
// objects; a request never crashes the process.
class ToolServer {
 public:
  // Serves a preloaded store (in-process and test mode). When dataset_label
  // is non-empty, an initialize carrying a dataset must name exactly it.
  ToolServer(const Store* store, std::string dataset_label, ToolServerOptions options = {});

  // Loads the dataset directory named by initialize.dataset.
  explicit ToolServer(ToolServerOptions options = {});

  // Serves until `in` is exhausted. Returns the process exit status: 0 after
  // a successful initialize, nonzero when no initialize succeeded (the error
  // response is still written before returning).
  int run(std::istream& in, std::ostream& out);

 private:
  json dispatch(const json& request);
  json do_initialize(const json& id, const json& params);

  ToolServerOptions options_;
  const Store* store_ = nullptr;      // preloaded (not owned)
  std::optional<Store> owned_store_;  // loaded from initialize.dataset
  std::string dataset_label_;
  bool preloaded_ = false;
  std::optional<ToolKit> kit_;
  bool initialized_ = false;
};

}  // namespace pulse

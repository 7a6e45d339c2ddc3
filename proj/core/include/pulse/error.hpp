#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulse {

// Machine-readable failure categories. Every thrown pulse::Error carries one so
// callers (tool dispatcher, wire server, CLI) can map failures to structured
// error payloads instead of crashing.
enum class ErrorCode {
  invalid_argument,    // caller violated a parameter contract
  boundary_violation,  // attempted read at/after the access-context timestamp
  not_found,           // unknown user / timestamp / file
  insufficient_data,   // operation needs more history than exists
  parse_error,         // malformed input file or JSON
  format_error,        // model output failed schema validation
  fold_leakage,        // training fold overlaps evaluation users
  leak_rejected,       // reflection text tripped the score-leak filter
  pairing_error,       // paired test inputs do not cover identical entries
  config_error,        // bad configuration value
  unavailable,         // required resource (e.g. peer index) not mounted
  backend_error,       // inference backend failed; retryable
  protocol_error,      // wire request malformed or out of sequence
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pulse

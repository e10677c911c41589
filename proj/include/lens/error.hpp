#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lens {

enum class ErrorCode {
  InvalidArgument,
  BackendUnavailable,
  ImageDecodeError,
  SamplingUnsupported,
  ScoringUnsupported,
  ContextLengthExceeded,
  EmptySource,
  IoError,
  SchemaVersionMismatch,
  ParseError,
  EmptyScope,
  EmptyDescription,
  ShotMissingAnswer,
  EmptyRecordSet,
  SingleClassSet,
  ConfigError,
  DataLeak,
};

std::string_view to_string(ErrorCode code);

// Every failure the library raises carries a machine-readable code; the CLI
// and HTTP layers map codes to exit statuses / HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace lens

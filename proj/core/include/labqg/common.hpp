#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace labqg {

using json = nlohmann::ordered_json;

// Every error carries a stable machine-readable code; the HTTP layer and the
// CLI print it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define LABQG_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(Code, message) {}  \
  }

LABQG_DEFINE_ERROR(FormatError, "FormatError");
LABQG_DEFINE_ERROR(ConfigError, "ConfigError");
LABQG_DEFINE_ERROR(PreconditionError, "PreconditionError");
LABQG_DEFINE_ERROR(SessionClosed, "SessionClosed");
LABQG_DEFINE_ERROR(NoPendingPrompt, "NoPendingPrompt");
LABQG_DEFINE_ERROR(EmptyAnswer, "EmptyAnswer");
LABQG_DEFINE_ERROR(InvalidState, "InvalidState");
LABQG_DEFINE_ERROR(ExtractionUnparsable, "ExtractionUnparsable");
LABQG_DEFINE_ERROR(GatewayError, "GatewayError");
LABQG_DEFINE_ERROR(EditConflict, "EditConflict");
LABQG_DEFINE_ERROR(ValidationFailed, "ValidationFailed");
LABQG_DEFINE_ERROR(TypeUnsupported, "TypeUnsupported");
LABQG_DEFINE_ERROR(NoChain, "NoChain");
LABQG_DEFINE_ERROR(EmptyBatch, "EmptyBatch");
LABQG_DEFINE_ERROR(EmptyInput, "EmptyInput");
LABQG_DEFINE_ERROR(StoreError, "StoreError");
LABQG_DEFINE_ERROR(EmptyStore, "EmptyStore");
LABQG_DEFINE_ERROR(NotFound, "NotFound");

#undef LABQG_DEFINE_ERROR

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First 8 bytes of SHA-256, big-endian. Stable across platforms and runs.
std::uint64_t stable_hash64(std::string_view data);

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

/// UTC timestamp, ISO-8601 with millisecond precision.
std::string utc_now_iso8601();

/// Random 16-hex-digit token with a readable prefix, e.g. "sess-3f9a...".
std::string random_token(std::string_view prefix);

}  // namespace labqg

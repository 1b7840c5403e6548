#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "labqg/answer_parser.hpp"
#include "labqg/common.hpp"
#include "labqg/prompt_forge.hpp"
#include "labqg/taxonomy.hpp"

namespace labqg {

struct ModelConfig {
  std::string name;          // registry key; defaults to model_id
  std::string model_id;
  std::string endpoint_url;  // base URL, e.g. http://127.0.0.1:8000/v1, or mock://perfect
  std::string api_key_ref;   // environment variable holding the key; may be empty
  double temperature = 0.2;
  double top_p = 1.0;
  int top_k = -1;
  bool send_top_k = true;  // endpoint accepts a top_k field
  double timeout_seconds = 120.0;
  int max_output_tokens = 1024;
  int max_in_flight = 4;
};

/// Throws ConfigError.
void validate_config(const ModelConfig& cfg);

json to_json(const ModelConfig& cfg);
/// Missing fields take the defaults above. Throws ConfigError.
ModelConfig model_config_from_json(const json& j);

enum class TransportStatus { ok, timeout, http_error, connect_error };

std::string_view to_string(TransportStatus s);
std::optional<TransportStatus> parse_transport_status(std::string_view name);

struct RawGeneration {
  std::string model_id;
  std::string prompt_digest;
  std::string raw_text;
  std::string started_at;
  std::string finished_at;
  TransportStatus transport_status = TransportStatus::ok;
  int http_status = 0;
  std::string error_detail;
  int attempts = 1;
};

json to_json(const RawGeneration& g);
RawGeneration raw_generation_from_json(const json& j);

/// Chat-completions request body. Pure in (prompt, cfg).
json chat_request_body(std::string_view prompt, const ModelConfig& cfg);

struct TransportResult {
  TransportStatus status = TransportStatus::ok;
  int http_status = 0;
  std::string body;
  std::string error_detail;
};

/// One HTTP-ish exchange: POST the request body to the endpoint's
/// chat-completions route.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportResult post(const ModelConfig& cfg, const std::string& body) = 0;
};

/// OpenAI-compatible HTTP transport (cpp-httplib).
class HttpChatTransport : public ChatTransport {
 public:
  TransportResult post(const ModelConfig& cfg, const std::string& body) override;
};

/// In-process deterministic models addressed as mock://<behavior>:
///   perfect  schema-valid answers for every prompt kind
///   prose    always answers with prose, no JSON
///   echo     returns the user message unchanged
class MockChatTransport : public ChatTransport {
 public:
  TransportResult post(const ModelConfig& cfg, const std::string& body) override;

  /// The reply text the mock produces for one prompt.
  static std::string reply(std::string_view behavior, std::string_view model_id,
                           std::string_view prompt);
};

/// mock:// endpoints go to the mock, everything else over HTTP.
class RoutingTransport : public ChatTransport {
 public:
  RoutingTransport();
  TransportResult post(const ModelConfig& cfg, const std::string& body) override;

 private:
  MockChatTransport mock_;
  HttpChatTransport http_;
};

enum class CallMode {
  benchmark,    // single attempt, failures are data
  interactive,  // one retry on transport failure
};

/// Uniform client for generation and judging. Thread-safe; limits in-flight
/// requests per endpoint to the config's max_in_flight.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatTransport> transport);
  Gateway();  // RoutingTransport

  RawGeneration complete(std::string_view prompt, const ModelConfig& cfg,
                         CallMode mode = CallMode::benchmark);

  RawGeneration generate(const PromptPackage& pkg, const ModelConfig& cfg,
                         CallMode mode = CallMode::benchmark);

  RawGeneration judge_rate(const ParsedQuestion& question, const ContextSlice& slice,
                           const ModelConfig& judge_cfg, CallMode mode = CallMode::benchmark);

 private:
  class Limiter {
   public:
    void acquire(int limit);
    void release();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
  };

  Limiter& limiter_for(const std::string& endpoint);
  RawGeneration attempt(std::string_view prompt, const ModelConfig& cfg);

  std::shared_ptr<ChatTransport> transport_;
  std::mutex limiters_mu_;
  std::map<std::string, std::unique_ptr<Limiter>> limiters_;
};

/// Pulls choices[0].message.content out of a chat-completions response.
std::optional<std::string> completion_text(std::string_view response_body);

}  // namespace labqg

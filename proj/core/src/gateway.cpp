#include "labqg/gateway.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "labqg/judge.hpp"

namespace labqg {

namespace {

constexpr std::string_view kStatusNames[] = {"ok", "timeout", "http_error", "connect_error"};

struct Endpoint {
  std::string scheme_host_port;
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = url.substr(0, path_start);
  ep.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

std::pair<time_t, time_t> split_seconds(double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto micros = static_cast<time_t>(std::llround((seconds - static_cast<double>(whole)) * 1e6));
  return {whole, micros};
}

std::string chat_response(std::string_view model_id, const std::string& content) {
  json message = json::object();
  message["role"] = "assistant";
  message["content"] = content;
  json choice = json::object();
  choice["index"] = 0;
  choice["message"] = std::move(message);
  choice["finish_reason"] = "stop";
  json j = json::object();
  j["id"] = "mock-completion";
  j["object"] = "chat.completion";
  j["model"] = model_id;
  j["choices"] = json::array({std::move(choice)});
  return j.dump();
}

}  // namespace

void validate_config(const ModelConfig& cfg) {
  if (is_blank(cfg.model_id)) throw ConfigError("model_id is empty");
  if (is_blank(cfg.endpoint_url)) throw ConfigError("endpoint_url is empty for " + cfg.model_id);
  if (!(cfg.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(cfg.top_p > 0.0 && cfg.top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (!(cfg.timeout_seconds > 0.0)) throw ConfigError("timeout must be > 0");
  if (cfg.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be > 0");
  if (cfg.max_in_flight <= 0) throw ConfigError("max_in_flight must be > 0");
}

json to_json(const ModelConfig& cfg) {
  json j = json::object();
  j["name"] = cfg.name;
  j["model_id"] = cfg.model_id;
  j["endpoint_url"] = cfg.endpoint_url;
  j["api_key_ref"] = cfg.api_key_ref;
  j["temperature"] = cfg.temperature;
  j["top_p"] = cfg.top_p;
  j["top_k"] = cfg.top_k;
  j["send_top_k"] = cfg.send_top_k;
  j["timeout_seconds"] = cfg.timeout_seconds;
  j["max_output_tokens"] = cfg.max_output_tokens;
  j["max_in_flight"] = cfg.max_in_flight;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  ModelConfig cfg;
  try {
    cfg.model_id = j.at("model_id").get<std::string>();
    cfg.name = j.value("name", cfg.model_id);
    cfg.endpoint_url = j.at("endpoint_url").get<std::string>();
    cfg.api_key_ref = j.value("api_key_ref", "");
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.top_p = j.value("top_p", cfg.top_p);
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.send_top_k = j.value("send_top_k", cfg.send_top_k);
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string_view to_string(TransportStatus s) { return kStatusNames[static_cast<int>(s)]; }

std::optional<TransportStatus> parse_transport_status(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kStatusNames[i] == name) return static_cast<TransportStatus>(i);
  }
  return std::nullopt;
}

json to_json(const RawGeneration& g) {
  json j = json::object();
  j["model_id"] = g.model_id;
  j["prompt_digest"] = g.prompt_digest;
  j["transport_status"] = std::string(to_string(g.transport_status));
  j["http_status"] = g.http_status;
  j["raw_text"] = g.raw_text;
  j["error_detail"] = g.error_detail;
  j["attempts"] = g.attempts;
  j["started_at"] = g.started_at;
  j["finished_at"] = g.finished_at;
  return j;
}

RawGeneration raw_generation_from_json(const json& j) {
  try {
    RawGeneration g;
    g.model_id = j.at("model_id").get<std::string>();
    g.prompt_digest = j.at("prompt_digest").get<std::string>();
    const auto status = parse_transport_status(j.at("transport_status").get<std::string>());
    if (!status) throw FormatError("unknown transport_status");
    g.transport_status = *status;
    g.http_status = j.value("http_status", 0);
    g.raw_text = j.value("raw_text", "");
    g.error_detail = j.value("error_detail", "");
    g.attempts = j.value("attempts", 1);
    g.started_at = j.value("started_at", "");
    g.finished_at = j.value("finished_at", "");
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("generation: ") + e.what());
  }
}

json chat_request_body(std::string_view prompt, const ModelConfig& cfg) {
  json message = json::object();
  message["role"] = "user";
  message["content"] = prompt;
  json body = json::object();
  body["model"] = cfg.model_id;
  body["messages"] = json::array({std::move(message)});
  body["temperature"] = cfg.temperature;
  body["top_p"] = cfg.top_p;
  if (cfg.send_top_k) body["top_k"] = cfg.top_k;
  body["max_tokens"] = cfg.max_output_tokens;
  body["stream"] = false;
  return body;
}

std::optional<std::string> completion_text(std::string_view response_body) {
  const json j = json::parse(response_body.begin(), response_body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const json& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const json& message = first["message"];
  if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) {
    return std::nullopt;
  }
  return message["content"].get<std::string>();
}

TransportResult HttpChatTransport::post(const ModelConfig& cfg, const std::string& body) {
  const Endpoint ep = split_endpoint(cfg.endpoint_url);
  httplib::Client client(ep.scheme_host_port);
  const auto [sec, usec] = split_seconds(cfg.timeout_seconds);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!cfg.api_key_ref.empty()) {
    const char* key = std::getenv(cfg.api_key_ref.c_str());
    if (key == nullptr) {
      throw ConfigError("environment variable " + cfg.api_key_ref + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(ep.base_path + "/chat/completions", headers, body, "application/json");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  TransportResult out;
  if (!res) {
    const auto err = res.error();
    out.error_detail = httplib::to_string(err);
    switch (err) {
      case httplib::Error::ConnectionTimeout:
        out.status = TransportStatus::timeout;
        break;
      case httplib::Error::Read:
      case httplib::Error::Write:
        out.status = elapsed >= 0.9 * cfg.timeout_seconds ? TransportStatus::timeout
                                                           : TransportStatus::connect_error;
        break;
      default:
        out.status = TransportStatus::connect_error;
        break;
    }
    return out;
  }
  out.http_status = res->status;
  out.body = res->body;
  out.status = (res->status >= 200 && res->status < 300) ? TransportStatus::ok
                                                         : TransportStatus::http_error;
  if (out.status != TransportStatus::ok) out.error_detail = "HTTP " + std::to_string(res->status);
  return out;
}

TransportResult MockChatTransport::post(const ModelConfig& cfg, const std::string& body) {
  constexpr std::string_view kScheme = "mock://";
  TransportResult out;
  if (cfg.endpoint_url.rfind(kScheme, 0) != 0) {
    out.status = TransportStatus::connect_error;
    out.error_detail = "not a mock endpoint";
    return out;
  }
  const std::string behavior = cfg.endpoint_url.substr(kScheme.size());
  if (behavior != "perfect" && behavior != "prose" && behavior != "echo") {
    out.status = TransportStatus::http_error;
    out.http_status = 404;
    out.error_detail = "unknown mock behavior '" + behavior + "'";
    return out;
  }
  const json request = json::parse(body, nullptr, false);
  std::string prompt;
  if (!request.is_discarded() && request.contains("messages") && request["messages"].is_array() &&
      !request["messages"].empty()) {
    prompt = request["messages"].back().value("content", "");
  }
  out.http_status = 200;
  out.body = chat_response(cfg.model_id, reply(behavior, cfg.model_id, prompt));
  return out;
}

RoutingTransport::RoutingTransport() = default;

TransportResult RoutingTransport::post(const ModelConfig& cfg, const std::string& body) {
  if (cfg.endpoint_url.rfind("mock://", 0) == 0) return mock_.post(cfg, body);
  return http_.post(cfg, body);
}

void Gateway::Limiter::acquire(int limit) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit; });
  ++in_flight_;
}

void Gateway::Limiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

Gateway::Gateway(std::shared_ptr<ChatTransport> transport) : transport_(std::move(transport)) {}

Gateway::Gateway() : Gateway(std::make_shared<RoutingTransport>()) {}

Gateway::Limiter& Gateway::limiter_for(const std::string& endpoint) {
  std::lock_guard lock(limiters_mu_);
  auto& slot = limiters_[endpoint];
  if (!slot) slot = std::make_unique<Limiter>();
  return *slot;
}

RawGeneration Gateway::attempt(std::string_view prompt, const ModelConfig& cfg) {
  RawGeneration gen;
  gen.model_id = cfg.model_id;
  gen.prompt_digest = sha256_hex(prompt);
  const std::string body = chat_request_body(prompt, cfg).dump();

  auto& limiter = limiter_for(cfg.endpoint_url);
  limiter.acquire(cfg.max_in_flight);
  gen.started_at = utc_now_iso8601();
  TransportResult res;
  try {
    res = transport_->post(cfg, body);
  } catch (...) {
    limiter.release();
    throw;
  }
  gen.finished_at = utc_now_iso8601();
  limiter.release();

  gen.transport_status = res.status;
  gen.http_status = res.http_status;
  gen.error_detail = res.error_detail;
  if (res.status == TransportStatus::ok) {
    auto text = completion_text(res.body);
    if (text) {
      gen.raw_text = std::move(*text);
    } else {
      gen.transport_status = TransportStatus::http_error;
      gen.error_detail = "response has no choices[0].message.content";
    }
  }
  return gen;
}

RawGeneration Gateway::complete(std::string_view prompt, const ModelConfig& cfg, CallMode mode) {
  validate_config(cfg);
  RawGeneration gen = attempt(prompt, cfg);
  if (mode == CallMode::interactive && gen.transport_status != TransportStatus::ok) {
    gen = attempt(prompt, cfg);
    gen.attempts = 2;
  }
  return gen;
}

RawGeneration Gateway::generate(const PromptPackage& pkg, const ModelConfig& cfg, CallMode mode) {
  return complete(pkg.prompt_text, cfg, mode);
}

RawGeneration Gateway::judge_rate(const ParsedQuestion& question, const ContextSlice& slice,
                                  const ModelConfig& judge_cfg, CallMode mode) {
  return complete(rubric_prompt(question, slice).text, judge_cfg, mode);
}

}  // namespace labqg

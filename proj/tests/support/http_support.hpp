#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "labqg/app.hpp"
#include "labqg/service.hpp"

namespace labqg::testing {

struct HttpReply {
  int status = 0;  // 0 when the request did not complete
  std::string body;
  json doc() const { return json::parse(body, nullptr, false); }
};

/// One request against 127.0.0.1:port. `body` is sent as application/json.
HttpReply http_request(int port, const std::string& method, const std::string& path,
                       const std::string& body = {});

/// Serves an App on an ephemeral port until destroyed.
class TestServer {
 public:
  explicit TestServer(App& app);
  ~TestServer();
  TestServer(const TestServer&) = delete;
  TestServer& operator=(const TestServer&) = delete;

  int port() const { return port_; }
  HttpReply get(const std::string& path) const { return http_request(port_, "GET", path); }
  HttpReply post(const std::string& path, const json& body) const {
    return http_request(port_, "POST", path, body.dump());
  }
  HttpReply put(const std::string& path, const json& body) const {
    return http_request(port_, "PUT", path, body.dump());
  }

 private:
  Service service_;
  int port_ = -1;
  std::thread thread_;
};

struct CapturedRequest {
  std::string path;
  std::string authorization;
  std::string body;
};

struct CannedReply {
  int status = 200;
  std::string body;
  int delay_ms = 0;
};

/// A scripted chat-completions endpoint. The handler sees the request body
/// and returns the reply; every request is captured.
class FakeEndpoint {
 public:
  using Handler = std::function<CannedReply(const std::string& body)>;

  explicit FakeEndpoint(Handler handler);
  ~FakeEndpoint();
  FakeEndpoint(const FakeEndpoint&) = delete;
  FakeEndpoint& operator=(const FakeEndpoint&) = delete;

  /// Base URL including the /v1 prefix.
  std::string base_url() const;
  std::vector<CapturedRequest> requests() const;
  int max_concurrent() const { return max_concurrent_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<CapturedRequest> requests_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_concurrent_{0};
};

/// A chat-completions response body wrapping `content`.
std::string completion_body(const std::string& content);

}  // namespace labqg::testing

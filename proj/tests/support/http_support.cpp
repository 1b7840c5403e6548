#include "http_support.hpp"

#include <chrono>

#include <httplib.h>

namespace labqg::testing {

HttpReply http_request(int port, const std::string& method, const std::string& path,
                       const std::string& body) {
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);
  httplib::Result res;
  if (method == "GET") {
    res = client.Get(path);
  } else if (method == "POST") {
    res = client.Post(path, body, "application/json");
  } else if (method == "PUT") {
    res = client.Put(path, body, "application/json");
  } else if (method == "DELETE") {
    res = client.Delete(path);
  }
  if (!res) return {};
  return {res->status, res->body};
}

TestServer::TestServer(App& app) : service_(app) {
  port_ = service_.bind("127.0.0.1", 0);
  if (port_ > 0) {
    thread_ = std::thread([this] { service_.serve(); });
    service_.wait_until_ready();
  }
}

TestServer::~TestServer() {
  service_.stop();
  if (thread_.joinable()) thread_.join();
}

struct FakeEndpoint::Impl {
  httplib::Server server;
};

FakeEndpoint::FakeEndpoint(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  impl_->server.Post(R"(/v1/chat/completions)", [this, handler](const httplib::Request& req,
                                                                httplib::Response& res) {
    const int now = ++in_flight_;
    int seen = max_concurrent_.load();
    while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
    }
    {
      std::lock_guard lock(mu_);
      requests_.push_back({req.path, req.get_header_value("Authorization"), req.body});
    }
    const auto reply = handler(req.body);
    if (reply.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
    --in_flight_;
  });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

FakeEndpoint::~FakeEndpoint() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string FakeEndpoint::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

std::vector<CapturedRequest> FakeEndpoint::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string completion_body(const std::string& content) {
  json j = {{"id", "fake"},
            {"object", "chat.completion"},
            {"choices", json::array({{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", content}}},
                                      {"finish_reason", "stop"}}})}};
  return j.dump();
}

}  // namespace labqg::testing

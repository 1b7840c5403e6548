#pragma once

#include <memory>
#include <string>

#include "labqg/app.hpp"

namespace labqg {

/// HTTP status for an error code: 400 validation, 404 unknown id, 409 state
/// violations, 502 model or transport failures, 500 otherwise.
int http_status_for(std::string_view error_code);

/// {"error": {"code": ..., "message": ...}}
json error_body(std::string_view code, std::string_view message);

/// OpenAPI 3 description of the service, served at GET /spec.
json openapi_document();

/// JSON-over-HTTP adapter over App.
class Service {
 public:
  explicit Service(App& app);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds host:port (port 0 picks a free port). Returns the bound port or
  /// -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace labqg

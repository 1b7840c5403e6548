#include "labqg/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <map>
#include <set>

namespace labqg {

namespace {

const std::set<std::string, std::less<>> kBadRequest = {
    "FormatError",      "ValidationFailed",  "InvalidRepresentation", "TypeUnsupported",
    "PreconditionError", "EmptyAnswer",      "ConfigError",           "EmptyInput",
    "EmptyBatch"};
const std::set<std::string, std::less<>> kNotFound = {"NotFound", "EmptyStore"};
const std::set<std::string, std::less<>> kConflict = {"SessionClosed", "NoPendingPrompt",
                                                      "InvalidState", "EditConflict"};
const std::set<std::string, std::less<>> kBadGateway = {"GatewayError", "ExtractionUnparsable"};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, std::string_view code, std::string_view message) {
  send_json(res, http_status_for(code), error_body(code, message));
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("request body must be a JSON object");
  return j;
}

std::string required_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw FormatError(std::string("'") + key + "' is required and must be a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

template <class T, class Parse>
T required_enum(const json& body, const char* key, Parse parse) {
  auto it = body.find(key);
  std::optional<T> value;
  if (it != body.end() && it->is_string()) value = parse(it->get<std::string>());
  if (it != body.end() && it->is_number_integer() && std::string_view(key) == "level") {
    value = parse(std::to_string(it->get<int>()));
  }
  if (!value) throw FormatError(std::string("'") + key + "' is missing or not recognized");
  return *value;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, "FormatError", e.what());
    } catch (const std::exception& e) {
      send_error(res, "InternalError", e.what());
    }
  };
}

}  // namespace

int http_status_for(std::string_view error_code) {
  if (kBadRequest.contains(error_code)) return 400;
  if (kNotFound.contains(error_code)) return 404;
  if (kConflict.contains(error_code)) return 409;
  if (kBadGateway.contains(error_code)) return 502;
  return 500;
}

json error_body(std::string_view code, std::string_view message) {
  json inner = json::object();
  inner["code"] = std::string(code);
  inner["message"] = std::string(message);
  json j = json::object();
  j["error"] = std::move(inner);
  return j;
}

json openapi_document() {
  auto op = [](std::string summary, std::vector<int> statuses, bool has_body) {
    json o = json::object();
    o["summary"] = std::move(summary);
    if (has_body) {
      o["requestBody"] = {{"required", true},
                          {"content", {{"application/json", {{"schema", {{"type", "object"}}}}}}}};
    }
    json responses = json::object();
    for (int s : statuses) {
      const std::string key = std::to_string(s);
      if (s == 200) {
        responses[key] = {{"description", "OK"},
                          {"content", {{"application/json", {{"schema", {{"type", "object"}}}}}}}};
      } else {
        responses[key] = {{"description", "Error"},
                          {"content",
                           {{"application/json",
                             {{"schema", {{"$ref", "#/components/schemas/Error"}}}}}}}};
      }
    }
    o["responses"] = std::move(responses);
    return o;
  };
  auto id_param = [](const char* name) {
    return json::array({{{"name", name}, {"in", "path"}, {"required", true},
                         {"schema", {{"type", "string"}}}}});
  };

  json paths = json::object();
  paths["/sessions"]["post"] = op("Start a guided dialogue session", {200, 400, 409}, true);
  paths["/sessions/{id}"]["get"] = op("Read a session and its draft", {200, 404}, false);
  paths["/sessions/{id}"]["parameters"] = id_param("id");
  paths["/sessions/{id}/answers"]["post"] =
      op("Answer (or skip with {\"skip\": true}) the pending prompt", {200, 400, 404, 409}, true);
  paths["/sessions/{id}/answers"]["parameters"] = id_param("id");
  paths["/sessions/{id}/extract"]["post"] =
      op("Extract a draft representation from the transcript", {200, 400, 404, 409, 502}, true);
  paths["/sessions/{id}/extract"]["parameters"] = id_param("id");
  paths["/sims/{id}"]["put"] =
      op("Commit a session draft with teacher edits ({session_id, edits}) or store a "
         "representation ({representation})",
         {200, 400, 404, 409}, true);
  paths["/sims/{id}"]["get"] = op("Read a committed representation", {200, 404}, false);
  paths["/sims/{id}"]["parameters"] = id_param("id");
  paths["/sims/{id}/questions"]["post"] =
      op("Generate one question ({qtype, format, level, model})", {200, 400, 404, 502}, true);
  paths["/sims/{id}/questions"]["parameters"] = id_param("id");
  paths["/questions/{id}"]["get"] = op("Read a generated question record", {200, 404}, false);
  paths["/questions/{id}"]["parameters"] = id_param("id");
  paths["/questions/{id}/judge"]["post"] =
      op("Rate a question with the judge panel ({judges})", {200, 404, 409, 502}, true);
  paths["/questions/{id}/judge"]["parameters"] = id_param("id");
  paths["/runs/{id}/report"]["get"] =
      op("Benchmark report (?format=markdown|csv)", {200, 404}, false);
  paths["/runs/{id}/report"]["parameters"] = id_param("id");
  paths["/spec"]["get"] = op("This document", {200}, false);

  json doc = json::object();
  doc["openapi"] = "3.0.3";
  doc["info"] = {{"title", "labqg"}, {"version", "0.1.0"}};
  doc["paths"] = std::move(paths);
  doc["components"]["schemas"]["Error"] = {
      {"type", "object"},
      {"required", {"error"}},
      {"properties",
       {{"error",
         {{"type", "object"},
          {"required", {"code", "message"}},
          {"properties",
           {{"code", {{"type", "string"}}}, {"message", {{"type", "string"}}}}}}}}}};
  return doc;
}

struct Service::Impl {
  App& app;
  httplib::Server server;
  explicit Impl(App& a) : app(a) {}
};

Service::Service(App& app) : impl_(std::make_unique<Impl>(app)) {
  auto& server = impl_->server;
  App& a = impl_->app;

  double timeout = 30.0;
  for (const auto& m : a.config().models) timeout = std::max(timeout, m.timeout_seconds);
  for (const auto& m : a.config().judges) timeout = std::max(timeout, m.timeout_seconds);
  const auto seconds = static_cast<time_t>(timeout) + 10;
  server.set_read_timeout(seconds, 0);
  server.set_write_timeout(seconds, 0);

  server.Post("/sessions", guarded([&a](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                send_json(res, 200,
                          a.start_session(required_string(body, "sim_id"),
                                          optional_string(body, "title").value_or(""),
                                          optional_string(body, "session_id").value_or("")));
              }));
  server.Get(R"(/sessions/([^/]+))", guarded([&a](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, a.session_view(req.matches[1].str()));
             }));
  server.Post(R"(/sessions/([^/]+)/answers)", guarded([&a](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                std::optional<std::string> answer;
                if (!body.value("skip", false)) answer = required_string(body, "answer");
                send_json(res, 200, a.answer(req.matches[1].str(), answer));
              }));
  server.Post(R"(/sessions/([^/]+)/extract)", guarded([&a](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                send_json(res, 200, a.extract(req.matches[1].str(), optional_string(body, "model")));
              }));
  server.Put(R"(/sims/([^/]+))", guarded([&a](const httplib::Request& req, httplib::Response& res) {
               const auto body = body_of(req);
               const std::string sim_id = req.matches[1].str();
               if (body.contains("representation")) {
                 const auto s =
                     representation_from_json(body["representation"], ParseMode::lenient);
                 send_json(res, 200, a.put_representation(sim_id, s));
                 return;
               }
               std::vector<TeacherEdit> edits;
               if (auto it = body.find("edits"); it != body.end()) {
                 if (!it->is_array()) throw FormatError("'edits' must be an array");
                 for (const auto& e : *it) edits.push_back(edit_from_json(e));
               }
               send_json(res, 200, a.commit(sim_id, required_string(body, "session_id"), edits));
             }));
  server.Get(R"(/sims/([^/]+))", guarded([&a](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, a.get_sim(req.matches[1].str()));
             }));
  server.Post(R"(/sims/([^/]+)/questions)", guarded([&a](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                const auto doc = a.generate(
                    req.matches[1].str(),
                    required_enum<QuestionType>(body, "qtype", parse_question_type),
                    required_enum<QuestionFormat>(body, "format", parse_question_format),
                    required_enum<TelerLevel>(body, "level", parse_teler_level),
                    optional_string(body, "model"));
                if (doc["record"]["status"] == "transport_failed") {
                  json failure = error_body("GatewayError",
                                            doc["record"]["generation"]["error_detail"].get<std::string>());
                  failure["question"] = doc;
                  send_json(res, 502, failure);
                  return;
                }
                send_json(res, 200, doc);
              }));
  server.Get(R"(/questions/([^/]+))", guarded([&a](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, a.get_question(req.matches[1].str()));
             }));
  server.Post(R"(/questions/([^/]+)/judge)", guarded([&a](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                std::vector<std::string> judges;
                if (auto it = body.find("judges"); it != body.end()) {
                  judges = it->get<std::vector<std::string>>();
                }
                send_json(res, 200, a.judge_question(req.matches[1].str(), judges));
              }));
  server.Get(R"(/runs/([^/]+)/report)", guarded([&a](const httplib::Request& req, httplib::Response& res) {
               const auto format = req.has_param("format") ? req.get_param_value("format")
                                                           : std::string("markdown");
               if (format != "markdown" && format != "csv") {
                 throw FormatError("format must be markdown or csv");
               }
               const bool csv = format == "csv";
               res.status = 200;
               res.set_content(
                   a.run_report(req.matches[1].str(),
                                csv ? ReportFormat::csv : ReportFormat::markdown),
                   csv ? "text/csv" : "text/markdown");
             }));
  server.Get("/spec", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, openapi_document()); });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) send_error(res, "NotFound", "no such route");
    else if (res.status == 405) send_json(res, 405, error_body("MethodNotAllowed", "method not allowed"));
  });
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::serve() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace labqg

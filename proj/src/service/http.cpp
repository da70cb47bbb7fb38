#include <httplib.h>

#include "aqua/service.hpp"

namespace aqua::service {

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

// Empty bodies read as {} so POST /v1/sessions works without one.
std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    auto [line, col] = json_io::line_column(req.body, e.byte == 0 ? 0 : e.byte - 1);
    send(res, error_response(400, "malformed_json",
                             "malformed JSON at " + std::to_string(line) + ":" + std::to_string(col)));
    return std::nullopt;
  }
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

void install_routes(httplib::Server& server, AdvisorService& service) {
  server.Post("/v1/sessions", [&](const httplib::Request&, httplib::Response& res) {
    send(res, service.create_session());
  });
  server.Get(R"(/v1/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_session(req.matches[1]));
  });
  server.Put(R"(/v1/sessions/([^/]+)/conditions)", [&](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, service.set_conditions(req.matches[1], *body));
  });
  server.Post(R"(/v1/sessions/([^/]+)/residents)", [&](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, service.add_resident(req.matches[1], *body));
  });
  server.Delete(R"(/v1/sessions/([^/]+)/residents/([^/]+))",
                [&](const httplib::Request& req, httplib::Response& res) {
                  send(res, service.remove_resident(req.matches[1], req.matches[2]));
                });
  server.Get(R"(/v1/sessions/([^/]+)/suggestions)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_suggestions(req.matches[1], param(req, "threshold")));
  });
  server.Post(R"(/v1/sessions/([^/]+)/whatif)", [&](const httplib::Request& req, httplib::Response& res) {
    auto commit = param(req, "commit");
    if (commit && *commit != "true" && *commit != "false") {
      send(res, error_response(422, "invalid_commit", "commit must be true or false", "commit"));
      return;
    }
    if (auto body = parse_body(req, res)) send(res, service.whatif(req.matches[1], *body, commit == "true"));
  });
  server.Get(R"(/v1/sessions/([^/]+)/explanations)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_explanations(req.matches[1], param(req, "target")));
  });
  server.Get("/v1/species", [&](const httplib::Request&, httplib::Response& res) { send(res, service.list_species()); });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, error_response(500, "internal", what));
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty())
      send(res, error_response(404, "not_found", "no route for " + req.method + " " + req.path));
  });
}

}  // namespace aqua::service

#include "infobot/http_server.hpp"

#include <cstdlib>
#include <stdexcept>

#include <httplib.h>

namespace infobot {

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

void register_routes(httplib::Server& server, DialogueService& service) {
  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.create_session(req.body));
  });
  server.Post(R"(/sessions/([A-Za-z0-9]+)/utterance)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.utterance(req.matches[1], req.body));
  });
  server.Post(R"(/sessions/([A-Za-z0-9]+)/feedback)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.feedback(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([A-Za-z0-9]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_session(req.matches[1]));
  });
  server.Get("/agents", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.agents()); });
  server.Get("/healthz", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.health()); });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
  });
  server.set_payload_max_length(64 * 1024);
}

void run_server(DialogueService& service, std::string host, int port) {
  if (host.empty()) {
    const char* env = std::getenv("INFOBOT_BIND");
    host = env && *env ? env : "127.0.0.1";
  }
  if (port == 0) {
    const char* env = std::getenv("INFOBOT_PORT");
    port = env && *env ? std::atoi(env) : 8080;
  }
  if (port <= 0 || port > 65535) throw std::invalid_argument("invalid port");
  httplib::Server server;
  register_routes(server, service);
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace infobot

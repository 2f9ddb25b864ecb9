#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "infobot/http_server.hpp"

using namespace infobot;

namespace {

struct TestServer {
  const KbTable kb = generate_synthetic(KbSplitSpec{40, 4, 6, 0.2, 8});
  DialogueService service{ServiceConfig{}, TemplatePack::builtin()};
  httplib::Server server;
  std::thread thread;
  int port = 0;

  TestServer() {
    service.add_agent("rule-soft", std::make_shared<AgentModel>(AgentModel::create(AgentVariant::rule_soft, kb, {})));
    register_routes(server, service);
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
};

nlohmann::json body(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

}  // namespace

TEST_CASE("http endpoints") {
  TestServer ts;
  httplib::Client cli("127.0.0.1", ts.port);

  auto r = cli.Get("/healthz");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body(r) == nlohmann::json{{"status", "ok"}});
  CHECK(r->get_header_value("Content-Type") == "application/json");

  r = cli.Get("/agents");
  REQUIRE(r);
  CHECK(body(r).at("agents").size() == 1);

  r = cli.Post("/sessions", "{\"eval_mode\":true,\"seed\":3}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  const std::string id = body(r).at("session_id");
  CHECK(body(r).contains("target_card"));

  r = cli.Post("/sessions", "{oops", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);

  r = cli.Post("/sessions/" + id + "/utterance", nlohmann::json{{"text", std::string(3000, 'x')}}.dump(),
               "application/json");
  REQUIRE(r);
  CHECK(r->status == 413);

  bool done = false;
  for (int t = 0; t < 12 && !done; ++t) {
    r = cli.Post("/sessions/" + id + "/utterance", "{\"text\":\"i want a movie\"}", "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    done = body(r).at("done").get<bool>();
  }
  CHECK(done);
  CHECK(body(r).at("results").size() == 5);

  r = cli.Post("/sessions/" + id + "/utterance", "{\"text\":\"hi\"}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 409);

  r = cli.Post("/sessions/" + id + "/feedback", "{\"found\":true,\"rank\":1}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);

  r = cli.Get("/sessions/" + id);
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body(r).at("status") == "informed");
  CHECK(body(r).at("feedback").at("rank") == 1);

  r = cli.Get("/sessions/unknown1");
  REQUIRE(r);
  CHECK(r->status == 404);
}

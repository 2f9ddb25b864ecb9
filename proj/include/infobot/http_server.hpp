#pragma once

#include <string>

#include "infobot/service.hpp"

namespace httplib {
class Server;
}

namespace infobot {

// POST /sessions, POST /sessions/{id}/utterance, GET /sessions/{id},
// POST /sessions/{id}/feedback, GET /agents, GET /healthz
void register_routes(httplib::Server& server, DialogueService& service);

// Bind address and port default to INFOBOT_BIND / INFOBOT_PORT, then
// 127.0.0.1:8080. Blocks until the server stops.
void run_server(DialogueService& service, std::string host = {}, int port = 0);

}  // namespace infobot

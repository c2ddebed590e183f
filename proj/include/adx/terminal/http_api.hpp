#pragma once

#include <atomic>
#include <functional>

#include "adx/terminal/agent.hpp"

namespace httplib {
class Server;
}

namespace adx::terminal {

// The UI-facing REST API: sessions, patients, finding lookup, inbound SMS
// and a manual sync trigger.
void install_routes(httplib::Server& http, TerminalAgent& agent);

// Serves the API and runs the sync loop until stop becomes true.
void run_terminal(const TerminalConfig& config, std::atomic<bool>& stop,
                  std::function<void(int port)> on_listening = {});

}  // namespace adx::terminal

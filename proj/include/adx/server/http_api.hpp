#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "adx/server/server.hpp"
#include "adx/smslink/segment.hpp"

namespace httplib {
class Server;
}

namespace adx::server {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "server-data";
  std::filesystem::path kb_path;
  // SMS endpoint is off when empty.
  std::filesystem::path pad_dir;
  double eta = learner::kDefaultEta;
  // Required as "Authorization: Bearer <token>" on /api/v1 when set.
  std::string bearer_token;
  smslink::ChannelConfig sms;

  // Relative paths resolve against base_dir. Throws ConfigFileError.
  static ServerConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ServerConfig load(const std::filesystem::path& path);
};

class ConfigFileError : public Error {
 public:
  using Error::Error;
};

// Texts the server wants sent, held until a gateway collects them.
class OutboundQueue {
 public:
  void push(const std::string& text);
  std::vector<std::string> drain();

 private:
  std::mutex mu_;
  std::deque<std::string> texts_;
};

// Registers every /api/v1 route and /healthz on http.
void install_routes(httplib::Server& http, Server& server, OutboundQueue* outbound,
                    const std::string& bearer_token = {});

// Milliseconds on the steady clock, the time base for live SMS timers.
smslink::TimePoint steady_now();

// Runs until stop becomes true. Throws on bind failure.
void run_server(const ServerConfig& config, std::atomic<bool>& stop,
                std::function<void(int port)> on_listening = {});

}  // namespace adx::server

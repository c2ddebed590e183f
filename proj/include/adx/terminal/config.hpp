#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "adx/common/error.hpp"
#include "adx/engine/engine.hpp"
#include "adx/learner/model_params.hpp"
#include "adx/smslink/channel.hpp"
#include "adx/smslink/segment.hpp"

namespace adx::terminal {

class ConfigFileError : public Error {
 public:
  using Error::Error;
};

enum class SyncMode : std::uint8_t { automatic, http, sms };
std::string_view to_string(SyncMode m);

struct SmsSettings {
  // SMS is off when empty.
  std::filesystem::path pad_dir;
  smslink::ChannelConfig channel;
  smslink::ChannelFaults faults;
  // Base URL of the server's SMS webhook, used as the gateway by the CLI.
  std::string gateway_url;
};

struct TerminalConfig {
  std::filesystem::path kb_path;
  std::filesystem::path store_dir = "terminal-data";
  // HTTP sync is off when empty.
  std::string server_url;
  std::string bearer_token;
  std::string host = "127.0.0.1";
  int port = 8090;
  SyncMode mode = SyncMode::automatic;
  int sync_interval_ms = 5000;
  SmsSettings sms;
  engine::EngineConfig engine;
  double eta = learner::kDefaultEta;

  // Relative paths resolve against base_dir. Throws ConfigFileError.
  static TerminalConfig from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
  static TerminalConfig load(const std::filesystem::path& path);
};

}  // namespace adx::terminal

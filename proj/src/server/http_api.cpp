#include "adx/server/http_api.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace adx::server {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

// Maps the error variants to status codes.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const IntegrityConflictError& e) {
    send_error(res, 409, e.what());
  } catch (const VersionAheadError& e) {
    send_error(res, 409, e.what());
  } catch (const BadRequestError& e) {
    send_error(res, 400, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const learner::LearnerError& e) {
    send_error(res, 400, e.what());
  } catch (const smslink::DecodeError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

Uuid path_uuid(const httplib::Request& req) {
  auto id = Uuid::parse(req.matches[1].str());
  if (!id) throw BadRequestError("malformed id in path");
  return *id;
}

}  // namespace

void OutboundQueue::push(const std::string& text) {
  std::lock_guard lock(mu_);
  texts_.push_back(text);
}

std::vector<std::string> OutboundQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<std::string> out(texts_.begin(), texts_.end());
  texts_.clear();
  return out;
}

smslink::TimePoint steady_now() {
  return std::chrono::duration_cast<smslink::TimePoint>(
      std::chrono::steady_clock::now().time_since_epoch());
}

ServerConfig ServerConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    ServerConfig c;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("listen")) {
      // "host:port"
      const auto listen = j.at("listen").get<std::string>();
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw ConfigFileError("listen must be host:port");
      c.host = listen.substr(0, colon);
      c.port = std::stoi(listen.substr(colon + 1));
    }
    c.data_dir = resolve(j.value("data_dir", std::string("server-data")));
    c.kb_path = resolve(j.at("kb_path").get<std::string>());
    c.pad_dir = resolve(j.value("pad_dir", std::string()));
    c.eta = j.value("eta", c.eta);
    c.bearer_token = j.value("bearer_token", std::string());
    if (j.contains("sms")) {
      const auto& s = j.at("sms");
      c.sms.segment_capacity = s.value("segment_capacity", c.sms.segment_capacity);
      c.sms.ack_timeout = std::chrono::milliseconds(
          s.value("ack_timeout_ms", static_cast<std::int64_t>(c.sms.ack_timeout.count())));
      c.sms.max_retries = s.value("max_retries", c.sms.max_retries);
    }
    if (c.port < 0 || c.port > 65535) throw ConfigFileError("port out of range");
    if (!(c.eta > 0.0 && c.eta <= 1.0)) throw ConfigFileError("eta must be in (0, 1]");
    c.sms.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigFileError(std::string("server config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigFileError(std::string("server config: ") + e.what());
  }
}

ServerConfig ServerConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("cannot read config " + path.string());
  try {
    return from_json(json::parse(in), path.parent_path());
  } catch (const json::parse_error& e) {
    throw ConfigFileError(path.string() + ": " + e.what());
  }
}

void install_routes(httplib::Server& http, Server& server, OutboundQueue* outbound,
                    const std::string& bearer_token) {
  if (!bearer_token.empty()) {
    http.set_pre_routing_handler([bearer_token](const httplib::Request& req,
                                                httplib::Response& res) {
      if (req.path.rfind("/api/v1/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + bearer_token)
        return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, 401, "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  http.Get("/healthz", [&server](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200,
              json{{"status", "ok"},
                   {"params_version", server.params_version()},
                   {"sms", server.sms_status()}});
  });

  http.Post("/api/v1/encounters", [&server](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const EncounterRecord e = json::parse(req.body).get<EncounterRecord>();
      send_json(res, 200, json(server.ingest_encounter(e)));
    });
  });

  http.Get("/api/v1/encounters", [&server](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<Uuid> patient;
      if (req.has_param("patient")) {
        patient = Uuid::parse(req.get_param_value("patient"));
        if (!patient) throw BadRequestError("malformed patient id");
      }
      send_json(res, 200, json(server.list_encounters(patient)));
    });
  });

  http.Post("/api/v1/patients", [&server](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const PatientRecord p = json::parse(req.body).get<PatientRecord>();
      server.upsert_patient(p);
      send_json(res, 200, json(p));
    });
  });

  http.Get(R"(/api/v1/patients/([^/]+))",
           [&server](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               auto p = server.get_patient(path_uuid(req));
               if (!p) return send_error(res, 404, "no such patient");
               send_json(res, 200, json(*p));
             });
           });

  http.Get("/api/v1/params", [&server](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::int64_t since = 0;
      if (req.has_param("since")) {
        const auto text = req.get_param_value("since");
        std::size_t used = 0;
        try {
          since = std::stoll(text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != text.size()) throw BadRequestError("since must be an integer");
      }
      const auto shape = server.params()->shape;
      json out = json::array();
      for (const auto& d : server.params_since(since)) out.push_back(learner::delta_to_json(d, *shape));
      send_json(res, 200, out);
    });
  });

  http.Post("/api/v1/sms/inbound", [&server](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string text = req.body;
      if (!text.empty() && text.front() == '{') text = json::parse(text).at("text").get<std::string>();
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      server.on_sms_text(text, steady_now());
      send_json(res, 200, json{{"accepted", true}});
    });
  });

  if (outbound) {
    http.Get("/api/v1/sms/outbound", [outbound](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json(outbound->drain()));
    });
  }
}

void run_server(const ServerConfig& config, std::atomic<bool>& stop,
                std::function<void(int port)> on_listening) {
  auto kb = std::make_shared<const knowledge::KnowledgeBase>(
      knowledge::load_knowledge_base(config.kb_path));
  Server server(kb, config.data_dir, config.eta);
  OutboundQueue outbound;
  if (!config.pad_dir.empty()) {
    server.enable_sms(smslink::PadBook::open_dir(config.pad_dir, smslink::PadRole::server),
                      config.sms, [&outbound](const std::string& t) { outbound.push(t); });
  }

  httplib::Server http;
  install_routes(http, server, &outbound, config.bearer_token);

  int port = config.port;
  if (port == 0) {
    port = http.bind_to_any_port(config.host);
  } else if (!http.bind_to_port(config.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError("cannot listen on " + config.host + ":" + std::to_string(config.port));
  if (on_listening) on_listening(port);

  std::thread listener([&] { http.listen_after_bind(); });
  while (!stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.on_sms_timer(steady_now());
  }
  http.stop();
  listener.join();
}

}  // namespace adx::server

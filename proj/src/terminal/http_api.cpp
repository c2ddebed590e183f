#include "adx/terminal/http_api.hpp"

#include <chrono>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "adx/knowledge/builder.hpp"
#include "adx/server/http_api.hpp"

namespace adx::terminal {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const SessionFinishedError& e) {
    send_error(res, 409, e.what());
  } catch (const engine::AlreadyAnsweredError& e) {
    send_error(res, 409, e.what());
  } catch (const BadRequestError& e) {
    send_error(res, 400, e.what());
  } catch (const engine::EngineError& e) {
    send_error(res, 400, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

Uuid uuid_arg(const std::string& text, const char* what) {
  auto id = Uuid::parse(text);
  if (!id) throw BadRequestError(std::string("malformed ") + what);
  return *id;
}

json suggestion_json(const knowledge::KnowledgeBase& kb, const engine::DiagnosisSuggestion& s) {
  json ranked = json::array();
  int rank = 1;
  for (const auto& r : s.ranked) {
    const auto* d = kb.find_disease(r.disease_id);
    ranked.push_back({{"rank", rank++},
                      {"disease_id", r.disease_id},
                      {"name", d ? d->name : r.disease_id},
                      {"probability", r.probability}});
  }
  return json{{"ranked", ranked},
              {"recommended_tests", s.recommended_tests},
              {"prescriptions", s.prescriptions}};
}

json finding_json(const knowledge::FindingDef& f) {
  return json{{"finding_id", f.finding_id}, {"name", f.name}, {"kind", knowledge::to_string(f.kind)}};
}

// Patient body from the UI; the id is generated when absent.
PatientRecord patient_from_body(const json& body, std::optional<Uuid> id) {
  json j = body;
  if (id) j["patient_id"] = id->to_string();
  if (!j.contains("patient_id")) j["patient_id"] = Uuid::random().to_string();
  if (!j.contains("created_at")) j["created_at"] = now_utc();
  if (!j.contains("sex")) j["sex"] = "unspecified";
  if (!j.contains("weight_kg")) j["weight_kg"] = nullptr;
  if (!j.contains("height_cm")) j["height_cm"] = nullptr;
  return j.get<PatientRecord>();
}

}  // namespace

void install_routes(httplib::Server& http, TerminalAgent& agent) {
  http.Get("/healthz", [&agent](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200,
              json{{"status", "ok"},
                   {"params_version", agent.params_version()},
                   {"outbox", agent.store().sync_state().outbox.size()},
                   {"sms", agent.sms_status()}});
  });

  http.Post("/patients", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, 200, json(agent.upsert_patient(patient_from_body(json::parse(req.body), {}))));
    });
  });
  http.Get("/patients", [&agent](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, json(agent.list_patients())); });
  });
  http.Get(R"(/patients/([^/]+))", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto p = agent.get_patient(uuid_arg(req.matches[1], "patient id"));
      if (!p) throw NotFoundError("no such patient");
      send_json(res, 200, json(*p));
    });
  });
  http.Put(R"(/patients/([^/]+))", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Uuid id = uuid_arg(req.matches[1], "patient id");
      auto body = json::parse(req.body);
      if (auto old = agent.get_patient(id); old && !body.contains("created_at"))
        body["created_at"] = old->created_at;
      send_json(res, 200, json(agent.upsert_patient(patient_from_body(body, id))));
    });
  });
  http.Get(R"(/patients/([^/]+)/encounters)",
           [&agent](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               send_json(res, 200,
                         json(agent.list_encounters(uuid_arg(req.matches[1], "patient id"))));
             });
           });

  http.Get("/findings", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::size_t limit = 10;
      if (req.has_param("limit")) {
        const auto text = req.get_param_value("limit");
        if (text.empty() || text.size() > 6 || text.find_first_not_of("0123456789") != std::string::npos)
          throw BadRequestError("limit must be a positive integer");
        limit = std::stoul(text);
      }
      if (limit < 1) throw BadRequestError("limit must be at least 1");
      json out = json::array();
      for (const auto* f : agent.lookup(req.get_param_value("q"), limit)) out.push_back(finding_json(*f));
      send_json(res, 200, out);
    });
  });

  http.Post("/session/start", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const Uuid patient = uuid_arg(body.at("patient_id").get<std::string>(), "patient_id");
      send_json(res, 200, json(agent.start_session(patient, body.at("trigger").get<std::string>())));
    });
  });
  http.Get(R"(/session/([^/]+))", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, json(agent.session(uuid_arg(req.matches[1], "session id")))); });
  });
  http.Get(R"(/session/([^/]+)/next-question)",
           [&agent](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const auto next = agent.next_question(uuid_arg(req.matches[1], "session id"));
               json q = nullptr;
               if (next.question) {
                 const auto* f = agent.kb().find_finding(next.question->finding_id);
                 q = finding_json(*f);
                 q["information_gain"] = next.question->information_gain;
                 q["p_yes"] = next.question->p_yes;
               }
               send_json(res, 200, json{{"question", q}, {"stop_reason", next.stop_reason}});
             });
           });
  http.Post(R"(/session/([^/]+)/answer)",
            [&agent](const httplib::Request& req, httplib::Response& res) {
              guarded(res, [&] {
                const auto body = json::parse(req.body);
                auto answer = parse_answer(body.at("answer").get<std::string>());
                if (!answer) throw BadRequestError("answer must be yes, no or unknown");
                send_json(res, 200,
                          json(agent.answer(uuid_arg(req.matches[1], "session id"),
                                            body.at("finding_id").get<std::string>(), *answer)));
              });
            });
  http.Get(R"(/session/([^/]+)/suggestions)",
           [&agent](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               send_json(res, 200,
                         suggestion_json(agent.kb(),
                                         agent.suggestions(uuid_arg(req.matches[1], "session id"))));
             });
           });
  http.Post(R"(/session/([^/]+)/finish)",
            [&agent](const httplib::Request& req, httplib::Response& res) {
              guarded(res, [&] {
                const auto body = json::parse(req.body);
                FinishRequest fr;
                if (body.contains("accepted_rank") && !body["accepted_rank"].is_null())
                  fr.accepted_rank = body["accepted_rank"].get<int>();
                if (body.contains("diagnosis") && !body["diagnosis"].is_null())
                  fr.diagnosis = body["diagnosis"].get<std::string>();
                send_json(res, 200, json(agent.finish(uuid_arg(req.matches[1], "session id"), fr)));
              });
            });

  http.Post("/sms/inbound", [&agent](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string text = req.body;
      if (!text.empty() && text.front() == '{') text = json::parse(text).at("text").get<std::string>();
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      agent.on_sms_text(text, server::steady_now());
      send_json(res, 200, json{{"accepted", true}});
    });
  });
  http.Post("/sync", [&agent](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, json(agent.sync_once(server::steady_now()))); });
  });
}

void run_terminal(const TerminalConfig& config, std::atomic<bool>& stop,
                  std::function<void(int port)> on_listening) {
  TerminalAgent agent(config);

  // With a gateway URL, texts travel to the server's SMS webhook through a
  // fault-injecting channel, and replies are collected by polling.
  std::unique_ptr<smslink::SimulatedChannel> uplink;
  std::mutex uplink_mu;
  if (agent.sms_enabled() && !config.sms.gateway_url.empty()) {
    uplink = std::make_unique<smslink::SimulatedChannel>(config.sms.faults);
    agent.set_sms_emit([&](const std::string& text) {
      std::lock_guard lock(uplink_mu);
      uplink->send(text);
    });
  }

  httplib::Server http;
  install_routes(http, agent);
  int port = config.port;
  if (port == 0)
    port = http.bind_to_any_port(config.host);
  else if (!http.bind_to_port(config.host, port))
    port = -1;
  if (port < 0) throw IoError("cannot listen on " + config.host + ":" + std::to_string(config.port));
  if (on_listening) on_listening(port);
  std::thread listener([&] { http.listen_after_bind(); });

  auto last_sync = std::chrono::steady_clock::now() - std::chrono::hours(1);
  while (!stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    const auto now = server::steady_now();
    try {
      if (std::chrono::steady_clock::now() - last_sync >=
          std::chrono::milliseconds(config.sync_interval_ms)) {
        last_sync = std::chrono::steady_clock::now();
        const auto report = agent.sync_once(now);
        if (!report.error.empty()) std::cerr << "sync: " << report.error << "\n";
      }
      agent.on_sms_timer(now);
      if (uplink) {
        httplib::Client gw(config.sms.gateway_url);
        gw.set_connection_timeout(2);
        std::vector<std::string> out;
        {
          std::lock_guard lock(uplink_mu);
          out = uplink->drain();
        }
        for (const auto& t : out) gw.Post("/api/v1/sms/inbound", t, "text/plain");
        if (auto res = gw.Get("/api/v1/sms/outbound"); res && res->status == 200)
          for (const auto& t : nlohmann::json::parse(res->body)) agent.on_sms_text(t.get<std::string>(), now);
      }
    } catch (const std::exception& e) {
      std::cerr << "sync loop: " << e.what() << "\n";
    }
  }
  http.stop();
  listener.join();
}

}  // namespace adx::terminal

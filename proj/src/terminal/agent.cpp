#include "adx/terminal/agent.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <httplib.h>

#include "adx/knowledge/builder.hpp"
#include "adx/learner/learner.hpp"
#include "adx/server/server.hpp"
#include "adx/store/record_log.hpp"

namespace adx::terminal {

using nlohmann::json;

namespace {

constexpr std::size_t kSyncBatch = 1000;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

void to_json(json& j, const SessionView& v) {
  json answered = json::object();
  for (const auto& [id, a] : v.answered) answered[id] = to_string(a);
  j = json{{"session_id", v.session_id.to_string()},
           {"patient_id", v.patient_id.to_string()},
           {"trigger", v.trigger},
           {"answered", answered},
           {"questions_asked", v.questions_asked},
           {"params_version", v.params_version},
           {"finished", v.finished}};
}

void to_json(json& j, const SyncReport& r) {
  j = json{{"path", r.path},         {"uploaded", r.uploaded},
           {"acked", r.acked},       {"conflicts", r.conflicts},
           {"sms_messages", r.sms_messages}, {"params_version", r.params_version},
           {"error", r.error}};
}

TerminalAgent::TerminalAgent(TerminalConfig config)
    : TerminalAgent(std::make_shared<const knowledge::KnowledgeBase>(
                        knowledge::load_knowledge_base(config.kb_path)),
                    config) {}

TerminalAgent::TerminalAgent(std::shared_ptr<const knowledge::KnowledgeBase> kb,
                             TerminalConfig config)
    : config_(std::move(config)),
      kb_(std::move(kb)),
      store_(std::make_unique<store::LocalStore>(config_.store_dir)),
      codec_(kb_) {
  auto params = learner::ModelParams::from_knowledge_base(*kb_, config_.eta);
  delta_log_ = std::make_unique<store::RecordLog>(config_.store_dir / "params-deltas.log");
  for (const auto& rec : delta_log_->recovered()) {
    const auto delta = learner::delta_from_json(json::from_msgpack(rec.payload), *params.shape);
    params = learner::apply_param_delta(params, delta);
  }
  delta_log_->release_recovered();
  model_ = std::make_shared<const engine::ScoringModel>(
      std::make_shared<const learner::ModelParams>(std::move(params)));

  if (!config_.sms.pad_dir.empty()) {
    pads_ = std::make_unique<smslink::PadBook>(
        smslink::PadBook::open_dir(config_.sms.pad_dir, smslink::PadRole::terminal));
    delivery_log_ = std::make_unique<smslink::StoreDeliveryLog>(*store_);
    smslink::Transport::Callbacks cb;
    cb.emit = [this](const std::string& t) {
      if (emit_) emit_(t);
    };
    cb.deliver = [this](const MessageId&, std::span<const std::uint8_t> env) {
      on_sms_envelope(env);
    };
    cb.acked = [this](const MessageId& id) { on_sms_acked(id); };
    cb.dead_letter = [this](const smslink::DeadLetter& dl) { on_sms_dead_letter(dl); };
    transport_ = std::make_unique<smslink::Transport>(*pads_, config_.sms.channel, std::move(cb),
                                                      delivery_log_.get());
  }
}

TerminalAgent::~TerminalAgent() = default;

PatientRecord TerminalAgent::upsert_patient(const PatientRecord& p) {
  store_->upsert_patient(p);
  std::lock_guard lock(sync_mu_);
  patients_pushed_.erase(p.patient_id);
  return p;
}

std::optional<PatientRecord> TerminalAgent::get_patient(const Uuid& id) const {
  return store_->get_patient(id);
}

std::vector<PatientRecord> TerminalAgent::list_patients() const { return store_->list_patients(); }

std::vector<EncounterRecord> TerminalAgent::list_encounters(
    const std::optional<Uuid>& patient) const {
  return store_->list_encounters(patient);
}

std::vector<const knowledge::FindingDef*> TerminalAgent::lookup(std::string_view query,
                                                                std::size_t limit) const {
  return knowledge::lookup_finding(*kb_, query, limit);
}

TerminalAgent::Session& TerminalAgent::session_locked(const Uuid& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session " + id.to_string());
  return it->second;
}

const TerminalAgent::Session& TerminalAgent::session_locked(const Uuid& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session " + id.to_string());
  return it->second;
}

SessionView TerminalAgent::view_of(const Session& s) const {
  return {s.state.session_id, s.state.patient_ref, s.state.trigger,        s.state.answered,
          s.state.questions_asked, s.state.params_version, s.finished};
}

SessionView TerminalAgent::start_session(const Uuid& patient_id, const std::string& trigger) {
  if (!store_->get_patient(patient_id))
    throw NotFoundError("no patient " + patient_id.to_string());
  std::lock_guard lock(mu_);
  Session s{engine::start_session(*model_, patient_id, trigger), model_, false};
  const Uuid id = s.state.session_id;
  auto& stored = sessions_.emplace(id, std::move(s)).first->second;
  return view_of(stored);
}

SessionView TerminalAgent::session(const Uuid& session_id) const {
  std::lock_guard lock(mu_);
  return view_of(session_locked(session_id));
}

NextQuestion TerminalAgent::next_question(const Uuid& session_id) const {
  std::lock_guard lock(mu_);
  const Session& s = session_locked(session_id);
  if (s.finished) return {std::nullopt, "finished"};
  if (engine::should_stop(*s.model, s.state, config_.engine)) return {std::nullopt, "stop rule met"};
  auto pick = engine::select_next_question(*s.model, s.state, config_.engine);
  if (!pick) return {std::nullopt, "no informative question left"};
  for (const auto& c : engine::score_candidates(*s.model, s.state))
    if (c.finding_id == *pick) return {c, {}};
  return {engine::CandidateScore{*pick, 0.0, 0.0}, {}};
}

SessionView TerminalAgent::answer(const Uuid& session_id, const std::string& finding_id,
                                  Answer answer) {
  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  if (s.finished) throw SessionFinishedError("session already finished");
  s.state = engine::record_answer(*s.model, s.state, finding_id, answer);
  return view_of(s);
}

engine::DiagnosisSuggestion TerminalAgent::suggestions(const Uuid& session_id) const {
  std::lock_guard lock(mu_);
  const Session& s = session_locked(session_id);
  return engine::suggest(*kb_, *s.model, s.state, config_.engine);
}

ProviderDiagnosis TerminalAgent::resolve_diagnosis(const std::string& text) const {
  const std::string t = trim(text);
  if (t.empty()) throw BadRequestError("diagnosis text is empty");
  if (kb_->find_disease(t)) return ProviderDiagnosis::catalog(t);
  const std::string needle = lower(t);
  for (const auto& d : kb_->diseases())
    if (lower(d.name) == needle || lower(d.disease_id) == needle)
      return ProviderDiagnosis::catalog(d.disease_id);
  return ProviderDiagnosis::free_text(t);
}

EncounterRecord TerminalAgent::finish(const Uuid& session_id, const FinishRequest& request) {
  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  if (s.finished) throw SessionFinishedError("session already finished");
  if (request.accepted_rank.has_value() == request.diagnosis.has_value())
    throw BadRequestError("give exactly one of accepted_rank or diagnosis");

  const auto suggestion = engine::suggest(*kb_, *s.model, s.state, config_.engine);
  EncounterRecord e;
  e.encounter_id = Uuid::random();
  e.patient_id = s.state.patient_ref;
  e.started_at = now_utc();
  e.answers = s.state.answered;
  for (const auto& r : suggestion.ranked)
    e.suggestions_shown.push_back({r.disease_id, ShownSuggestion::to_basis_points(r.probability)});
  e.params_version = s.state.params_version;
  if (request.accepted_rank) {
    const int rank = *request.accepted_rank;
    if (rank < 1 || rank > static_cast<int>(e.suggestions_shown.size()))
      throw BadRequestError("accepted_rank out of range");
    e.accepted_suggestion_rank = rank;
    e.provider_diagnosis = ProviderDiagnosis::catalog(e.suggestions_shown[rank - 1].disease_id);
  } else {
    e.provider_diagnosis = resolve_diagnosis(*request.diagnosis);
  }
  e.validate();
  store_->append_encounter(e);
  s.finished = true;
  return e;
}

std::int64_t TerminalAgent::params_version() const {
  std::lock_guard lock(mu_);
  return model_->version();
}

std::shared_ptr<const learner::ModelParams> TerminalAgent::params() const {
  std::lock_guard lock(mu_);
  return model_->params_ptr();
}

void TerminalAgent::apply_delta_locked(const learner::ParamDelta& delta) {
  if (delta.version <= model_->version()) return;
  pending_deltas_.emplace(delta.version, delta);
  auto params = model_->params_ptr();
  learner::ModelParams next;
  bool advanced = false;
  while (!pending_deltas_.empty()) {
    auto it = pending_deltas_.begin();
    const auto& current = advanced ? next : *params;
    if (it->first <= current.version) {
      pending_deltas_.erase(it);
      continue;
    }
    if (it->first != current.version + 1) break;
    // Durable before visible, so a restart never rolls the model back.
    delta_log_->append(1, json::to_msgpack(learner::delta_to_json(it->second, *current.shape)));
    next = learner::apply_param_delta(current, it->second);
    advanced = true;
    pending_deltas_.erase(it);
  }
  if (!advanced) return;
  model_ = std::make_shared<const engine::ScoringModel>(
      std::make_shared<const learner::ModelParams>(std::move(next)));
  store_->set_last_params_version_seen(model_->version());
}

void TerminalAgent::apply_delta(const learner::ParamDelta& delta) {
  std::lock_guard lock(mu_);
  apply_delta_locked(delta);
}

bool TerminalAgent::sync_http(SyncReport& report) {
  httplib::Client cli(config_.server_url);
  cli.set_connection_timeout(2);
  cli.set_read_timeout(10);
  if (!config_.bearer_token.empty()) cli.set_bearer_token_auth(config_.bearer_token);

  std::vector<Uuid> acked;
  for (const auto& e : store_->drain_outbox(kSyncBatch)) {
    if (!patients_pushed_.contains(e.patient_id)) {
      if (auto p = store_->get_patient(e.patient_id)) {
        auto res = cli.Post("/api/v1/patients", json(*p).dump(), "application/json");
        if (!res) {
          report.error = "server unreachable: " + httplib::to_string(res.error());
          break;
        }
        if (res->status == 200) patients_pushed_[e.patient_id] = true;
      }
    }
    auto res = cli.Post("/api/v1/encounters", json(e).dump(), "application/json");
    if (!res) {
      report.error = "server unreachable: " + httplib::to_string(res.error());
      break;
    }
    ++report.uploaded;
    if (res->status == 200) {
      acked.push_back(e.encounter_id);
    } else if (res->status == 409) {
      // The server kept an earlier copy; retrying cannot change that.
      ++report.conflicts;
      acked.push_back(e.encounter_id);
    } else {
      report.error = "server rejected encounter " + e.encounter_id.to_string() + ": " + res->body;
    }
  }
  store_->mark_acked(acked);
  report.acked += acked.size();
  if (report.error.rfind("server unreachable", 0) == 0) {
    report.path = "none";
    return false;
  }

  const auto since = params_version();
  auto res = cli.Get("/api/v1/params?since=" + std::to_string(since));
  if (!res) {
    report.error = "server unreachable: " + httplib::to_string(res.error());
    return acked.size() > 0;
  }
  if (res->status == 200) {
    std::lock_guard lock(mu_);
    for (const auto& d : json::parse(res->body))
      apply_delta_locked(learner::delta_from_json(d, *model_->params().shape));
  } else {
    report.error = "params fetch failed: " + res->body;
  }
  report.path = "http";
  return true;
}

void TerminalAgent::sync_sms(smslink::TimePoint now, SyncReport& report) {
  std::lock_guard lock(sms_mu_);
  report.path = "sms";
  try {
    for (const auto& e : store_->drain_outbox(kSyncBatch)) {
      if (sms_msg_by_encounter_.contains(e.encounter_id)) continue;
      const auto id = transport_->send(codec_.encode(e), now);
      sms_msg_by_encounter_[e.encounter_id] = id;
      sms_encounter_by_msg_[id] = e.encounter_id;
      ++report.sms_messages;
      ++report.uploaded;
    }
    if (!sms_params_request_) {
      smslink::ParamsRequestPayload req{params_version()};
      sms_params_request_ = transport_->send(codec_.encode(req), now);
      ++report.sms_messages;
    }
  } catch (const smslink::PadExhaustedError& e) {
    report.error = e.what();
  }
}

SyncReport TerminalAgent::sync_once(smslink::TimePoint now) {
  std::lock_guard lock(sync_mu_);
  SyncReport report;
  bool done = false;
  if (config_.mode != SyncMode::sms && !config_.server_url.empty()) done = sync_http(report);
  if (!done && config_.mode != SyncMode::http && transport_) sync_sms(now, report);
  report.params_version = params_version();
  return report;
}

void TerminalAgent::set_sms_emit(Emit emit) {
  std::lock_guard lock(sms_mu_);
  emit_ = std::move(emit);
}

void TerminalAgent::on_sms_envelope(std::span<const std::uint8_t> envelope) {
  auto payload = codec_.decode(envelope);
  if (auto* d = std::get_if<learner::ParamDelta>(&payload)) {
    std::lock_guard lock(mu_);
    apply_delta_locked(*d);
    return;
  }
  throw BadRequestError("unexpected envelope kind for terminal");
}

void TerminalAgent::on_sms_acked(const MessageId& id) {
  if (sms_params_request_ && *sms_params_request_ == id) {
    sms_params_request_.reset();
    return;
  }
  auto it = sms_encounter_by_msg_.find(id);
  if (it == sms_encounter_by_msg_.end()) return;
  const Uuid enc = it->second;
  store_->mark_acked(std::span<const Uuid>(&enc, 1));
  sms_msg_by_encounter_.erase(enc);
  sms_encounter_by_msg_.erase(it);
}

void TerminalAgent::on_sms_dead_letter(const smslink::DeadLetter& dl) {
  if (sms_params_request_ && *sms_params_request_ == dl.msg_id) {
    sms_params_request_.reset();
    return;
  }
  // The record stays in the outbox and goes out again on the next sync.
  auto it = sms_encounter_by_msg_.find(dl.msg_id);
  if (it == sms_encounter_by_msg_.end()) return;
  sms_msg_by_encounter_.erase(it->second);
  sms_encounter_by_msg_.erase(it);
}

void TerminalAgent::on_sms_text(std::string_view text, smslink::TimePoint now) {
  std::lock_guard lock(sms_mu_);
  if (!transport_) throw BadRequestError("SMS is not configured");
  transport_->on_text(text, now);
}

void TerminalAgent::on_sms_timer(smslink::TimePoint now) {
  std::lock_guard lock(sms_mu_);
  if (transport_) transport_->on_timer(now);
}

std::optional<smslink::TimePoint> TerminalAgent::sms_next_deadline() const {
  std::lock_guard lock(sms_mu_);
  return transport_ ? transport_->next_deadline() : std::nullopt;
}

std::size_t TerminalAgent::sms_in_flight() const {
  std::lock_guard lock(sms_mu_);
  return transport_ ? transport_->in_flight() : 0;
}

smslink::TransportStats TerminalAgent::sms_stats() const {
  std::lock_guard lock(sms_mu_);
  return transport_ ? transport_->stats() : smslink::TransportStats{};
}

std::string TerminalAgent::sms_status() const {
  std::lock_guard lock(sms_mu_);
  if (!transport_) return "disabled";
  return transport_->halted_reason().empty() ? "ok" : transport_->halted_reason();
}

}  // namespace adx::terminal

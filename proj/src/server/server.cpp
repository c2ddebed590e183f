#include "adx/server/server.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace adx::server {

namespace {

std::string version_key(std::int64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%012lld", static_cast<long long>(v));
  return buf;
}

bool learnable(const EncounterRecord& e) {
  return e.provider_diagnosis.kind == ProviderDiagnosis::Kind::catalog && !e.answers.empty();
}

}  // namespace

std::string_view to_string(IngestStatus s) {
  return s == IngestStatus::stored ? "stored" : "duplicate";
}

void to_json(nlohmann::json& j, const IngestReceipt& r) {
  j = nlohmann::json{{"encounter_id", r.encounter_id.to_string()},
                     {"status", to_string(r.status)},
                     {"params_version_now", r.params_version_now}};
}

void from_json(const nlohmann::json& j, IngestReceipt& r) {
  auto id = Uuid::parse(j.at("encounter_id").get<std::string>());
  if (!id) throw BadRequestError("malformed encounter_id");
  r.encounter_id = *id;
  const auto status = j.at("status").get<std::string>();
  if (status == "stored")
    r.status = IngestStatus::stored;
  else if (status == "duplicate")
    r.status = IngestStatus::duplicate;
  else
    throw BadRequestError("unknown receipt status '" + status + "'");
  r.params_version_now = j.at("params_version_now").get<std::int64_t>();
}

Server::Server(std::shared_ptr<const knowledge::KnowledgeBase> kb, std::filesystem::path data_dir,
               double eta)
    : kb_(std::move(kb)), codec_(kb_), docs_(std::move(data_dir)) {
  auto params = learner::ModelParams::from_knowledge_base(*kb_, eta);

  // Replay the version history, then learn from any confirmed encounter
  // whose update did not make it to disk before a crash.
  std::set<std::string> learned;
  for (const auto& key : docs_.ids(kParamsHistory)) {
    const auto doc = nlohmann::json::parse(*docs_.get(kParamsHistory, key));
    auto delta = learner::delta_from_json(doc.at("delta"), *params.shape);
    params = learner::apply_param_delta(params, delta);
    deltas_.push_back(std::move(delta));
    learned.insert(doc.at("encounter_id").get<std::string>());
  }
  params_ = std::make_shared<const learner::ModelParams>(std::move(params));
  for (const auto& key : docs_.ids(kEncounters)) {
    if (learned.contains(key)) continue;
    EncounterRecord e = nlohmann::json::parse(*docs_.get(kEncounters, key));
    if (learnable(e)) learn_locked(e);
  }
}

Server::~Server() = default;

void Server::learn_locked(const EncounterRecord& e) {
  learner::ConfirmedEncounter confirmed{e.encounter_id, e.answers, e.provider_diagnosis.value};
  auto current = params();
  auto next = learner::update_from_encounter(*current, confirmed);
  auto delta = learner::diff_params(*current, next);
  nlohmann::json doc{{"version", delta.version},
                     {"encounter_id", e.encounter_id.to_string()},
                     {"delta", learner::delta_to_json(delta, *current->shape)}};
  docs_.put(kParamsHistory, version_key(delta.version), doc.dump());

  std::unique_lock lock(params_mu_);
  params_ = std::make_shared<const learner::ModelParams>(std::move(next));
  deltas_.push_back(std::move(delta));
}

IngestReceipt Server::ingest_encounter(const EncounterRecord& e) {
  e.validate();
  for (const auto& [id, answer] : e.answers)
    if (!kb_->finding_index(id)) throw BadRequestError("unknown finding '" + id + "'");
  if (e.provider_diagnosis.kind == ProviderDiagnosis::Kind::catalog &&
      !kb_->disease_index(e.provider_diagnosis.value))
    throw BadRequestError("unknown disease '" + e.provider_diagnosis.value + "'");

  const std::string key = e.encounter_id.to_string();
  const std::string doc = nlohmann::json(e).dump();

  std::lock_guard lock(writer_);
  if (auto existing = docs_.get(kEncounters, key)) {
    if (*existing != doc) throw IntegrityConflictError("encounter " + key + " conflicts with stored copy");
    return {e.encounter_id, IngestStatus::duplicate, params_version()};
  }
  docs_.put(kEncounters, key, doc);
  if (learnable(e)) learn_locked(e);
  return {e.encounter_id, IngestStatus::stored, params_version()};
}

std::optional<std::string> Server::encounter_document(const Uuid& id) const {
  return docs_.get(kEncounters, id.to_string());
}

std::optional<EncounterRecord> Server::get_encounter(const Uuid& id) const {
  auto doc = encounter_document(id);
  if (!doc) return std::nullopt;
  return nlohmann::json::parse(*doc).get<EncounterRecord>();
}

std::vector<EncounterRecord> Server::list_encounters(const std::optional<Uuid>& patient) const {
  std::vector<EncounterRecord> out;
  for (const auto& key : docs_.ids(kEncounters)) {
    EncounterRecord e = nlohmann::json::parse(*docs_.get(kEncounters, key));
    if (!patient || e.patient_id == *patient) out.push_back(std::move(e));
  }
  return out;
}

void Server::upsert_patient(const PatientRecord& p) {
  p.validate();
  std::lock_guard lock(writer_);
  docs_.put(kPatients, p.patient_id.to_string(), nlohmann::json(p).dump());
}

std::optional<PatientRecord> Server::get_patient(const Uuid& id) const {
  auto doc = docs_.get(kPatients, id.to_string());
  if (!doc) return std::nullopt;
  return nlohmann::json::parse(*doc).get<PatientRecord>();
}

std::int64_t Server::params_version() const {
  std::shared_lock lock(params_mu_);
  return params_->version;
}

std::shared_ptr<const learner::ModelParams> Server::params() const {
  std::shared_lock lock(params_mu_);
  return params_;
}

std::vector<learner::ParamDelta> Server::params_since(std::int64_t since) const {
  if (since < 0) throw BadRequestError("since must be >= 0");
  std::shared_lock lock(params_mu_);
  const std::int64_t current = params_->version;
  if (since > current)
    throw VersionAheadError("since=" + std::to_string(since) + " is ahead of server version " +
                            std::to_string(current));
  // Version numbers start at 0, so deltas_[i] carries version i + 1.
  return {deltas_.begin() + since, deltas_.end()};
}

void Server::enable_sms(smslink::PadBook pads, smslink::ChannelConfig config,
                        std::function<void(const std::string&)> emit) {
  std::lock_guard lock(sms_mu_);
  pads_ = std::make_unique<smslink::PadBook>(std::move(pads));
  delivery_log_ = std::make_unique<smslink::FileDeliveryLog>(docs_.dir() / "sms-delivered.log");
  smslink::Transport::Callbacks cb;
  cb.emit = std::move(emit);
  cb.deliver = [this](const MessageId&, std::span<const std::uint8_t> env) {
    on_sms_envelope(env);
  };
  transport_ = std::make_unique<smslink::Transport>(*pads_, config, std::move(cb),
                                                    delivery_log_.get());
}

void Server::on_sms_envelope(std::span<const std::uint8_t> envelope) {
  auto payload = codec_.decode(envelope);
  if (auto* e = std::get_if<EncounterRecord>(&payload)) {
    ingest_encounter(*e);
  } else if (auto* req = std::get_if<smslink::ParamsRequestPayload>(&payload)) {
    // Bounded so one request cannot drain the pad; the terminal asks again.
    const auto deltas = params_since(req->since_version);
    const std::size_t n = std::min(deltas.size(), kMaxSmsDeltasPerRequest);
    for (std::size_t i = 0; i < n; ++i) transport_->send(codec_.encode(deltas[i]), sms_now_);
  } else {
    throw BadRequestError("unexpected envelope kind for server");
  }
}

void Server::on_sms_text(std::string_view text, smslink::TimePoint now) {
  std::lock_guard lock(sms_mu_);
  if (!transport_) throw BadRequestError("SMS endpoint not enabled");
  sms_now_ = now;
  transport_->on_text(text, now);
}

void Server::on_sms_timer(smslink::TimePoint now) {
  std::lock_guard lock(sms_mu_);
  if (!transport_) return;
  sms_now_ = now;
  transport_->on_timer(now);
}

std::optional<smslink::TimePoint> Server::sms_next_deadline() const {
  std::lock_guard lock(sms_mu_);
  return transport_ ? transport_->next_deadline() : std::nullopt;
}

smslink::TransportStats Server::sms_stats() const {
  std::lock_guard lock(sms_mu_);
  return transport_ ? transport_->stats() : smslink::TransportStats{};
}

std::string Server::sms_status() const {
  std::lock_guard lock(sms_mu_);
  if (!transport_) return "disabled";
  return transport_->halted_reason().empty() ? "ok" : transport_->halted_reason();
}

}  // namespace adx::server

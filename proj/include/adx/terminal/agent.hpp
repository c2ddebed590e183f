#pragma once

// The terminal: diagnostic sessions over the local parameters, the local
// store, and the upload/parameter sync loop.
//
// Sync prefers HTTP when a server URL is configured and reachable, and falls
// back to the SMS transport otherwise (or uses only one, per sync mode).
// Encounters stay in the store's outbox until the server has acknowledged
// them on either path; the server deduplicates by encounter id, so a record
// that went out on both paths is still stored once.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adx/common/records.hpp"
#include "adx/engine/engine.hpp"
#include "adx/knowledge/knowledge_base.hpp"
#include "adx/smslink/codec.hpp"
#include "adx/smslink/transport.hpp"
#include "adx/store/local_store.hpp"
#include "adx/terminal/config.hpp"

namespace adx::terminal {

class AgentError : public Error {
 public:
  using Error::Error;
};
class NotFoundError : public AgentError {
 public:
  using AgentError::AgentError;
};
class BadRequestError : public AgentError {
 public:
  using AgentError::AgentError;
};
class SessionFinishedError : public AgentError {
 public:
  using AgentError::AgentError;
};

struct SessionView {
  Uuid session_id;
  Uuid patient_id;
  std::string trigger;
  std::map<std::string, Answer> answered;
  int questions_asked = 0;
  std::int64_t params_version = 0;
  bool finished = false;
};

struct NextQuestion {
  // Empty when the session should stop.
  std::optional<engine::CandidateScore> question;
  std::string stop_reason;
};

struct FinishRequest {
  // 1-based rank into the suggestions being shown.
  std::optional<int> accepted_rank;
  // Provider's diagnosis when no suggestion was accepted. Matched against
  // catalog disease ids and names; anything else is kept as free text.
  std::optional<std::string> diagnosis;
};

struct SyncReport {
  // "http", "sms" or "none".
  std::string path = "none";
  std::size_t uploaded = 0;
  std::size_t acked = 0;
  std::size_t conflicts = 0;
  std::size_t sms_messages = 0;
  std::int64_t params_version = 0;
  std::string error;
};

void to_json(nlohmann::json& j, const SessionView& v);
void to_json(nlohmann::json& j, const SyncReport& r);

class TerminalAgent {
 public:
  using Emit = std::function<void(const std::string& text)>;

  explicit TerminalAgent(TerminalConfig config);
  TerminalAgent(std::shared_ptr<const knowledge::KnowledgeBase> kb, TerminalConfig config);
  ~TerminalAgent();

  const knowledge::KnowledgeBase& kb() const { return *kb_; }
  const TerminalConfig& config() const { return config_; }
  store::LocalStore& store() { return *store_; }

  PatientRecord upsert_patient(const PatientRecord& p);
  std::optional<PatientRecord> get_patient(const Uuid& id) const;
  std::vector<PatientRecord> list_patients() const;
  std::vector<EncounterRecord> list_encounters(const std::optional<Uuid>& patient) const;
  std::vector<const knowledge::FindingDef*> lookup(std::string_view query, std::size_t limit) const;

  SessionView start_session(const Uuid& patient_id, const std::string& trigger);
  SessionView session(const Uuid& session_id) const;
  NextQuestion next_question(const Uuid& session_id) const;
  SessionView answer(const Uuid& session_id, const std::string& finding_id, Answer answer);
  engine::DiagnosisSuggestion suggestions(const Uuid& session_id) const;
  // Stores the encounter and queues it for upload. The session is closed.
  EncounterRecord finish(const Uuid& session_id, const FinishRequest& request);

  std::int64_t params_version() const;
  std::shared_ptr<const learner::ModelParams> params() const;
  // Applies a server delta. Stale ones are ignored; ones ahead of the next
  // version are held until the gap fills.
  void apply_delta(const learner::ParamDelta& delta);

  SyncReport sync_once(smslink::TimePoint now);

  // SMS plumbing; only meaningful when a pad directory is configured.
  bool sms_enabled() const { return transport_ != nullptr; }
  void set_sms_emit(Emit emit);
  void on_sms_text(std::string_view text, smslink::TimePoint now);
  void on_sms_timer(smslink::TimePoint now);
  std::optional<smslink::TimePoint> sms_next_deadline() const;
  std::size_t sms_in_flight() const;
  smslink::TransportStats sms_stats() const;
  std::string sms_status() const;

 private:
  struct Session {
    engine::SessionState state;
    std::shared_ptr<const engine::ScoringModel> model;
    bool finished = false;
  };

  Session& session_locked(const Uuid& id);
  const Session& session_locked(const Uuid& id) const;
  SessionView view_of(const Session& s) const;
  void apply_delta_locked(const learner::ParamDelta& delta);
  ProviderDiagnosis resolve_diagnosis(const std::string& text) const;

  bool sync_http(SyncReport& report);
  void sync_sms(smslink::TimePoint now, SyncReport& report);
  void on_sms_envelope(std::span<const std::uint8_t> envelope);
  void on_sms_acked(const MessageId& id);
  void on_sms_dead_letter(const smslink::DeadLetter& dl);

  TerminalConfig config_;
  std::shared_ptr<const knowledge::KnowledgeBase> kb_;
  std::unique_ptr<store::LocalStore> store_;
  smslink::EnvelopeCodec codec_;

  mutable std::mutex mu_;
  std::shared_ptr<const engine::ScoringModel> model_;
  // Applied deltas, appended as msgpack of their JSON form.
  std::unique_ptr<store::RecordLog> delta_log_;
  std::map<std::int64_t, learner::ParamDelta> pending_deltas_;
  std::map<Uuid, Session> sessions_;

  std::mutex sync_mu_;
  std::map<Uuid, bool> patients_pushed_;

  mutable std::mutex sms_mu_;
  Emit emit_;
  std::unique_ptr<smslink::PadBook> pads_;
  std::unique_ptr<smslink::StoreDeliveryLog> delivery_log_;
  std::unique_ptr<smslink::Transport> transport_;
  std::map<MessageId, Uuid> sms_encounter_by_msg_;
  std::map<Uuid, MessageId> sms_msg_by_encounter_;
  std::optional<MessageId> sms_params_request_;
};

}  // namespace adx::terminal

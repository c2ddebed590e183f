#pragma once

// Central service state: stored documents, the learned parameters and their
// version history, and the SMS endpoint.
//
// All writes (ingest, learning, patient upserts) go through one writer lock,
// so parameter versions are assigned strictly in ingestion order. Readers
// take a snapshot of the current parameters and never block on learning.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/common/records.hpp"
#include "adx/knowledge/knowledge_base.hpp"
#include "adx/learner/learner.hpp"
#include "adx/server/document_store.hpp"
#include "adx/smslink/codec.hpp"
#include "adx/smslink/transport.hpp"

namespace adx::server {

class BadRequestError : public Error {
 public:
  using Error::Error;
};
// Same encounter id arrived with different content; the stored copy stays.
class IntegrityConflictError : public Error {
 public:
  using Error::Error;
};
// A client asked for deltas after a version this server has not reached.
class VersionAheadError : public Error {
 public:
  using Error::Error;
};

enum class IngestStatus : std::uint8_t { stored, duplicate };
std::string_view to_string(IngestStatus s);

struct IngestReceipt {
  Uuid encounter_id;
  IngestStatus status = IngestStatus::stored;
  std::int64_t params_version_now = 0;
};
void to_json(nlohmann::json& j, const IngestReceipt& r);
void from_json(const nlohmann::json& j, IngestReceipt& r);

// Deltas returned for one SMS params request.
inline constexpr std::size_t kMaxSmsDeltasPerRequest = 16;

inline constexpr const char* kPatients = "patients";
inline constexpr const char* kEncounters = "encounters";
inline constexpr const char* kParamsHistory = "params_history";

class Server {
 public:
  Server(std::shared_ptr<const knowledge::KnowledgeBase> kb, std::filesystem::path data_dir,
         double eta = learner::kDefaultEta);
  ~Server();

  const knowledge::KnowledgeBase& kb() const { return *kb_; }
  std::shared_ptr<const knowledge::KnowledgeBase> kb_ptr() const { return kb_; }

  // Throws ValidationError or BadRequestError for malformed records and
  // IntegrityConflictError for a conflicting duplicate.
  IngestReceipt ingest_encounter(const EncounterRecord& encounter);
  std::optional<EncounterRecord> get_encounter(const Uuid& id) const;
  // The stored canonical document, byte for byte.
  std::optional<std::string> encounter_document(const Uuid& id) const;
  std::vector<EncounterRecord> list_encounters(const std::optional<Uuid>& patient) const;

  void upsert_patient(const PatientRecord& patient);
  std::optional<PatientRecord> get_patient(const Uuid& id) const;

  std::int64_t params_version() const;
  std::shared_ptr<const learner::ModelParams> params() const;
  // Deltas with version > since, ascending. Throws BadRequestError for
  // since < 0 and VersionAheadError for since > current.
  std::vector<learner::ParamDelta> params_since(std::int64_t since) const;

  // Starts the SMS endpoint. Outgoing texts are handed to emit.
  void enable_sms(smslink::PadBook pads, smslink::ChannelConfig config,
                  std::function<void(const std::string&)> emit);
  bool sms_enabled() const { return transport_ != nullptr; }
  void on_sms_text(std::string_view text, smslink::TimePoint now);
  void on_sms_timer(smslink::TimePoint now);
  std::optional<smslink::TimePoint> sms_next_deadline() const;
  smslink::TransportStats sms_stats() const;
  std::string sms_status() const;

 private:
  void learn_locked(const EncounterRecord& encounter);
  void on_sms_envelope(std::span<const std::uint8_t> envelope);

  std::shared_ptr<const knowledge::KnowledgeBase> kb_;
  smslink::EnvelopeCodec codec_;
  DocumentStore docs_;

  std::mutex writer_;
  mutable std::shared_mutex params_mu_;
  std::shared_ptr<const learner::ModelParams> params_;
  std::vector<learner::ParamDelta> deltas_;

  mutable std::mutex sms_mu_;
  std::unique_ptr<smslink::PadBook> pads_;
  std::unique_ptr<smslink::FileDeliveryLog> delivery_log_;
  std::unique_ptr<smslink::Transport> transport_;
  smslink::TimePoint sms_now_{};
};

}  // namespace adx::server

#pragma once

// Offline-first persistence on a terminal: patients, immutable encounter
// records and the sync outbox.
//
// On-disk layout under the store directory:
//   meta.json      {"format": "adx-local-store", "format_version": 1}
//   snapshot.bin   a single framed record holding the full state (optional)
//   log.bin        framed mutations applied after the snapshot
// Every mutation is appended to log.bin and synced before the call returns.
// Replaying a mutation twice has no further effect, so a crash between
// writing a snapshot and truncating the log is harmless.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "adx/common/message_id.hpp"
#include "adx/common/records.hpp"
#include "adx/store/record_log.hpp"

namespace adx::store {

class ForeignKeyError : public Error {
 public:
  using Error::Error;
};
class FormatError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kStoreFormatVersion = 1;

struct SyncState {
  std::vector<Uuid> outbox;
  std::set<Uuid> acked;
  std::int64_t last_params_version_seen = 0;
};

class LocalStore {
 public:
  struct Options {
    // Compact automatically once log.bin grows past this many bytes; 0 disables.
    std::uint64_t compact_threshold_bytes = 8u << 20;
  };

  explicit LocalStore(std::filesystem::path dir);
  LocalStore(std::filesystem::path dir, Options options);
  ~LocalStore();
  LocalStore(const LocalStore&) = delete;
  LocalStore& operator=(const LocalStore&) = delete;

  // Insert or overwrite by patient_id. Throws ValidationError.
  void upsert_patient(const PatientRecord& p);
  std::optional<PatientRecord> get_patient(const Uuid& id) const;
  std::vector<PatientRecord> list_patients() const;

  // Stores and enqueues the record for upload. Returns false (and changes
  // nothing) if encounter_id is already stored. Throws ForeignKeyError when
  // the patient is unknown.
  bool append_encounter(const EncounterRecord& e);
  std::optional<EncounterRecord> get_encounter(const Uuid& id) const;
  std::vector<EncounterRecord> list_encounters(std::optional<Uuid> patient = std::nullopt) const;

  // Up to `limit` oldest pending records; they stay queued until acked.
  std::vector<EncounterRecord> drain_outbox(std::size_t limit) const;
  // Moves ids from the outbox to the acked set; ids not pending are ignored.
  void mark_acked(std::span<const Uuid> ids);
  SyncState sync_state() const;
  void set_last_params_version_seen(std::int64_t version);

  // Delivery dedup for the SMS link. Returns true the first time an id is
  // recorded; the set survives restarts.
  bool record_delivery(const MessageId& id);
  bool was_delivered(const MessageId& id) const;

  // Writes snapshot.bin and truncates log.bin.
  void compact();

  const std::filesystem::path& dir() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adx::store

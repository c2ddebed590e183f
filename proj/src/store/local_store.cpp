#include "adx/store/local_store.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include <json.hpp>

namespace adx::store {

using nlohmann::json;

namespace {

enum RecordType : std::uint8_t {
  kPatient = 1,
  kEncounter = 2,
  kAck = 3,
  kParamsVersion = 4,
  kDelivery = 5,
  kSnapshot = 100,
};

std::vector<std::uint8_t> pack(const json& j) { return json::to_msgpack(j); }

json unpack(const std::vector<std::uint8_t>& bytes) {
  try {
    return json::from_msgpack(bytes);
  } catch (const json::exception& e) {
    throw FormatError(std::string("undecodable store record: ") + e.what());
  }
}

std::string message_key(const MessageId& id) { return to_hex(id); }

}  // namespace

struct LocalStore::Impl {
  std::filesystem::path dir;
  Options options;
  std::unique_ptr<RecordLog> log;
  mutable std::shared_mutex mu;

  std::map<Uuid, PatientRecord> patients;
  std::map<Uuid, EncounterRecord> encounters;
  std::vector<Uuid> encounter_order;
  std::vector<Uuid> outbox;
  std::set<Uuid> acked;
  std::int64_t params_version = 0;
  std::set<std::string> delivered;

  void apply(std::uint8_t type, const json& body) {
    switch (type) {
      case kPatient: {
        auto p = body.get<PatientRecord>();
        patients[p.patient_id] = std::move(p);
        break;
      }
      case kEncounter: {
        auto e = body.get<EncounterRecord>();
        if (encounters.contains(e.encounter_id)) break;
        const Uuid id = e.encounter_id;
        encounters.emplace(id, std::move(e));
        encounter_order.push_back(id);
        if (!acked.contains(id)) outbox.push_back(id);
        break;
      }
      case kAck: {
        for (const auto& text : body) {
          auto id = Uuid::parse(text.get<std::string>());
          if (!id) throw FormatError("malformed id in ack record");
          auto it = std::find(outbox.begin(), outbox.end(), *id);
          if (it == outbox.end()) continue;
          outbox.erase(it);
          acked.insert(*id);
        }
        break;
      }
      case kParamsVersion:
        params_version = std::max(params_version, body.get<std::int64_t>());
        break;
      case kDelivery:
        delivered.insert(body.get<std::string>());
        break;
      case kSnapshot:
        load_snapshot(body);
        break;
      default:
        throw FormatError("unknown store record type " + std::to_string(type));
    }
  }

  void load_snapshot(const json& s) {
    for (const auto& p : s.at("patients")) apply(kPatient, p);
    for (const auto& e : s.at("encounters")) {
      auto rec = e.get<EncounterRecord>();
      const Uuid id = rec.encounter_id;
      if (encounters.emplace(id, std::move(rec)).second) encounter_order.push_back(id);
    }
    outbox.clear();
    for (const auto& t : s.at("outbox")) outbox.push_back(*Uuid::parse(t.get<std::string>()));
    for (const auto& t : s.at("acked")) acked.insert(*Uuid::parse(t.get<std::string>()));
    params_version = s.at("params_version").get<std::int64_t>();
    for (const auto& t : s.at("delivered")) delivered.insert(t.get<std::string>());
  }

  json snapshot() const {
    json s;
    s["patients"] = json::array();
    for (const auto& [id, p] : patients) s["patients"].push_back(p);
    s["encounters"] = json::array();
    for (const auto& id : encounter_order) s["encounters"].push_back(encounters.at(id));
    s["outbox"] = json::array();
    for (const auto& id : outbox) s["outbox"].push_back(id.to_string());
    s["acked"] = json::array();
    for (const auto& id : acked) s["acked"].push_back(id.to_string());
    s["params_version"] = params_version;
    s["delivered"] = delivered;
    return s;
  }

  // Durable first, then visible.
  void commit(std::uint8_t type, const json& body) {
    log->append(type, pack(body));
    apply(type, body);
    if (options.compact_threshold_bytes && log->size_bytes() > options.compact_threshold_bytes)
      compact_locked();
  }

  void compact_locked() {
    const auto framed = frame_record(kSnapshot, pack(snapshot()));
    write_file_atomic(dir / "snapshot.bin", framed);
    log->reset();
  }
};

LocalStore::LocalStore(std::filesystem::path dir) : LocalStore(std::move(dir), Options{}) {}

LocalStore::LocalStore(std::filesystem::path dir, Options options)
    : impl_(std::make_unique<Impl>()) {
  impl_->dir = std::move(dir);
  impl_->options = options;
  std::filesystem::create_directories(impl_->dir);

  const auto meta_path = impl_->dir / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta;
    try {
      in >> meta;
    } catch (const json::exception&) {
      throw FormatError("unreadable " + meta_path.string());
    }
    if (meta.value("format", std::string()) != "adx-local-store")
      throw FormatError(meta_path.string() + " does not describe a local store");
    if (meta.value("format_version", 0) != kStoreFormatVersion)
      throw FormatError("unsupported store format version in " + meta_path.string());
  } else {
    const auto text = json{{"format", "adx-local-store"}, {"format_version", kStoreFormatVersion}}.dump() + "\n";
    write_file_atomic(meta_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  const auto snap = scan_log(impl_->dir / "snapshot.bin");
  if (!snap.records.empty()) impl_->apply(kSnapshot, unpack(snap.records.front().payload));

  impl_->log = std::make_unique<RecordLog>(impl_->dir / "log.bin");
  for (const auto& rec : impl_->log->recovered()) impl_->apply(rec.type, unpack(rec.payload));
  impl_->log->release_recovered();
}

LocalStore::~LocalStore() = default;

const std::filesystem::path& LocalStore::dir() const { return impl_->dir; }

void LocalStore::upsert_patient(const PatientRecord& p) {
  p.validate();
  std::unique_lock lock(impl_->mu);
  impl_->commit(kPatient, json(p));
}

std::optional<PatientRecord> LocalStore::get_patient(const Uuid& id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->patients.find(id);
  if (it == impl_->patients.end()) return std::nullopt;
  return it->second;
}

std::vector<PatientRecord> LocalStore::list_patients() const {
  std::shared_lock lock(impl_->mu);
  std::vector<PatientRecord> out;
  for (const auto& [id, p] : impl_->patients) out.push_back(p);
  return out;
}

bool LocalStore::append_encounter(const EncounterRecord& e) {
  e.validate();
  std::unique_lock lock(impl_->mu);
  if (impl_->encounters.contains(e.encounter_id)) return false;
  if (!impl_->patients.contains(e.patient_id))
    throw ForeignKeyError("unknown patient " + e.patient_id.to_string());
  impl_->commit(kEncounter, json(e));
  return true;
}

std::optional<EncounterRecord> LocalStore::get_encounter(const Uuid& id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->encounters.find(id);
  if (it == impl_->encounters.end()) return std::nullopt;
  return it->second;
}

std::vector<EncounterRecord> LocalStore::list_encounters(std::optional<Uuid> patient) const {
  std::shared_lock lock(impl_->mu);
  std::vector<EncounterRecord> out;
  for (const auto& id : impl_->encounter_order) {
    const auto& e = impl_->encounters.at(id);
    if (!patient || e.patient_id == *patient) out.push_back(e);
  }
  return out;
}

std::vector<EncounterRecord> LocalStore::drain_outbox(std::size_t limit) const {
  if (limit < 1) throw std::invalid_argument("drain limit must be >= 1");
  std::shared_lock lock(impl_->mu);
  std::vector<EncounterRecord> out;
  for (std::size_t i = 0; i < impl_->outbox.size() && out.size() < limit; ++i)
    out.push_back(impl_->encounters.at(impl_->outbox[i]));
  return out;
}

void LocalStore::mark_acked(std::span<const Uuid> ids) {
  std::unique_lock lock(impl_->mu);
  json body = json::array();
  for (const auto& id : ids) {
    if (std::find(impl_->outbox.begin(), impl_->outbox.end(), id) != impl_->outbox.end())
      body.push_back(id.to_string());
  }
  if (body.empty()) return;
  impl_->commit(kAck, body);
}

SyncState LocalStore::sync_state() const {
  std::shared_lock lock(impl_->mu);
  return SyncState{impl_->outbox, impl_->acked, impl_->params_version};
}

void LocalStore::set_last_params_version_seen(std::int64_t version) {
  std::unique_lock lock(impl_->mu);
  if (version <= impl_->params_version) return;
  impl_->commit(kParamsVersion, json(version));
}

bool LocalStore::record_delivery(const MessageId& id) {
  std::unique_lock lock(impl_->mu);
  const auto key = message_key(id);
  if (impl_->delivered.contains(key)) return false;
  impl_->commit(kDelivery, json(key));
  return true;
}

bool LocalStore::was_delivered(const MessageId& id) const {
  std::shared_lock lock(impl_->mu);
  return impl_->delivered.contains(message_key(id));
}

void LocalStore::compact() {
  std::unique_lock lock(impl_->mu);
  impl_->compact_locked();
}

}  // namespace adx::store

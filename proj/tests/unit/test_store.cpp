#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "adx/store/local_store.hpp"
#include "support/crash_harness.hpp"
#include "support/fixtures.hpp"

using namespace adx;
using namespace adx::store;
using adx::testing::TempDir;
using adx::testing::make_encounter;
using adx::testing::make_patient;

namespace {

std::vector<Uuid> ids_of(const std::vector<EncounterRecord>& es) {
  std::vector<Uuid> out;
  for (const auto& e : es) out.push_back(e.encounter_id);
  return out;
}

}  // namespace

TEST(RecordLog, AppendAndRecover) {
  TempDir dir;
  {
    RecordLog log(dir / "x.log");
    const std::vector<std::uint8_t> a{1, 2, 3}, b{};
    log.append(7, a);
    log.append(8, b);
  }
  RecordLog log(dir / "x.log");
  ASSERT_EQ(log.recovered().size(), 2u);
  EXPECT_EQ(log.recovered()[0].type, 7);
  EXPECT_EQ(log.recovered()[0].payload, (std::vector<std::uint8_t>{1, 2, 3}));
  EXPECT_TRUE(log.recovered()[1].payload.empty());
}

TEST(RecordLog, EveryTruncationRecoversAPrefix) {
  TempDir dir;
  const auto path = dir / "x.log";
  std::vector<std::vector<std::uint8_t>> payloads;
  {
    RecordLog log(path);
    for (int i = 0; i < 6; ++i) {
      payloads.emplace_back(static_cast<std::size_t>(i * 5 + 1), static_cast<std::uint8_t>(i));
      log.append(1, payloads.back());
    }
  }
  std::ifstream in(path, std::ios::binary);
  const std::string full((std::istreambuf_iterator<char>(in)), {});
  for (std::size_t cut = 0; cut <= full.size(); ++cut) {
    const auto p = dir / ("cut" + std::to_string(cut));
    std::ofstream(p, std::ios::binary).write(full.data(), static_cast<std::streamsize>(cut));
    const auto scan = scan_log(p);
    for (std::size_t i = 0; i < scan.records.size(); ++i) EXPECT_EQ(scan.records[i].payload, payloads[i]);
    RecordLog reopened(p);
    EXPECT_EQ(std::filesystem::file_size(p), scan.valid_bytes);
  }
}

TEST(RecordLog, CorruptedByteStopsScan) {
  TempDir dir;
  const auto path = dir / "x.log";
  {
    RecordLog log(path);
    const std::vector<std::uint8_t> a(20, 0xaa);
    log.append(1, a);
    log.append(1, a);
  }
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(kRecordHeaderSize + 20 + kRecordHeaderSize + 3);
    f.put('\x55');
  }
  EXPECT_EQ(scan_log(path).records.size(), 1u);
}

TEST(LocalStore, PatientRoundTripAndOverwrite) {
  TempDir dir;
  LocalStore s(dir.path());
  auto p = make_patient();
  s.upsert_patient(p);
  EXPECT_EQ(s.get_patient(p.patient_id), p);
  p.weight_kg = 70;
  s.upsert_patient(p);
  EXPECT_EQ(s.get_patient(p.patient_id)->weight_kg, 70);
  EXPECT_FALSE(s.get_patient(Uuid::random()).has_value());
}

TEST(LocalStore, EncounterAppendIsIdempotent) {
  TempDir dir;
  LocalStore s(dir.path());
  const auto p = make_patient();
  s.upsert_patient(p);
  const auto e = make_encounter(*adx::testing::clinic_kb(), p.patient_id, 5, 1);
  EXPECT_TRUE(s.append_encounter(e));
  EXPECT_FALSE(s.append_encounter(e));
  EXPECT_EQ(s.list_encounters(p.patient_id).size(), 1u);
  EXPECT_EQ(s.sync_state().outbox.size(), 1u);
  EXPECT_EQ(s.get_encounter(e.encounter_id), e);
}

TEST(LocalStore, ForeignKey) {
  TempDir dir;
  LocalStore s(dir.path());
  const auto e = make_encounter(*adx::testing::clinic_kb(), Uuid::random(), 5, 1);
  EXPECT_THROW(s.append_encounter(e), ForeignKeyError);
}

TEST(LocalStore, OutboxIsFifoAndAckable) {
  TempDir dir;
  LocalStore s(dir.path());
  const auto p = make_patient();
  s.upsert_patient(p);
  std::vector<EncounterRecord> es;
  for (int i = 0; i < 3; ++i) {
    es.push_back(make_encounter(*adx::testing::clinic_kb(), p.patient_id, 4, i));
    s.append_encounter(es.back());
  }
  EXPECT_EQ(ids_of(s.drain_outbox(2)), (std::vector<Uuid>{es[0].encounter_id, es[1].encounter_id}));
  const Uuid first = es[0].encounter_id;
  s.mark_acked(std::span<const Uuid>(&first, 1));
  s.mark_acked(std::span<const Uuid>(&first, 1));  // repeat is a no-op
  EXPECT_EQ(ids_of(s.drain_outbox(10)), (std::vector<Uuid>{es[1].encounter_id, es[2].encounter_id}));
  const auto st = s.sync_state();
  EXPECT_TRUE(st.acked.contains(first));
}

TEST(LocalStore, StateSurvivesReopenAndCompaction) {
  TempDir dir;
  const auto p = make_patient();
  std::vector<EncounterRecord> es;
  {
    LocalStore s(dir.path());
    s.upsert_patient(p);
    for (int i = 0; i < 5; ++i) {
      es.push_back(make_encounter(*adx::testing::clinic_kb(), p.patient_id, 4, i));
      s.append_encounter(es.back());
    }
    const Uuid id = es[2].encounter_id;
    s.mark_acked(std::span<const Uuid>(&id, 1));
    s.set_last_params_version_seen(7);
    MessageId m{1, 2, 3, 4, 5, 6, 7, 8};
    EXPECT_TRUE(s.record_delivery(m));
    EXPECT_FALSE(s.record_delivery(m));
  }
  for (int round = 0; round < 2; ++round) {
    LocalStore s(dir.path());
    EXPECT_EQ(s.list_encounters().size(), 5u);
    EXPECT_EQ(s.sync_state().outbox.size(), 4u);
    EXPECT_EQ(s.sync_state().last_params_version_seen, 7);
    EXPECT_TRUE(s.was_delivered(MessageId{1, 2, 3, 4, 5, 6, 7, 8}));
    EXPECT_EQ(s.get_encounter(es[4].encounter_id), es[4]);
    s.compact();
  }
}

TEST(LocalStore, RejectsForeignFormat) {
  TempDir dir;
  std::ofstream(dir / "meta.json") << R"({"format":"something-else","format_version":1})";
  EXPECT_THROW(LocalStore s(dir.path()), FormatError);
}

TEST(LocalStoreCrash, KillDuringAppendLosesNothingAcknowledged) {
  TempDir dir;
  std::size_t committed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = adx::testing::run_store_crash_trial(dir.path(), seed);
    EXPECT_TRUE(r.ok()) << "seed " << seed << ": lost " << r.lost << ", mismatched "
                        << r.mismatched << ", ack violations " << r.ack_violations << " "
                        << r.error;
    committed += r.committed;
  }
  EXPECT_GT(committed, 0u);
}

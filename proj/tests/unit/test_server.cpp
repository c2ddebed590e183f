#include <gtest/gtest.h>

#include <thread>

#include "adx/learner/learner.hpp"
#include "adx/server/server.hpp"
#include "adx/smslink/codec.hpp"
#include "adx/smslink/transport.hpp"
#include "support/fixtures.hpp"

using namespace adx;
using namespace adx::server;
namespace fx = adx::testing;
using fx::TempDir;
using namespace std::chrono_literals;

namespace {

learner::ConfirmedEncounter confirmed(const EncounterRecord& e) {
  return {e.encounter_id, e.answers, e.provider_diagnosis.value};
}

void expect_same_params(const learner::ModelParams& a, const learner::ModelParams& b) {
  EXPECT_EQ(a.version, b.version);
  EXPECT_EQ(a.priors, b.priors);
  EXPECT_EQ(a.cond, b.cond);
}

}  // namespace

TEST(Server, StoresThenReportsDuplicate) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  const auto p = fx::make_patient();
  s.upsert_patient(p);
  const auto e = fx::make_encounter(*kb, p.patient_id, 6, 1);
  const auto r1 = s.ingest_encounter(e);
  EXPECT_EQ(r1.status, IngestStatus::stored);
  EXPECT_EQ(r1.encounter_id, e.encounter_id);
  EXPECT_EQ(r1.params_version_now, 1);
  const auto r2 = s.ingest_encounter(e);
  EXPECT_EQ(r2.status, IngestStatus::duplicate);
  EXPECT_EQ(r2.params_version_now, 1);
  EXPECT_EQ(s.get_encounter(e.encounter_id), e);
  EXPECT_EQ(*s.get_patient(p.patient_id), p);
}

TEST(Server, ConflictingDuplicateKeepsOriginal) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  const auto p = fx::make_patient();
  auto e = fx::make_encounter(*kb, p.patient_id, 6, 2);
  s.ingest_encounter(e);
  const auto doc = *s.encounter_document(e.encounter_id);
  auto altered = e;
  altered.started_at += 1;
  EXPECT_THROW(s.ingest_encounter(altered), IntegrityConflictError);
  EXPECT_EQ(*s.encounter_document(e.encounter_id), doc);
  EXPECT_EQ(s.params_version(), 1);
}

TEST(Server, FreeTextDiagnosisIsStoredButNotLearned) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  auto e = fx::make_encounter(*kb, Uuid::random(), 4, 3);
  e.provider_diagnosis = ProviderDiagnosis::free_text("something rare");
  e.accepted_suggestion_rank.reset();
  EXPECT_EQ(s.ingest_encounter(e).status, IngestStatus::stored);
  EXPECT_EQ(s.params_version(), 0);
}

TEST(Server, RejectsUnknownCatalogIds) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  auto e = fx::make_encounter(*kb, Uuid::random(), 4, 4);
  e.answers["not_a_finding"] = Answer::yes;
  EXPECT_THROW(s.ingest_encounter(e), BadRequestError);
  auto e2 = fx::make_encounter(*kb, Uuid::random(), 4, 5);
  e2.provider_diagnosis = ProviderDiagnosis::catalog("d_unknown");
  e2.accepted_suggestion_rank.reset();
  EXPECT_THROW(s.ingest_encounter(e2), BadRequestError);
  EXPECT_TRUE(s.list_encounters(std::nullopt).empty());
}

TEST(Server, LearnsLikeTheReferenceUpdate) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path(), 0.1);
  auto expected = learner::ModelParams::from_knowledge_base(*kb, 0.1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto e = fx::make_encounter(*kb, Uuid::random(), 5, 100 + i);
    s.ingest_encounter(e);
    expected = learner::update_from_encounter(expected, confirmed(e));
  }
  expect_same_params(*s.params(), expected);
}

TEST(Server, DeltasReproduceParams) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  for (std::uint64_t i = 0; i < 12; ++i)
    s.ingest_encounter(fx::make_encounter(*kb, Uuid::random(), 5, 200 + i));
  ASSERT_EQ(s.params_version(), 12);

  auto p = learner::ModelParams::from_knowledge_base(*kb);
  for (const auto& d : s.params_since(0)) p = learner::apply_param_delta(p, d);
  expect_same_params(p, *s.params());

  const auto tail = s.params_since(9);
  ASSERT_EQ(tail.size(), 3u);
  EXPECT_EQ(tail.front().version, 10);
  EXPECT_TRUE(s.params_since(12).empty());
  EXPECT_THROW(s.params_since(-1), BadRequestError);
  EXPECT_THROW(s.params_since(13), VersionAheadError);
}

TEST(Server, RestartReplaysState) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  std::vector<std::string> docs;
  std::vector<Uuid> ids;
  learner::ModelParams before;
  {
    Server s(kb, dir.path());
    for (std::uint64_t i = 0; i < 8; ++i) {
      const auto e = fx::make_encounter(*kb, Uuid::random(), 5, 300 + i);
      s.ingest_encounter(e);
      ids.push_back(e.encounter_id);
      docs.push_back(*s.encounter_document(e.encounter_id));
    }
    before = *s.params();
  }
  Server s(kb, dir.path());
  expect_same_params(*s.params(), before);
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(*s.encounter_document(ids[i]), docs[i]);
  EXPECT_EQ(s.params_since(0).size(), 8u);
}

TEST(Server, ListsByPatient) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  const auto p1 = Uuid::random(), p2 = Uuid::random();
  s.ingest_encounter(fx::make_encounter(*kb, p1, 3, 1));
  s.ingest_encounter(fx::make_encounter(*kb, p2, 3, 2));
  s.ingest_encounter(fx::make_encounter(*kb, p1, 3, 3));
  EXPECT_EQ(s.list_encounters(p1).size(), 2u);
  EXPECT_EQ(s.list_encounters(p2).size(), 1u);
  EXPECT_EQ(s.list_encounters(std::nullopt).size(), 3u);
}

TEST(Server, ConcurrentIngestIsSerialised) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  Server s(kb, dir.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i)
        s.ingest_encounter(fx::make_encounter(*kb, Uuid::random(), 4, t * 1000 + i));
    });
  for (auto& th : threads) th.join();
  EXPECT_EQ(s.params_version(), 200);
  EXPECT_EQ(s.list_encounters(std::nullopt).size(), 200u);
  auto p = learner::ModelParams::from_knowledge_base(*kb);
  for (const auto& d : s.params_since(0)) p = learner::apply_param_delta(p, d);
  expect_same_params(p, *s.params());
}

TEST(Server, SmsIngestAndParamsRequest) {
  TempDir dir;
  auto kb = fx::clinic_kb();
  smslink::generate_pad_pair(dir / "pads", "k", 1 << 16);
  Server s(kb, dir / "server");
  std::vector<std::string> to_terminal;
  s.enable_sms(smslink::PadBook::open_dir(dir / "pads" / "server", smslink::PadRole::server), {},
               [&](const std::string& t) { to_terminal.push_back(t); });
  EXPECT_EQ(s.sms_status(), "ok");

  auto pads = smslink::PadBook::open_dir(dir / "pads" / "terminal", smslink::PadRole::terminal);
  smslink::EnvelopeCodec codec(kb);
  std::vector<std::string> to_server;
  std::vector<learner::ParamDelta> deltas;
  int acks = 0;
  smslink::Transport::Callbacks cb;
  cb.emit = [&](const std::string& t) { to_server.push_back(t); };
  cb.acked = [&](const MessageId&) { ++acks; };
  cb.deliver = [&](const MessageId&, std::span<const std::uint8_t> env) {
    deltas.push_back(std::get<learner::ParamDelta>(codec.decode(env)));
  };
  smslink::Transport t(pads, {}, cb);

  const auto e = fx::make_encounter(*kb, Uuid::random(), 6, 7);
  t.send(codec.encode(e), 0ms);
  t.send(codec.encode(smslink::ParamsRequestPayload{0}), 0ms);
  for (int round = 0; round < 3; ++round) {
    for (auto& txt : std::exchange(to_server, {})) s.on_sms_text(txt, 0ms);
    for (auto& txt : std::exchange(to_terminal, {})) t.on_text(txt, 0ms);
  }
  EXPECT_EQ(acks, 2);
  EXPECT_EQ(s.get_encounter(e.encounter_id), e);
  ASSERT_EQ(deltas.size(), 1u);
  EXPECT_EQ(deltas[0], s.params_since(0)[0]);
  EXPECT_EQ(s.sms_stats().delivered, 2u);
}

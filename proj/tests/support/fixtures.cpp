#include "support/fixtures.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>

namespace adx::testing {

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

knowledge::KnowledgeBase dense_kb(const std::vector<double>& priors,
                                  const std::vector<std::vector<double>>& cond) {
  std::vector<knowledge::FindingDef> findings;
  std::vector<knowledge::DiseaseDef> diseases;
  const std::size_t nf = cond.empty() ? 0 : cond.front().size();
  for (std::size_t f = 0; f < nf; ++f) {
    knowledge::FindingDef def;
    def.finding_id = "f" + std::to_string(f);
    def.name = "finding " + std::to_string(f);
    findings.push_back(def);
  }
  knowledge::AssociationMatrix matrix;
  for (std::size_t d = 0; d < priors.size(); ++d) {
    knowledge::DiseaseDef def;
    def.disease_id = "d" + std::to_string(d);
    def.name = "disease " + std::to_string(d);
    def.prior = priors[d];
    diseases.push_back(def);
    for (std::size_t f = 0; f < nf; ++f)
      matrix.entries[{def.disease_id, "f" + std::to_string(f)}] = cond[d][f];
  }
  return knowledge::KnowledgeBase(std::move(findings), std::move(diseases), std::move(matrix), 1,
                                  "test");
}

std::shared_ptr<const learner::ModelParams> params_of(const knowledge::KnowledgeBase& kb) {
  return std::make_shared<const learner::ModelParams>(
      learner::ModelParams::from_knowledge_base(kb));
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("ADX_TEST_DATA")) return env;
  return std::filesystem::path(ADX_SOURCE_DIR) / "data";
}

std::shared_ptr<const knowledge::KnowledgeBase> clinic_kb() {
  static auto kb = std::make_shared<const knowledge::KnowledgeBase>(
      knowledge::load_knowledge_base(data_dir() / "clinic_kb.json"));
  return kb;
}

std::shared_ptr<const knowledge::KnowledgeBase> sample_kb() {
  static auto kb = std::make_shared<const knowledge::KnowledgeBase>(
      knowledge::load_knowledge_base(data_dir() / "sample_kb.json"));
  return kb;
}

PatientRecord make_patient(int age) {
  PatientRecord p;
  p.patient_id = Uuid::random();
  p.age_years = age;
  p.sex = Sex::female;
  p.weight_kg = 61.5;
  p.created_at = 1'700'000'000;
  return p;
}

EncounterRecord make_encounter(const knowledge::KnowledgeBase& kb, const Uuid& patient,
                               std::size_t answers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncounterRecord e;
  e.encounter_id = Uuid::random();
  e.patient_id = patient;
  e.started_at = 1'700'000'000 + static_cast<Timestamp>(seed % 100000);
  std::vector<std::size_t> order(kb.findings().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < answers && i < order.size(); ++i)
    e.answers[kb.findings()[order[i]].finding_id] = static_cast<Answer>(rng() % 3);
  std::vector<std::size_t> ds(kb.diseases().size());
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = i;
  std::shuffle(ds.begin(), ds.end(), rng);
  std::uint16_t bp = 4000;
  for (std::size_t i = 0; i < 5 && i < ds.size(); ++i) {
    e.suggestions_shown.push_back({kb.diseases()[ds[i]].disease_id, bp});
    bp = static_cast<std::uint16_t>(bp / 2);
  }
  e.accepted_suggestion_rank = 1 + static_cast<int>(rng() % e.suggestions_shown.size());
  e.provider_diagnosis =
      ProviderDiagnosis::catalog(e.suggestions_shown[*e.accepted_suggestion_rank - 1].disease_id);
  e.params_version = static_cast<std::int64_t>(rng() % 50);
  return e;
}

}  // namespace adx::testing

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "adx/common/records.hpp"
#include "adx/knowledge/knowledge_base.hpp"
#include "adx/learner/model_params.hpp"

namespace adx::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "adx");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Dense little kb: diseases d0..d{D-1}, findings f0..f{F-1},
// cond[d][f] = P(f | d). Every cell is stored explicitly.
knowledge::KnowledgeBase dense_kb(const std::vector<double>& priors,
                                  const std::vector<std::vector<double>>& cond);

std::shared_ptr<const learner::ModelParams> params_of(const knowledge::KnowledgeBase& kb);

// Catalog-backed clinic kb from data/, or the synthetic 166x300 sample.
std::filesystem::path data_dir();
std::shared_ptr<const knowledge::KnowledgeBase> clinic_kb();
std::shared_ptr<const knowledge::KnowledgeBase> sample_kb();

PatientRecord make_patient(int age = 30);

// Encounter with `answers` drawn from the kb's findings in catalog order and
// a catalog diagnosis; valid for the given kb.
EncounterRecord make_encounter(const knowledge::KnowledgeBase& kb, const Uuid& patient,
                               std::size_t answers, std::uint64_t seed);

}  // namespace adx::testing

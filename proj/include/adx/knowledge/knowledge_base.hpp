#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adx/common/error.hpp"

namespace adx::knowledge {

// Stored conditional probabilities never reach 0 or 1, so one contradicted
// answer cannot zero out a disease.
inline constexpr double kProbEpsilon = 1e-6;

double clamp_probability(double p);

class KnowledgeError : public Error {
 public:
  using Error::Error;
};
class BuildError : public KnowledgeError {
 public:
  using KnowledgeError::KnowledgeError;
};
class SchemaError : public KnowledgeError {
 public:
  using KnowledgeError::KnowledgeError;
};
class DuplicateIdError : public KnowledgeError {
 public:
  using KnowledgeError::KnowledgeError;
};
class SimplexError : public KnowledgeError {
 public:
  using KnowledgeError::KnowledgeError;
};
class DanglingReferenceError : public KnowledgeError {
 public:
  using KnowledgeError::KnowledgeError;
};

enum class FindingKind : std::uint8_t { symptom, lab_test, demographic };

std::string_view to_string(FindingKind kind);
std::optional<FindingKind> parse_finding_kind(std::string_view text);

struct FindingDef {
  std::string finding_id;
  std::string name;
  FindingKind kind = FindingKind::symptom;
  std::vector<std::string> synonyms;
  double cost_hint = 1.0;

  friend bool operator==(const FindingDef&, const FindingDef&) = default;
};

struct DiseaseDef {
  std::string disease_id;
  std::string name;
  double prior = 0.0;
  std::vector<std::string> recommended_tests;
  std::vector<std::string> prescriptions;

  friend bool operator==(const DiseaseDef&, const DiseaseDef&) = default;
};

// Sparse P(finding present | disease); absent keys read as default_prob.
struct AssociationMatrix {
  // key: (disease_id, finding_id)
  std::map<std::pair<std::string, std::string>, double> entries;
  double default_prob = 0.5;

  double get(const std::string& disease_id, const std::string& finding_id) const;

  friend bool operator==(const AssociationMatrix&, const AssociationMatrix&) = default;
};

// Immutable once constructed; every invariant is checked by the constructor.
class KnowledgeBase {
 public:
  // Throws DuplicateIdError, SimplexError, DanglingReferenceError or SchemaError.
  KnowledgeBase(std::vector<FindingDef> findings, std::vector<DiseaseDef> diseases,
                AssociationMatrix matrix, std::int64_t version, std::string provenance);

  const std::vector<FindingDef>& findings() const { return findings_; }
  const std::vector<DiseaseDef>& diseases() const { return diseases_; }
  const AssociationMatrix& matrix() const { return matrix_; }
  std::int64_t version() const { return version_; }
  const std::string& provenance() const { return provenance_; }

  std::optional<std::size_t> finding_index(const std::string& id) const;
  std::optional<std::size_t> disease_index(const std::string& id) const;
  const FindingDef* find_finding(const std::string& id) const;
  const DiseaseDef* find_disease(const std::string& id) const;

  // P(finding | disease) by catalog index, after the matrix default is applied.
  double conditional(std::size_t disease, std::size_t finding) const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.findings_ == b.findings_ && a.diseases_ == b.diseases_ &&
           a.matrix_ == b.matrix_ && a.version_ == b.version_ &&
           a.provenance_ == b.provenance_;
  }

 private:
  std::vector<FindingDef> findings_;
  std::vector<DiseaseDef> diseases_;
  AssociationMatrix matrix_;
  std::int64_t version_;
  std::string provenance_;
  std::unordered_map<std::string, std::size_t> finding_index_;
  std::unordered_map<std::string, std::size_t> disease_index_;
};

nlohmann::json to_json(const KnowledgeBase& kb);

// Validates the document; errors name the offending field path.
KnowledgeBase knowledge_base_from_json(const nlohmann::json& doc);

// Parse failures are reported as SchemaError with line and column.
KnowledgeBase parse_knowledge_base(std::string_view text);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);
void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path);

}  // namespace adx::knowledge

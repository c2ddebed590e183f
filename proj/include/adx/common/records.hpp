#pragma once

// Records exchanged between the terminal, its local store, the SMS link and
// the central server. JSON forms mirror the fields one-to-one.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/common/error.hpp"
#include "adx/common/uuid.hpp"

namespace adx {

enum class Answer : std::uint8_t { yes = 0, no = 1, unknown = 2 };

std::string_view to_string(Answer a);
std::optional<Answer> parse_answer(std::string_view text);

enum class Sex : std::uint8_t { male = 0, female = 1, unspecified = 2 };

std::string_view to_string(Sex s);
std::optional<Sex> parse_sex(std::string_view text);

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

Timestamp now_utc();

class ValidationError : public Error {
 public:
  using Error::Error;
};

struct PatientRecord {
  Uuid patient_id;
  int age_years = 0;
  Sex sex = Sex::unspecified;
  std::optional<double> weight_kg;
  std::optional<double> height_cm;
  Timestamp created_at = 0;

  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

// A suggestion as it was shown to the provider. The probability is kept in
// basis points (1/10000) so the record is exactly representable on every
// wire format.
struct ShownSuggestion {
  std::string disease_id;
  std::uint16_t probability_bp = 0;

  double probability() const { return probability_bp / 10000.0; }
  static std::uint16_t to_basis_points(double p);

  friend bool operator==(const ShownSuggestion&, const ShownSuggestion&) = default;
};

struct ProviderDiagnosis {
  enum class Kind : std::uint8_t { catalog = 0, free_text = 1 };
  Kind kind = Kind::free_text;
  // disease_id when kind == catalog, otherwise the provider's own text.
  std::string value;

  static ProviderDiagnosis catalog(std::string disease_id) {
    return {Kind::catalog, std::move(disease_id)};
  }
  static ProviderDiagnosis free_text(std::string text) {
    return {Kind::free_text, std::move(text)};
  }

  friend bool operator==(const ProviderDiagnosis&, const ProviderDiagnosis&) = default;
};

struct EncounterRecord {
  Uuid encounter_id;
  Uuid patient_id;
  Timestamp started_at = 0;
  // Ordered by finding_id.
  std::map<std::string, Answer> answers;
  std::vector<ShownSuggestion> suggestions_shown;
  ProviderDiagnosis provider_diagnosis;
  // 1-based rank into suggestions_shown; empty when every suggestion was rejected.
  std::optional<int> accepted_suggestion_rank;
  std::int64_t params_version = 0;

  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const EncounterRecord&, const EncounterRecord&) = default;
};

void to_json(nlohmann::json& j, const PatientRecord& p);
void from_json(const nlohmann::json& j, PatientRecord& p);
void to_json(nlohmann::json& j, const EncounterRecord& e);
void from_json(const nlohmann::json& j, EncounterRecord& e);

}  // namespace adx

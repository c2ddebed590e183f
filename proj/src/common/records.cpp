#include "adx/common/records.hpp"

#include <chrono>
#include <cmath>

namespace adx {

using nlohmann::json;

std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::yes: return "yes";
    case Answer::no: return "no";
    case Answer::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Answer> parse_answer(std::string_view text) {
  if (text == "yes") return Answer::yes;
  if (text == "no") return Answer::no;
  if (text == "unknown") return Answer::unknown;
  return std::nullopt;
}

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::male: return "male";
    case Sex::female: return "female";
    case Sex::unspecified: return "unspecified";
  }
  return "unspecified";
}

std::optional<Sex> parse_sex(std::string_view text) {
  if (text == "male") return Sex::male;
  if (text == "female") return Sex::female;
  if (text == "unspecified" || text == "other") return Sex::unspecified;
  return std::nullopt;
}

Timestamp now_utc() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void PatientRecord::validate() const {
  if (patient_id.is_nil()) throw ValidationError("patient_id must not be nil");
  if (age_years < 0 || age_years > 150)
    throw ValidationError("age_years must be within [0, 150]");
  if (weight_kg && !(*weight_kg > 0.0)) throw ValidationError("weight_kg must be positive");
  if (height_cm && !(*height_cm > 0.0)) throw ValidationError("height_cm must be positive");
}

std::uint16_t ShownSuggestion::to_basis_points(double p) {
  if (!(p >= 0.0)) return 0;
  if (p >= 1.0) return 10000;
  return static_cast<std::uint16_t>(std::lround(p * 10000.0));
}

void EncounterRecord::validate() const {
  if (encounter_id.is_nil()) throw ValidationError("encounter_id must not be nil");
  if (patient_id.is_nil()) throw ValidationError("patient_id must not be nil");
  for (const auto& [id, answer] : answers) {
    (void)answer;
    if (id.empty()) throw ValidationError("empty finding_id in answers");
  }
  for (const auto& s : suggestions_shown) {
    if (s.disease_id.empty()) throw ValidationError("empty disease_id in suggestions_shown");
    if (s.probability_bp > 10000) throw ValidationError("suggestion probability above 1");
  }
  if (provider_diagnosis.value.empty())
    throw ValidationError("provider_diagnosis must not be empty");
  if (accepted_suggestion_rank) {
    const int rank = *accepted_suggestion_rank;
    if (rank < 1 || rank > 5 || rank > static_cast<int>(suggestions_shown.size()))
      throw ValidationError("accepted_suggestion_rank out of range of suggestions_shown");
    if (provider_diagnosis.kind != ProviderDiagnosis::Kind::catalog ||
        provider_diagnosis.value != suggestions_shown[rank - 1].disease_id)
      throw ValidationError("accepted suggestion does not match provider_diagnosis");
  }
}

namespace {

Uuid uuid_from_json(const json& j, const char* key) {
  const auto text = j.at(key).get<std::string>();
  auto id = Uuid::parse(text);
  if (!id) throw ValidationError(std::string("malformed UUID in '") + key + "'");
  return *id;
}

}  // namespace

void to_json(json& j, const PatientRecord& p) {
  j = json{{"patient_id", p.patient_id.to_string()},
           {"age_years", p.age_years},
           {"sex", to_string(p.sex)},
           {"weight_kg", p.weight_kg ? json(*p.weight_kg) : json(nullptr)},
           {"height_cm", p.height_cm ? json(*p.height_cm) : json(nullptr)},
           {"created_at", p.created_at}};
}

void from_json(const json& j, PatientRecord& p) {
  p.patient_id = uuid_from_json(j, "patient_id");
  p.age_years = j.at("age_years").get<int>();
  auto sex = parse_sex(j.value("sex", std::string("unspecified")));
  if (!sex) throw ValidationError("unknown sex value");
  p.sex = *sex;
  p.weight_kg.reset();
  p.height_cm.reset();
  if (j.contains("weight_kg") && !j["weight_kg"].is_null()) p.weight_kg = j["weight_kg"].get<double>();
  if (j.contains("height_cm") && !j["height_cm"].is_null()) p.height_cm = j["height_cm"].get<double>();
  p.created_at = j.value("created_at", Timestamp{0});
}

void to_json(json& j, const EncounterRecord& e) {
  json answers = json::object();
  for (const auto& [id, a] : e.answers) answers[id] = to_string(a);
  json shown = json::array();
  for (const auto& s : e.suggestions_shown)
    shown.push_back({{"disease_id", s.disease_id}, {"probability", s.probability()}});
  j = json{{"encounter_id", e.encounter_id.to_string()},
           {"patient_id", e.patient_id.to_string()},
           {"started_at", e.started_at},
           {"answers", answers},
           {"suggestions_shown", shown},
           {"provider_diagnosis",
            {{"kind", e.provider_diagnosis.kind == ProviderDiagnosis::Kind::catalog
                          ? "catalog"
                          : "free_text"},
             {"value", e.provider_diagnosis.value}}},
           {"accepted_suggestion_rank",
            e.accepted_suggestion_rank ? json(*e.accepted_suggestion_rank) : json(nullptr)},
           {"params_version", e.params_version}};
}

void from_json(const json& j, EncounterRecord& e) {
  e.encounter_id = uuid_from_json(j, "encounter_id");
  e.patient_id = uuid_from_json(j, "patient_id");
  e.started_at = j.at("started_at").get<Timestamp>();
  e.answers.clear();
  for (const auto& [id, value] : j.at("answers").items()) {
    auto a = parse_answer(value.get<std::string>());
    if (!a) throw ValidationError("unknown answer value for finding '" + id + "'");
    e.answers.emplace(id, *a);
  }
  e.suggestions_shown.clear();
  for (const auto& s : j.at("suggestions_shown")) {
    e.suggestions_shown.push_back(
        {s.at("disease_id").get<std::string>(),
         ShownSuggestion::to_basis_points(s.at("probability").get<double>())});
  }
  const auto& dx = j.at("provider_diagnosis");
  const auto kind = dx.at("kind").get<std::string>();
  if (kind == "catalog") {
    e.provider_diagnosis.kind = ProviderDiagnosis::Kind::catalog;
  } else if (kind == "free_text") {
    e.provider_diagnosis.kind = ProviderDiagnosis::Kind::free_text;
  } else {
    throw ValidationError("unknown provider_diagnosis kind '" + kind + "'");
  }
  e.provider_diagnosis.value = dx.at("value").get<std::string>();
  e.accepted_suggestion_rank.reset();
  if (j.contains("accepted_suggestion_rank") && !j["accepted_suggestion_rank"].is_null())
    e.accepted_suggestion_rank = j["accepted_suggestion_rank"].get<int>();
  e.params_version = j.value("params_version", std::int64_t{0});
}

}  // namespace adx

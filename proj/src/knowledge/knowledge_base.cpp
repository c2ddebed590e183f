#include "adx/knowledge/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace adx::knowledge {

using nlohmann::json;

double clamp_probability(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

std::string_view to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::symptom: return "symptom";
    case FindingKind::lab_test: return "lab_test";
    case FindingKind::demographic: return "demographic";
  }
  return "symptom";
}

std::optional<FindingKind> parse_finding_kind(std::string_view text) {
  if (text == "symptom") return FindingKind::symptom;
  if (text == "lab_test") return FindingKind::lab_test;
  if (text == "demographic") return FindingKind::demographic;
  return std::nullopt;
}

double AssociationMatrix::get(const std::string& disease_id,
                              const std::string& finding_id) const {
  auto it = entries.find({disease_id, finding_id});
  return it == entries.end() ? default_prob : it->second;
}

KnowledgeBase::KnowledgeBase(std::vector<FindingDef> findings,
                             std::vector<DiseaseDef> diseases, AssociationMatrix matrix,
                             std::int64_t version, std::string provenance)
    : findings_(std::move(findings)),
      diseases_(std::move(diseases)),
      matrix_(std::move(matrix)),
      version_(version),
      provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < findings_.size(); ++i) {
    const auto& f = findings_[i];
    const std::string where = "findings[" + std::to_string(i) + "]";
    if (f.finding_id.empty()) throw SchemaError(where + ".finding_id: empty");
    if (f.name.empty()) throw SchemaError(where + ".name: empty");
    if (!(f.cost_hint >= 0.0)) throw SchemaError(where + ".cost_hint: must be >= 0");
    if (!finding_index_.emplace(f.finding_id, i).second)
      throw DuplicateIdError(where + ".finding_id: duplicate id '" + f.finding_id + "'");
  }
  double prior_sum = 0.0;
  for (std::size_t i = 0; i < diseases_.size(); ++i) {
    const auto& d = diseases_[i];
    const std::string where = "diseases[" + std::to_string(i) + "]";
    if (d.disease_id.empty()) throw SchemaError(where + ".disease_id: empty");
    if (d.name.empty()) throw SchemaError(where + ".name: empty");
    if (!(d.prior >= 0.0 && d.prior <= 1.0))
      throw SimplexError(where + ".prior: outside [0, 1]");
    if (!disease_index_.emplace(d.disease_id, i).second)
      throw DuplicateIdError(where + ".disease_id: duplicate id '" + d.disease_id + "'");
    for (std::size_t t = 0; t < d.recommended_tests.size(); ++t) {
      if (!finding_index_.contains(d.recommended_tests[t]))
        throw DanglingReferenceError(where + ".recommended_tests[" + std::to_string(t) +
                                     "]: unknown finding '" + d.recommended_tests[t] + "'");
    }
    prior_sum += d.prior;
  }
  if (diseases_.empty()) throw SchemaError("diseases: catalog is empty");
  if (std::abs(prior_sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "diseases[*].prior: priors sum to " << prior_sum << ", expected 1";
    throw SimplexError(msg.str());
  }
  if (!(matrix_.default_prob > 0.0 && matrix_.default_prob < 1.0))
    throw SchemaError("default_prob: must be strictly inside (0, 1)");
  for (const auto& [key, p] : matrix_.entries) {
    if (!disease_index_.contains(key.first))
      throw DanglingReferenceError("matrix: unknown disease '" + key.first + "'");
    if (!finding_index_.contains(key.second))
      throw DanglingReferenceError("matrix: unknown finding '" + key.second + "'");
    if (!(p > 0.0 && p < 1.0))
      throw SchemaError("matrix[" + key.first + "," + key.second +
                        "].p: must be strictly inside (0, 1)");
  }
}

std::optional<std::size_t> KnowledgeBase::finding_index(const std::string& id) const {
  auto it = finding_index_.find(id);
  if (it == finding_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> KnowledgeBase::disease_index(const std::string& id) const {
  auto it = disease_index_.find(id);
  if (it == disease_index_.end()) return std::nullopt;
  return it->second;
}

const FindingDef* KnowledgeBase::find_finding(const std::string& id) const {
  auto idx = finding_index(id);
  return idx ? &findings_[*idx] : nullptr;
}

const DiseaseDef* KnowledgeBase::find_disease(const std::string& id) const {
  auto idx = disease_index(id);
  return idx ? &diseases_[*idx] : nullptr;
}

double KnowledgeBase::conditional(std::size_t disease, std::size_t finding) const {
  return matrix_.get(diseases_[disease].disease_id, findings_[finding].finding_id);
}

json to_json(const KnowledgeBase& kb) {
  json findings = json::array();
  for (const auto& f : kb.findings()) {
    findings.push_back({{"finding_id", f.finding_id},
                        {"name", f.name},
                        {"kind", to_string(f.kind)},
                        {"synonyms", f.synonyms},
                        {"cost_hint", f.cost_hint}});
  }
  json diseases = json::array();
  for (const auto& d : kb.diseases()) {
    diseases.push_back({{"disease_id", d.disease_id},
                        {"name", d.name},
                        {"prior", d.prior},
                        {"recommended_tests", d.recommended_tests},
                        {"prescriptions", d.prescriptions}});
  }
  json matrix = json::array();
  for (const auto& [key, p] : kb.matrix().entries)
    matrix.push_back({{"disease_id", key.first}, {"finding_id", key.second}, {"p", p}});
  return json{{"version", kb.version()},         {"findings", findings},
              {"diseases", diseases},            {"matrix", matrix},
              {"default_prob", kb.matrix().default_prob}, {"provenance", kb.provenance()}};
}

namespace {

// Fetches doc[key] with the field path in any error message.
const json& field(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where + ": expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(where + "." + key + ": missing");
  return *it;
}

template <typename T>
T typed(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": wrong type");
  }
}

std::vector<std::string> string_list(const json& obj, const std::string& key,
                                     const std::string& where) {
  if (!obj.contains(key)) return {};
  const auto& arr = obj.at(key);
  if (!arr.is_array()) throw SchemaError(where + "." + key + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(typed<std::string>(arr[i], where + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

KnowledgeBase knowledge_base_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("document: expected a JSON object");
  const auto version = typed<std::int64_t>(field(doc, "version", "document"), "version");

  std::vector<FindingDef> findings;
  const auto& fs = field(doc, "findings", "document");
  if (!fs.is_array()) throw SchemaError("findings: expected an array");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string where = "findings[" + std::to_string(i) + "]";
    FindingDef f;
    f.finding_id = typed<std::string>(field(fs[i], "finding_id", where), where + ".finding_id");
    f.name = typed<std::string>(field(fs[i], "name", where), where + ".name");
    if (fs[i].contains("kind")) {
      auto kind = parse_finding_kind(typed<std::string>(fs[i]["kind"], where + ".kind"));
      if (!kind) throw SchemaError(where + ".kind: unknown finding kind");
      f.kind = *kind;
    }
    f.synonyms = string_list(fs[i], "synonyms", where);
    if (fs[i].contains("cost_hint")) f.cost_hint = typed<double>(fs[i]["cost_hint"], where + ".cost_hint");
    findings.push_back(std::move(f));
  }

  std::vector<DiseaseDef> diseases;
  const auto& ds = field(doc, "diseases", "document");
  if (!ds.is_array()) throw SchemaError("diseases: expected an array");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string where = "diseases[" + std::to_string(i) + "]";
    DiseaseDef d;
    d.disease_id = typed<std::string>(field(ds[i], "disease_id", where), where + ".disease_id");
    d.name = typed<std::string>(field(ds[i], "name", where), where + ".name");
    d.prior = typed<double>(field(ds[i], "prior", where), where + ".prior");
    d.recommended_tests = string_list(ds[i], "recommended_tests", where);
    d.prescriptions = string_list(ds[i], "prescriptions", where);
    diseases.push_back(std::move(d));
  }

  AssociationMatrix matrix;
  matrix.default_prob = typed<double>(field(doc, "default_prob", "document"), "default_prob");
  const auto& ms = field(doc, "matrix", "document");
  if (!ms.is_array()) throw SchemaError("matrix: expected an array");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const std::string where = "matrix[" + std::to_string(i) + "]";
    auto d = typed<std::string>(field(ms[i], "disease_id", where), where + ".disease_id");
    auto f = typed<std::string>(field(ms[i], "finding_id", where), where + ".finding_id");
    const double p = typed<double>(field(ms[i], "p", where), where + ".p");
    if (!(p >= 0.0 && p <= 1.0)) throw SchemaError(where + ".p: outside [0, 1]");
    // Externally computed matrices may contain hard 0/1 values.
    if (!matrix.entries.emplace(std::pair{d, f}, clamp_probability(p)).second)
      throw DuplicateIdError(where + ": duplicate entry (" + d + ", " + f + ")");
  }
  std::string provenance;
  if (doc.contains("provenance")) provenance = typed<std::string>(doc["provenance"], "provenance");
  return KnowledgeBase(std::move(findings), std::move(diseases), std::move(matrix), version,
                       std::move(provenance));
}

KnowledgeBase parse_knowledge_base(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": malformed JSON");
  }
  return knowledge_base_from_json(doc);
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open knowledge base '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_knowledge_base(buf.str());
  } catch (const KnowledgeError& e) {
    // Keep the variant; prefix the file name.
    const std::string msg = path.string() + ": " + e.what();
    if (dynamic_cast<const SimplexError*>(&e)) throw SimplexError(msg);
    if (dynamic_cast<const DuplicateIdError*>(&e)) throw DuplicateIdError(msg);
    if (dynamic_cast<const DanglingReferenceError*>(&e)) throw DanglingReferenceError(msg);
    if (dynamic_cast<const BuildError*>(&e)) throw BuildError(msg);
    throw SchemaError(msg);
  }
}

void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << to_json(kb).dump(1) << '\n';
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace adx::knowledge

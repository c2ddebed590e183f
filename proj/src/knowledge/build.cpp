#include <cctype>

#include "adx/knowledge/builder.hpp"

namespace adx::knowledge {

using nlohmann::json;

namespace {

std::string normalise_term(std::string_view term) {
  std::string out;
  for (const auto& tok : tokenize(term)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace

Vocabulary Catalog::vocabulary() const {
  Vocabulary vocab;
  auto add = [&](std::string_view term, const std::string& id) {
    auto norm = normalise_term(term);
    if (!norm.empty()) vocab.emplace(std::move(norm), id);
  };
  for (const auto& f : findings) {
    add(f.name, f.finding_id);
    for (const auto& s : f.synonyms) add(s, f.finding_id);
  }
  for (const auto& d : diseases) {
    add(d.name, d.disease_id);
    if (auto it = disease_synonyms.find(d.disease_id); it != disease_synonyms.end())
      for (const auto& s : it->second) add(s, d.disease_id);
  }
  return vocab;
}

Catalog parse_catalog(const json& doc) {
  // Reuse the knowledge-base parser by filling in placeholder priors.
  json stub = doc;
  if (!stub.is_object()) throw SchemaError("vocabulary: expected a JSON object");
  stub["version"] = 0;
  stub["matrix"] = json::array();
  stub["default_prob"] = 0.5;
  if (!stub.contains("diseases") || !stub["diseases"].is_array() || stub["diseases"].empty())
    throw SchemaError("diseases: expected a nonempty array");
  const double uniform = 1.0 / static_cast<double>(stub["diseases"].size());
  Catalog catalog;
  for (auto& d : stub["diseases"]) {
    if (d.is_object() && d.contains("synonyms") && d.contains("disease_id")) {
      catalog.disease_synonyms[d["disease_id"].get<std::string>()] =
          d["synonyms"].get<std::vector<std::string>>();
    }
    d["prior"] = uniform;
  }
  // Fix up prior rounding so the stub passes the simplex check.
  double sum = 0.0;
  for (auto& d : stub["diseases"]) sum += d["prior"].get<double>();
  stub["diseases"][0]["prior"] = stub["diseases"][0]["prior"].get<double>() + (1.0 - sum);
  const auto kb = knowledge_base_from_json(stub);
  catalog.findings = kb.findings();
  catalog.diseases = kb.diseases();
  return catalog;
}

KnowledgeBase build_knowledge_base(const Catalog& catalog, std::string_view corpus_text,
                                   int window, double smoothing, std::int64_t version) {
  const auto tokens = tokenize(corpus_text);
  const auto counts = extract_cooccurrence(tokens, catalog.vocabulary(), window);
  std::vector<std::string> disease_ids, finding_ids;
  for (const auto& d : catalog.diseases) disease_ids.push_back(d.disease_id);
  for (const auto& f : catalog.findings) finding_ids.push_back(f.finding_id);
  auto model = derive_matrix(counts, disease_ids, finding_ids, smoothing);

  auto diseases = catalog.diseases;
  for (auto& d : diseases) d.prior = model.priors.at(d.disease_id);
  const std::string provenance = "co-occurrence build: " + std::to_string(tokens.size()) +
                                 " tokens, window " + std::to_string(window) +
                                 ", smoothing " + std::to_string(smoothing);
  return KnowledgeBase(catalog.findings, std::move(diseases), std::move(model.matrix), version,
                       provenance);
}

}  // namespace adx::knowledge

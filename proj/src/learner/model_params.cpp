#include "adx/learner/model_params.hpp"

#include <cmath>

namespace adx::learner {

ParamShape::ParamShape(std::vector<std::string> disease_ids, std::vector<std::string> finding_ids)
    : disease_ids_(std::move(disease_ids)), finding_ids_(std::move(finding_ids)) {
  for (std::size_t i = 0; i < disease_ids_.size(); ++i) disease_index_.emplace(disease_ids_[i], i);
  for (std::size_t i = 0; i < finding_ids_.size(); ++i) finding_index_.emplace(finding_ids_[i], i);
}

std::optional<std::size_t> ParamShape::disease_index(const std::string& id) const {
  auto it = disease_index_.find(id);
  if (it == disease_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ParamShape::finding_index(const std::string& id) const {
  auto it = finding_index_.find(id);
  if (it == finding_index_.end()) return std::nullopt;
  return it->second;
}

ModelParams ModelParams::from_knowledge_base(const knowledge::KnowledgeBase& kb, double eta) {
  std::vector<std::string> diseases, findings;
  for (const auto& d : kb.diseases()) diseases.push_back(d.disease_id);
  for (const auto& f : kb.findings()) findings.push_back(f.finding_id);

  ModelParams p;
  p.shape = std::make_shared<const ParamShape>(std::move(diseases), std::move(findings));
  p.eta = eta;
  p.version = 0;
  for (const auto& d : kb.diseases()) p.priors.push_back(d.prior);
  const std::size_t nd = p.diseases();
  p.cond.assign(p.findings() * nd, 0.0);
  for (std::size_t f = 0; f < p.findings(); ++f)
    for (std::size_t d = 0; d < nd; ++d)
      p.cond[f * nd + d] = knowledge::clamp_probability(kb.conditional(d, f));
  p.validate();
  return p;
}

void ModelParams::validate() const {
  if (!shape) throw InvariantError("params have no shape");
  if (priors.size() != diseases()) throw InvariantError("prior vector has wrong length");
  if (cond.size() != diseases() * findings()) throw InvariantError("cond matrix has wrong size");
  if (!(eta > 0.0 && eta < 1.0)) throw InvariantError("eta must be inside (0, 1)");
  double sum = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvariantError("prior outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvariantError("priors are not on the simplex");
  for (double c : cond) {
    if (!(c >= knowledge::kProbEpsilon && c <= 1.0 - knowledge::kProbEpsilon))
      throw InvariantError("conditional probability outside [eps, 1 - eps]");
  }
}

}  // namespace adx::learner

#include "adx/engine/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adx/kernels/kernels.hpp"

namespace adx::engine {

void EngineConfig::validate() const {
  if (max_questions < 1) throw ConfigError("max_questions must be >= 1");
  if (!(posterior_stop > 0.0 && posterior_stop <= 1.0))
    throw ConfigError("posterior_stop must be in (0, 1]");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(entropy_stop >= 0.0)) throw ConfigError("entropy_stop must be >= 0");
  if (!(min_ig >= 0.0)) throw ConfigError("min_ig must be >= 0");
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

ScoringModel::ScoringModel(std::shared_ptr<const learner::ModelParams> params)
    : params_(std::move(params)) {
  params_->validate();
  log_prior_.reserve(diseases());
  for (double p : params_->priors)
    log_prior_.push_back(p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity());
  const auto& cond = params_->cond;
  log_yes_.resize(cond.size());
  log_no_.resize(cond.size());
  answer_entropy_.resize(cond.size());
  for (std::size_t i = 0; i < cond.size(); ++i) {
    log_yes_[i] = std::log(cond[i]);
    log_no_[i] = std::log1p(-cond[i]);
    answer_entropy_[i] = binary_entropy(cond[i]);
  }
  findings_by_id_.resize(findings());
  std::iota(findings_by_id_.begin(), findings_by_id_.end(), std::size_t{0});
  const auto& ids = params_->shape->finding_ids();
  std::sort(findings_by_id_.begin(), findings_by_id_.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
}

std::size_t ScoringModel::require_finding(const std::string& id) const {
  auto f = params_->shape->finding_index(id);
  if (!f) throw UnknownFindingError("unknown finding '" + id + "'");
  return *f;
}

std::vector<double> posterior_of(const ScoringModel& model,
                                 const std::map<std::string, Answer>& answered) {
  std::vector<double> scores(model.log_prior().begin(), model.log_prior().end());
  // Map order makes the sum independent of the order answers arrived in.
  for (const auto& [id, answer] : answered) {
    const std::size_t f = model.require_finding(id);
    if (answer == Answer::yes) {
      kernels::add_to(scores, model.log_yes(f));
    } else if (answer == Answer::no) {
      kernels::add_to(scores, model.log_no(f));
    }
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  for (double& s : scores) s = std::exp(s - top);
  kernels::scale(scores, 1.0 / kernels::sum(scores));
  return scores;
}

SessionState start_session(const ScoringModel& model, const Uuid& patient_ref,
                           const std::string& trigger) {
  model.require_finding(trigger);
  SessionState s;
  s.session_id = Uuid::random();
  s.patient_ref = patient_ref;
  s.trigger = trigger;
  s.answered.emplace(trigger, Answer::yes);
  s.posterior = posterior_of(model, s.answered);
  s.questions_asked = 0;
  s.params_version = model.version();
  return s;
}

SessionState record_answer(const ScoringModel& model, const SessionState& state,
                           const std::string& finding_id, Answer answer) {
  model.require_finding(finding_id);
  if (state.answered.contains(finding_id))
    throw AlreadyAnsweredError("finding '" + finding_id + "' already answered");
  SessionState next = state;
  next.answered.emplace(finding_id, answer);
  next.history.push_back(finding_id);
  next.posterior = posterior_of(model, next.answered);
  ++next.questions_asked;
  return next;
}

namespace {

CandidateScore score_one(const ScoringModel& model, const std::vector<double>& posterior,
                         std::size_t f) {
  // IG = H(answer) - H(answer | disease), the two-branch entropy drop
  // rewritten as mutual information so it costs two dot products.
  const auto [p_yes, expected_h] = kernels::dot2(posterior, model.cond(f), model.answer_entropy(f));
  const double clamped_yes = std::clamp(p_yes, 0.0, 1.0);
  const double ig = std::max(0.0, binary_entropy(clamped_yes) - expected_h);
  return {model.params().shape->finding_ids()[f], ig, clamped_yes};
}

}  // namespace

double expected_information_gain(const ScoringModel& model, const SessionState& state,
                                 const std::string& candidate) {
  const std::size_t f = model.require_finding(candidate);
  if (state.answered.contains(candidate))
    throw AlreadyAnsweredError("finding '" + candidate + "' already answered");
  return score_one(model, state.posterior, f).information_gain;
}

std::vector<CandidateScore> score_candidates(const ScoringModel& model,
                                             const SessionState& state) {
  std::vector<CandidateScore> out;
  const auto& ids = model.params().shape->finding_ids();
  for (std::size_t f : model.findings_by_id()) {
    if (state.answered.contains(ids[f])) continue;
    out.push_back(score_one(model, state.posterior, f));
  }
  return out;
}

std::optional<std::string> select_next_question(const ScoringModel& model,
                                                const SessionState& state,
                                                const EngineConfig& config) {
  const CandidateScore* best = nullptr;
  const auto scores = score_candidates(model, state);
  // Candidates arrive in id order, so a full tie keeps the smaller id.
  for (const auto& c : scores) {
    if (!best || c.information_gain > best->information_gain + kIgTieTolerance) {
      best = &c;
    } else if (std::abs(c.information_gain - best->information_gain) <= kIgTieTolerance &&
               std::abs(c.p_yes - 0.5) < std::abs(best->p_yes - 0.5)) {
      best = &c;
    }
  }
  if (!best || best->information_gain < config.min_ig) return std::nullopt;
  return best->finding_id;
}

bool should_stop(const ScoringModel& model, const SessionState& state,
                 const EngineConfig& config) {
  if (state.questions_asked >= config.max_questions) return true;
  if (*std::max_element(state.posterior.begin(), state.posterior.end()) >= config.posterior_stop)
    return true;
  if (entropy(state.posterior) <= config.entropy_stop) return true;
  return !select_next_question(model, state, config).has_value();
}

DiagnosisSuggestion suggest(const knowledge::KnowledgeBase& kb, const ScoringModel& model,
                            const SessionState& state, const EngineConfig& config) {
  const auto& ids = model.params().shape->disease_ids();
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (state.posterior[a] != state.posterior[b])
                        return state.posterior[a] > state.posterior[b];
                      return ids[a] < ids[b];
                    });
  DiagnosisSuggestion out;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t d = order[i];
    out.ranked.push_back({ids[d], state.posterior[d]});
    if (const auto* def = kb.find_disease(ids[d])) {
      for (const auto& test : def->recommended_tests) {
        if (state.answered.contains(test)) continue;
        if (std::find(out.recommended_tests.begin(), out.recommended_tests.end(), test) ==
            out.recommended_tests.end())
          out.recommended_tests.push_back(test);
      }
      if (i == 0) out.prescriptions = def->prescriptions;
    }
  }
  return out;
}

}  // namespace adx::engine

#pragma once

// Adaptive diagnosis session: naive-Bayes posterior over diseases, next
// question by expected information gain, top-k suggestions.
//
// Sessions are immutable values. Every operation returns a new state and
// the scoring model is a read-only snapshot, so any number of sessions may
// share one model across threads.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adx/common/records.hpp"
#include "adx/common/uuid.hpp"
#include "adx/knowledge/knowledge_base.hpp"
#include "adx/learner/model_params.hpp"

namespace adx::engine {

class EngineError : public Error {
 public:
  using Error::Error;
};
class UnknownFindingError : public EngineError {
 public:
  using EngineError::EngineError;
};
class AlreadyAnsweredError : public EngineError {
 public:
  using EngineError::EngineError;
};
class ConfigError : public EngineError {
 public:
  using EngineError::EngineError;
};

struct EngineConfig {
  int max_questions = 10;
  double posterior_stop = 0.5;
  double entropy_stop = 0.5;
  int top_k = 5;
  double min_ig = 1e-6;

  void validate() const;
};

// IGs closer than this are considered tied.
inline constexpr double kIgTieTolerance = 1e-12;

// Log-domain caches derived once from a parameter snapshot.
class ScoringModel {
 public:
  explicit ScoringModel(std::shared_ptr<const learner::ModelParams> params);

  const learner::ModelParams& params() const { return *params_; }
  std::shared_ptr<const learner::ModelParams> params_ptr() const { return params_; }
  std::size_t diseases() const { return params_->diseases(); }
  std::size_t findings() const { return params_->findings(); }
  std::int64_t version() const { return params_->version; }

  std::span<const double> log_prior() const { return log_prior_; }
  std::span<const double> log_yes(std::size_t f) const { return column(log_yes_, f); }
  std::span<const double> log_no(std::size_t f) const { return column(log_no_, f); }
  std::span<const double> cond(std::size_t f) const { return params_->finding_column(f); }
  // Binary entropy (bits) of P(f | d) for each disease d.
  std::span<const double> answer_entropy(std::size_t f) const { return column(answer_entropy_, f); }
  // Finding indices sorted by finding_id.
  std::span<const std::size_t> findings_by_id() const { return findings_by_id_; }

  std::size_t require_finding(const std::string& id) const;

 private:
  std::span<const double> column(const std::vector<double>& m, std::size_t f) const {
    return {m.data() + f * diseases(), diseases()};
  }

  std::shared_ptr<const learner::ModelParams> params_;
  std::vector<double> log_prior_;
  std::vector<double> log_yes_;
  std::vector<double> log_no_;
  std::vector<double> answer_entropy_;
  std::vector<std::size_t> findings_by_id_;
};

struct SessionState {
  Uuid session_id;
  Uuid patient_ref;
  std::string trigger;
  std::map<std::string, Answer> answered;
  // Findings recorded through record_answer, in the order asked.
  std::vector<std::string> history;
  // Indexed like the model's disease catalog.
  std::vector<double> posterior;
  int questions_asked = 0;
  std::int64_t params_version = 0;
};

struct RankedDisease {
  std::string disease_id;
  double probability = 0.0;
  friend bool operator==(const RankedDisease&, const RankedDisease&) = default;
};

struct DiagnosisSuggestion {
  std::vector<RankedDisease> ranked;
  std::vector<std::string> recommended_tests;
  std::vector<std::string> prescriptions;
  friend bool operator==(const DiagnosisSuggestion&, const DiagnosisSuggestion&) = default;
};

struct CandidateScore {
  std::string finding_id;
  double information_gain = 0.0;
  double p_yes = 0.0;
};

// Binary-outcome entropy in bits, h(p) = -p log2 p - (1-p) log2 (1-p).
double binary_entropy(double p);

// H = -sum p_i log2 p_i with 0 log 0 = 0.
double entropy(std::span<const double> p);

// p(d) proportional to prior(d) * prod_yes P(s|d) * prod_no (1 - P(s|d));
// unknown answers contribute nothing. Throws UnknownFindingError.
std::vector<double> posterior_of(const ScoringModel& model,
                                 const std::map<std::string, Answer>& answered);

SessionState start_session(const ScoringModel& model, const Uuid& patient_ref,
                           const std::string& trigger);

// Throws AlreadyAnsweredError for a finding already in the session.
SessionState record_answer(const ScoringModel& model, const SessionState& state,
                           const std::string& finding_id, Answer answer);

// Expected entropy reduction from asking `candidate`. Throws
// AlreadyAnsweredError / UnknownFindingError.
double expected_information_gain(const ScoringModel& model, const SessionState& state,
                                 const std::string& candidate);

// IG and P(yes) for every unanswered finding, in finding_id order.
std::vector<CandidateScore> score_candidates(const ScoringModel& model,
                                             const SessionState& state);

// Highest IG; near-ties go to the more balanced split (P(yes) nearest 0.5),
// then to the smaller finding_id. Empty when nothing reaches min_ig.
std::optional<std::string> select_next_question(const ScoringModel& model,
                                                const SessionState& state,
                                                const EngineConfig& config);

bool should_stop(const ScoringModel& model, const SessionState& state,
                 const EngineConfig& config);

DiagnosisSuggestion suggest(const knowledge::KnowledgeBase& kb, const ScoringModel& model,
                            const SessionState& state, const EngineConfig& config);

}  // namespace adx::engine

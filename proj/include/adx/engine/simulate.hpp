#pragma once

// Synthetic-patient evaluation of the question-selection policies.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/engine/engine.hpp"

namespace adx::engine {

enum class Policy { max_ig, balanced_split, random };

std::string_view to_string(Policy p);
std::optional<Policy> parse_policy(std::string_view text);

struct SimOptions {
  Policy policy = Policy::max_ig;
  int trials = 100;
  int budget = 10;
  double noise = 0.0;
  std::uint64_t seed = 1;
  // Sessions run to the budget unless these are tightened.
  double posterior_stop = 1.0;
  double entropy_stop = 0.0;
  double min_ig = 1e-6;
  int top_k = 5;

  void validate() const;
};

struct SimReport {
  int trials = 0;
  Policy policy = Policy::max_ig;
  int question_budget = 0;
  double top1_acc = 0.0;
  double top5_acc = 0.0;
  double mean_questions = 0.0;
  std::uint64_t seed = 0;
  // Rank (1-based) of the true disease among the suggestions, or 0 when it
  // was not suggested. One entry per trial.
  std::vector<int> ranks;

  // "1".."k" and "rejected" -> count.
  std::map<std::string, int> rank_histogram() const;
};

// One synthetic patient: the true disease and an answer for every finding.
struct SyntheticPatient {
  std::size_t disease = 0;
  std::vector<Answer> answers;
  std::size_t trigger = 0;
};

// Draw depends only on (seed, trial), so policies compared under the same
// seed see the same patients.
SyntheticPatient draw_patient(const ScoringModel& model, double noise, std::uint64_t seed,
                              int trial);

SimReport simulate(const knowledge::KnowledgeBase& kb, const ScoringModel& model,
                   const SimOptions& options);

nlohmann::json to_json(const SimReport& report);

}  // namespace adx::engine

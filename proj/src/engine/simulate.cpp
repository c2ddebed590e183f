#include "adx/engine/simulate.hpp"

#include <algorithm>
#include <random>

namespace adx::engine {

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::max_ig: return "max_ig";
    case Policy::balanced_split: return "balanced_split";
    case Policy::random: return "random";
  }
  return "max_ig";
}

std::optional<Policy> parse_policy(std::string_view text) {
  if (text == "max_ig") return Policy::max_ig;
  if (text == "balanced_split") return Policy::balanced_split;
  if (text == "random") return Policy::random;
  return std::nullopt;
}

void SimOptions::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("noise must be in [0, 1]");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
}

std::map<std::string, int> SimReport::rank_histogram() const {
  std::map<std::string, int> h;
  for (int r : ranks) ++h[r == 0 ? std::string("rejected") : std::to_string(r)];
  return h;
}

SyntheticPatient draw_patient(const ScoringModel& model, double noise, std::uint64_t seed,
                              int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), 0u};
  std::mt19937_64 rng(seq);
  const auto& params = model.params();
  std::discrete_distribution<std::size_t> pick_disease(params.priors.begin(), params.priors.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticPatient patient;
  patient.disease = pick_disease(rng);
  patient.answers.resize(params.findings());
  std::vector<std::size_t> yes;
  for (std::size_t f = 0; f < params.findings(); ++f) {
    bool present = unit(rng) < params.cond_at(f, patient.disease);
    if (unit(rng) < noise) present = !present;
    patient.answers[f] = present ? Answer::yes : Answer::no;
    if (present) yes.push_back(f);
  }
  if (!yes.empty()) {
    patient.trigger = yes[std::uniform_int_distribution<std::size_t>(0, yes.size() - 1)(rng)];
  } else {
    std::size_t best = 0;
    for (std::size_t f = 1; f < params.findings(); ++f)
      if (params.cond_at(f, patient.disease) > params.cond_at(best, patient.disease)) best = f;
    patient.trigger = best;
  }
  return patient;
}

namespace {

std::optional<std::string> choose(Policy policy, const ScoringModel& model,
                                  const SessionState& state, const EngineConfig& config,
                                  std::mt19937_64& rng) {
  switch (policy) {
    case Policy::max_ig:
      return select_next_question(model, state, config);
    case Policy::balanced_split: {
      const CandidateScore* best = nullptr;
      const auto scores = score_candidates(model, state);
      for (const auto& c : scores) {
        if (c.information_gain < config.min_ig) continue;
        if (!best || std::abs(c.p_yes - 0.5) < std::abs(best->p_yes - 0.5)) best = &c;
      }
      if (!best) return std::nullopt;
      return best->finding_id;
    }
    case Policy::random: {
      std::vector<std::string> open;
      for (const auto& id : model.params().shape->finding_ids())
        if (!state.answered.contains(id)) open.push_back(id);
      if (open.empty()) return std::nullopt;
      std::sort(open.begin(), open.end());
      return open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    }
  }
  return std::nullopt;
}

}  // namespace

SimReport simulate(const knowledge::KnowledgeBase& kb, const ScoringModel& model,
                   const SimOptions& options) {
  options.validate();
  EngineConfig config;
  config.max_questions = options.budget;
  config.posterior_stop = options.posterior_stop;
  config.entropy_stop = options.entropy_stop;
  config.min_ig = options.min_ig;
  config.top_k = options.top_k;
  config.validate();

  const auto& disease_ids = model.params().shape->disease_ids();
  const auto& finding_ids = model.params().shape->finding_ids();
  SimReport report;
  report.trials = options.trials;
  report.policy = options.policy;
  report.question_budget = options.budget;
  report.seed = options.seed;
  long total_questions = 0;
  int top1 = 0, top5 = 0;

  for (int trial = 0; trial < options.trials; ++trial) {
    const auto patient = draw_patient(model, options.noise, options.seed, trial);
    std::seed_seq policy_seq{static_cast<std::uint32_t>(options.seed),
                             static_cast<std::uint32_t>(trial), 1u};
    std::mt19937_64 policy_rng(policy_seq);

    auto state = start_session(model, Uuid{}, finding_ids[patient.trigger]);
    while (state.questions_asked < config.max_questions) {
      const double top = *std::max_element(state.posterior.begin(), state.posterior.end());
      if (top >= config.posterior_stop || entropy(state.posterior) <= config.entropy_stop) break;
      auto next = choose(options.policy, model, state, config, policy_rng);
      if (!next) break;
      const std::size_t f = model.require_finding(*next);
      state = record_answer(model, state, *next, patient.answers[f]);
    }
    total_questions += state.questions_asked;

    const auto suggestion = suggest(kb, model, state, config);
    int rank = 0;
    for (std::size_t i = 0; i < suggestion.ranked.size(); ++i) {
      if (suggestion.ranked[i].disease_id == disease_ids[patient.disease]) {
        rank = static_cast<int>(i) + 1;
        break;
      }
    }
    report.ranks.push_back(rank);
    if (rank == 1) ++top1;
    if (rank >= 1 && rank <= 5) ++top5;
  }
  report.top1_acc = static_cast<double>(top1) / options.trials;
  report.top5_acc = static_cast<double>(top5) / options.trials;
  report.mean_questions = static_cast<double>(total_questions) / options.trials;
  return report;
}

nlohmann::json to_json(const SimReport& report) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [k, v] : report.rank_histogram()) histogram[k] = v;
  return {{"trials", report.trials},
          {"policy", to_string(report.policy)},
          {"question_budget", report.question_budget},
          {"top1_acc", report.top1_acc},
          {"top5_acc", report.top5_acc},
          {"mean_questions", report.mean_questions},
          {"seed", report.seed},
          {"rank_histogram", histogram}};
}

}  // namespace adx::engine

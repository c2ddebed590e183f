#include <gtest/gtest.h>

#include "adx/engine/simulate.hpp"
#include "adx/knowledge/builder.hpp"
#include "support/fixtures.hpp"

using namespace adx;
using namespace adx::engine;

namespace {

struct SmallWorld {
  knowledge::KnowledgeBase kb;
  ScoringModel model;
};

SmallWorld small_world() {
  knowledge::SyntheticOptions o;
  o.diseases = 30;
  o.findings = 60;
  auto kb = knowledge::make_synthetic_kb(o);
  ScoringModel m(adx::testing::params_of(kb));
  return {std::move(kb), std::move(m)};
}

}  // namespace

TEST(Simulate, NoiselessFullBudgetIdentifies) {
  const auto w = small_world();
  SimOptions o;
  o.noise = 0.0;
  o.budget = static_cast<int>(w.kb.findings().size());
  o.trials = 200;
  const auto r = simulate(w.kb, w.model, o);
  EXPECT_EQ(r.top1_acc, 1.0);
  EXPECT_LE(r.top1_acc, r.top5_acc);
}

TEST(Simulate, BitReproducible) {
  const auto w = small_world();
  SimOptions o;
  o.noise = 0.1;
  o.trials = 100;
  o.policy = Policy::random;
  EXPECT_EQ(to_json(simulate(w.kb, w.model, o)).dump(), to_json(simulate(w.kb, w.model, o)).dump());
  auto o2 = o;
  o2.seed = 99;
  EXPECT_NE(to_json(simulate(w.kb, w.model, o)).dump(), to_json(simulate(w.kb, w.model, o2)).dump());
}

TEST(Simulate, PatientDrawsArePairedAcrossPolicies) {
  const auto w = small_world();
  for (int t = 0; t < 10; ++t) {
    const auto a = draw_patient(w.model, 0.1, 7, t);
    const auto b = draw_patient(w.model, 0.1, 7, t);
    EXPECT_EQ(a.disease, b.disease);
    EXPECT_EQ(a.answers, b.answers);
  }
}

TEST(Simulate, ZeroTrialsRejected) {
  SimOptions o;
  o.trials = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(Simulate, HistogramCoversEveryTrial) {
  const auto w = small_world();
  SimOptions o;
  o.noise = 0.2;
  o.budget = 3;
  o.trials = 150;
  const auto r = simulate(w.kb, w.model, o);
  int total = 0;
  for (const auto& [k, v] : r.rank_histogram()) total += v;
  EXPECT_EQ(total, 150);
  EXPECT_EQ(r.rank_histogram().at("1"), static_cast<int>(r.top1_acc * 150 + 0.5));
}

TEST(Policy, Names) {
  EXPECT_EQ(parse_policy("balanced_split"), Policy::balanced_split);
  EXPECT_FALSE(parse_policy("greedy").has_value());
}

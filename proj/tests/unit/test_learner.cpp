#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "adx/learner/learner.hpp"
#include "support/fixtures.hpp"

using namespace adx;
using namespace adx::learner;
using adx::testing::dense_kb;

namespace {

ConfirmedEncounter confirmed(std::map<std::string, Answer> answers, std::string disease) {
  return {Uuid::random(), std::move(answers), std::move(disease)};
}

ModelParams random_update(const ModelParams& p, std::mt19937_64& rng) {
  std::map<std::string, Answer> answers;
  for (std::size_t f = 0; f < p.findings(); ++f)
    if (rng() % 2) answers[p.shape->finding_ids()[f]] = static_cast<Answer>(rng() % 3);
  if (answers.empty()) answers[p.shape->finding_ids()[0]] = Answer::yes;
  return update_from_encounter(p, confirmed(answers, p.shape->disease_ids()[rng() % p.diseases()]));
}

}  // namespace

TEST(DeltaRule, SingleStepArithmetic) {
  const auto kb = dense_kb({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}});
  const auto p = ModelParams::from_knowledge_base(kb, 0.1);
  const auto q = update_from_encounter(p, confirmed({{"f0", Answer::yes}, {"f1", Answer::unknown}}, "d0"));
  EXPECT_NEAR(q.cond_at(0, 0), 0.55, 1e-15);
  EXPECT_EQ(q.cond_at(1, 0), 0.5);
  EXPECT_EQ(q.cond_at(0, 1), 0.5);  // other diseases untouched
  EXPECT_NEAR(q.priors[0], 0.55, 1e-15);
  EXPECT_NEAR(q.priors[1], 0.45, 1e-15);
  EXPECT_EQ(q.version, p.version + 1);
}

TEST(DeltaRule, NoAnswerMovesTowardZero) {
  const auto kb = dense_kb({0.5, 0.5}, {{0.5}, {0.5}});
  const auto p = ModelParams::from_knowledge_base(kb, 0.1);
  const auto q = update_from_encounter(p, confirmed({{"f0", Answer::no}}, "d1"));
  EXPECT_NEAR(q.cond_at(0, 1), 0.45, 1e-15);
}

TEST(DeltaRule, ConvergesMonotonicallyAndMatchesClosedForm) {
  const auto kb = dense_kb({0.25, 0.25, 0.5}, {{0.3, 0.8}, {0.5, 0.5}, {0.6, 0.1}});
  auto p = ModelParams::from_knowledge_base(kb, 0.05);
  const auto enc = confirmed({{"f0", Answer::yes}, {"f1", Answer::no}}, "d0");
  double prev_yes = p.cond_at(0, 0), prev_no = p.cond_at(1, 0);
  for (int n = 1; n <= 200; ++n) {
    p = update_from_encounter(p, enc);
    const double yes = p.cond_at(0, 0), no = p.cond_at(1, 0);
    EXPECT_GE(yes, prev_yes);
    EXPECT_LE(no, prev_no);
    const double decay = std::pow(0.95, n);
    EXPECT_NEAR(yes, std::min(1.0 - knowledge::kProbEpsilon, 1.0 - 0.7 * decay), 1e-12);
    EXPECT_NEAR(no, std::max(knowledge::kProbEpsilon, 0.8 * decay), 1e-12);
    EXPECT_NEAR(p.priors[0], 1.0 - 0.75 * decay, 1e-12);
    EXPECT_NEAR(std::accumulate(p.priors.begin(), p.priors.end(), 0.0), 1.0, 1e-12);
    prev_yes = yes;
    prev_no = no;
  }
}

TEST(DeltaRule, UnknownIdsRejectWholeEncounter) {
  const auto kb = dense_kb({0.5, 0.5}, {{0.5}, {0.5}});
  const auto p = ModelParams::from_knowledge_base(kb);
  EXPECT_THROW(update_from_encounter(p, confirmed({{"f0", Answer::yes}}, "dx")), UnknownIdError);
  EXPECT_THROW(update_from_encounter(p, confirmed({{"fx", Answer::yes}}, "d0")), UnknownIdError);
}

TEST(ParamDelta, SingleEntryDiff) {
  const auto kb = dense_kb({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}});
  const auto p = ModelParams::from_knowledge_base(kb);
  auto q = p;
  q.version += 1;
  q.cond_at(1, 0) = 0.7;
  const auto d = diff_params(p, q);
  EXPECT_EQ(d.entry_count(), 1u);
  EXPECT_EQ(d.version, q.version);
}

TEST(ParamDelta, VersionOnlyDelta) {
  const auto kb = dense_kb({0.5, 0.5}, {{0.5}, {0.5}});
  const auto p = ModelParams::from_knowledge_base(kb);
  auto q = p;
  q.version += 1;
  const auto d = diff_params(p, q);
  EXPECT_EQ(d.entry_count(), 0u);
  EXPECT_EQ(apply_param_delta(p, d), q);
}

TEST(ParamDelta, RandomRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  const auto kb = adx::testing::clinic_kb();
  auto p = ModelParams::from_knowledge_base(*kb);
  for (int i = 0; i < 100; ++i) {
    const auto q = random_update(p, rng);
    const auto d = diff_params(p, q);
    EXPECT_EQ(apply_param_delta(p, d), q);
    EXPECT_EQ(delta_from_json(delta_to_json(d, *p.shape), *p.shape), d);
    p = q;
  }
}

TEST(ParamDelta, OrderingContract) {
  std::mt19937_64 rng(4);
  const auto kb = adx::testing::clinic_kb();
  const auto v0 = ModelParams::from_knowledge_base(*kb);
  const auto v1 = random_update(v0, rng);
  const auto v2 = random_update(v1, rng);
  const auto v3 = random_update(v2, rng);
  const auto d2 = diff_params(v1, v2);
  const auto d3 = diff_params(v2, v3);
  EXPECT_EQ(apply_param_delta(v1, d2), v2);
  EXPECT_THROW(apply_param_delta(v2, d2), StaleDeltaError);
  EXPECT_THROW(apply_param_delta(v0, d3), VersionGapError);
  EXPECT_THROW(diff_params(v0, v2), VersionMismatchError);
}

#include <cstdio>
#include <random>
#include <set>

#include "adx/knowledge/builder.hpp"

namespace adx::knowledge {

namespace {

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

}  // namespace

KnowledgeBase make_synthetic_kb(const SyntheticOptions& options) {
  if (options.diseases == 0 || options.findings == 0)
    throw BuildError("synthetic kb needs at least one disease and one finding");
  if (options.diseases > 1 && options.findings < 64 &&
      (std::size_t{1} << options.findings) <= options.diseases)
    throw BuildError("too few findings for distinct disease profiles");

  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution present(options.density);
  std::uniform_real_distribution<double> weight(0.5, 1.5);

  const std::size_t lab_start = options.findings - options.findings / 5;
  std::vector<FindingDef> findings;
  for (std::size_t i = 0; i < options.findings; ++i) {
    FindingDef f;
    f.finding_id = numbered("f", i + 1, 3);
    const bool lab = i >= lab_start;
    f.kind = lab ? FindingKind::lab_test : FindingKind::symptom;
    f.name = numbered(lab ? "Lab test " : "Symptom ", i + 1, 3);
    f.cost_hint = lab ? 3.0 : 1.0;
    findings.push_back(std::move(f));
  }

  std::set<std::vector<bool>> seen;
  std::vector<DiseaseDef> diseases;
  AssociationMatrix matrix;
  matrix.default_prob = kProbEpsilon;
  double weight_sum = 0.0;
  for (std::size_t d = 0; d < options.diseases; ++d) {
    std::vector<bool> profile;
    do {
      profile.assign(options.findings, false);
      bool any = false;
      for (std::size_t s = 0; s < options.findings; ++s) any |= (profile[s] = present(rng));
      if (!any) profile[rng() % options.findings] = true;
    } while (!seen.insert(profile).second);

    DiseaseDef disease;
    disease.disease_id = numbered("d", d + 1, 3);
    disease.name = numbered("Disease ", d + 1, 3);
    disease.prior = weight(rng);
    weight_sum += disease.prior;
    for (std::size_t s = 0; s < options.findings; ++s) {
      if (!profile[s]) continue;
      matrix.entries[{disease.disease_id, findings[s].finding_id}] = 1.0 - kProbEpsilon;
      if (s >= lab_start && disease.recommended_tests.size() < 3)
        disease.recommended_tests.push_back(findings[s].finding_id);
    }
    disease.prescriptions.push_back("Standard regimen for " + disease.name);
    diseases.push_back(std::move(disease));
  }
  for (auto& d : diseases) d.prior /= weight_sum;
  double sum = 0.0;
  for (const auto& d : diseases) sum += d.prior;
  diseases.front().prior += 1.0 - sum;

  return KnowledgeBase(std::move(findings), std::move(diseases), std::move(matrix), 1,
                       "synthetic: " + std::to_string(options.diseases) + " diseases x " +
                           std::to_string(options.findings) + " findings, density " +
                           std::to_string(options.density) + ", seed " +
                           std::to_string(options.seed));
}

}  // namespace adx::knowledge

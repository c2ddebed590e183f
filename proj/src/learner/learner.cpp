#include "adx/learner/learner.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace adx::learner {

using nlohmann::json;

ModelParams update_from_encounter(const ModelParams& params, const ConfirmedEncounter& enc) {
  const auto target = params.shape->disease_index(enc.confirmed_disease);
  if (!target) throw UnknownIdError("unknown disease '" + enc.confirmed_disease + "'");
  if (enc.answers.empty()) throw UnknownIdError("encounter has no answers");
  std::vector<std::pair<std::size_t, double>> observed;
  for (const auto& [id, answer] : enc.answers) {
    const auto f = params.shape->finding_index(id);
    if (!f) throw UnknownIdError("unknown finding '" + id + "'");
    if (answer == Answer::unknown) continue;
    observed.emplace_back(*f, answer == Answer::yes ? 1.0 : 0.0);
  }

  ModelParams next = params;
  const double eta = params.eta;
  for (const auto& [f, x] : observed) {
    double& c = next.cond_at(f, *target);
    c = knowledge::clamp_probability(c + eta * (x - c));
  }
  double sum = 0.0;
  for (std::size_t d = 0; d < next.priors.size(); ++d) {
    const double onehot = d == *target ? 1.0 : 0.0;
    next.priors[d] += eta * (onehot - next.priors[d]);
    sum += next.priors[d];
  }
  for (double& p : next.priors) p /= sum;
  ++next.version;
  return next;
}

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

ParamDelta diff_params(const ModelParams& base, const ModelParams& updated) {
  if (updated.version != base.version + 1)
    throw VersionMismatchError("diff requires consecutive versions, got " +
                               std::to_string(base.version) + " -> " +
                               std::to_string(updated.version));
  if (!(*base.shape == *updated.shape)) throw VersionMismatchError("params differ in shape");
  ParamDelta delta;
  delta.version = updated.version;
  for (std::size_t d = 0; d < base.priors.size(); ++d)
    if (!same_bits(base.priors[d], updated.priors[d]))
      delta.priors.push_back({static_cast<std::uint32_t>(d), updated.priors[d]});
  const std::size_t nd = base.diseases();
  for (std::size_t i = 0; i < base.cond.size(); ++i) {
    if (!same_bits(base.cond[i], updated.cond[i]))
      delta.cond.push_back({static_cast<std::uint32_t>(i / nd), static_cast<std::uint32_t>(i % nd),
                            updated.cond[i]});
  }
  return delta;
}

ModelParams apply_param_delta(const ModelParams& params, const ParamDelta& delta) {
  if (delta.version <= params.version)
    throw StaleDeltaError("delta v" + std::to_string(delta.version) + " already applied (at v" +
                          std::to_string(params.version) + ")");
  if (delta.version > params.version + 1)
    throw VersionGapError("delta v" + std::to_string(delta.version) + " skips versions after v" +
                          std::to_string(params.version));
  for (const auto& e : delta.priors)
    if (e.disease >= params.diseases()) throw UnknownIdError("delta prior index out of range");
  for (const auto& e : delta.cond)
    if (e.disease >= params.diseases() || e.finding >= params.findings())
      throw UnknownIdError("delta cond index out of range");

  ModelParams next = params;
  for (const auto& e : delta.priors) next.priors[e.disease] = e.value;
  for (const auto& e : delta.cond) next.cond_at(e.finding, e.disease) = e.value;
  next.version = delta.version;
  return next;
}

json delta_to_json(const ParamDelta& delta, const ParamShape& shape) {
  json priors = json::array();
  for (const auto& e : delta.priors)
    priors.push_back({{"disease_id", shape.disease_ids().at(e.disease)}, {"p", e.value}});
  json cond = json::array();
  for (const auto& e : delta.cond)
    cond.push_back({{"disease_id", shape.disease_ids().at(e.disease)},
                    {"finding_id", shape.finding_ids().at(e.finding)},
                    {"p", e.value}});
  return json{{"version", delta.version}, {"priors", priors}, {"cond", cond}};
}

ParamDelta delta_from_json(const json& j, const ParamShape& shape) {
  ParamDelta delta;
  delta.version = j.at("version").get<std::int64_t>();
  for (const auto& e : j.at("priors")) {
    const auto d = shape.disease_index(e.at("disease_id").get<std::string>());
    if (!d) throw UnknownIdError("delta references unknown disease");
    delta.priors.push_back({static_cast<std::uint32_t>(*d), e.at("p").get<double>()});
  }
  for (const auto& e : j.at("cond")) {
    const auto d = shape.disease_index(e.at("disease_id").get<std::string>());
    const auto f = shape.finding_index(e.at("finding_id").get<std::string>());
    if (!d || !f) throw UnknownIdError("delta references unknown catalog id");
    delta.cond.push_back(
        {static_cast<std::uint32_t>(*f), static_cast<std::uint32_t>(*d), e.at("p").get<double>()});
  }
  return delta;
}

}  // namespace adx::learner

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/common/records.hpp"
#include "adx/common/uuid.hpp"
#include "adx/learner/model_params.hpp"

namespace adx::learner {

class VersionGapError : public LearnerError {
 public:
  using LearnerError::LearnerError;
};
// Delta at or below the current version; the caller treats it as a no-op.
class StaleDeltaError : public LearnerError {
 public:
  using LearnerError::LearnerError;
};
class VersionMismatchError : public LearnerError {
 public:
  using LearnerError::LearnerError;
};

struct ConfirmedEncounter {
  Uuid encounter_id;
  std::map<std::string, Answer> answers;
  std::string confirmed_disease;
};

// One-step delta rule on the confirmed disease's parameters:
//   cond(s|d*) += eta * (x_s - cond(s|d*)), x_s = 1 for yes, 0 for no
//   priors     += eta * (onehot(d*) - priors)
// Unknown answers are skipped. Unknown ids reject the whole encounter
// (UnknownIdError) before anything is modified.
ModelParams update_from_encounter(const ModelParams& params, const ConfirmedEncounter& enc);

struct ParamDelta {
  struct PriorEntry {
    std::uint32_t disease = 0;
    double value = 0.0;
    friend bool operator==(const PriorEntry&, const PriorEntry&) = default;
  };
  struct CondEntry {
    std::uint32_t finding = 0;
    std::uint32_t disease = 0;
    double value = 0.0;
    friend bool operator==(const CondEntry&, const CondEntry&) = default;
  };

  std::int64_t version = 0;
  std::vector<PriorEntry> priors;
  std::vector<CondEntry> cond;

  std::size_t entry_count() const { return priors.size() + cond.size(); }

  friend bool operator==(const ParamDelta&, const ParamDelta&) = default;
};

// Sparse difference; requires updated.version == base.version + 1
// (VersionMismatchError otherwise). Entries compare bitwise.
ParamDelta diff_params(const ModelParams& base, const ModelParams& updated);

// Requires delta.version == params.version + 1. Throws VersionGapError when
// deltas are missing and StaleDeltaError when the delta is already applied.
ModelParams apply_param_delta(const ModelParams& params, const ParamDelta& delta);

// JSON wire form uses catalog ids rather than indices.
nlohmann::json delta_to_json(const ParamDelta& delta, const ParamShape& shape);
ParamDelta delta_from_json(const nlohmann::json& j, const ParamShape& shape);

}  // namespace adx::learner

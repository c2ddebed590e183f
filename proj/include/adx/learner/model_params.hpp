#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adx/common/error.hpp"
#include "adx/knowledge/knowledge_base.hpp"

namespace adx::learner {

inline constexpr double kDefaultEta = 0.05;

class LearnerError : public Error {
 public:
  using Error::Error;
};
class UnknownIdError : public LearnerError {
 public:
  using LearnerError::LearnerError;
};
class InvariantError : public LearnerError {
 public:
  using LearnerError::LearnerError;
};

// Catalog order shared by every parameter snapshot built from one
// knowledge base. Indices into it are stable for the kb's lifetime.
class ParamShape {
 public:
  ParamShape(std::vector<std::string> disease_ids, std::vector<std::string> finding_ids);

  const std::vector<std::string>& disease_ids() const { return disease_ids_; }
  const std::vector<std::string>& finding_ids() const { return finding_ids_; }
  std::size_t diseases() const { return disease_ids_.size(); }
  std::size_t findings() const { return finding_ids_.size(); }
  std::optional<std::size_t> disease_index(const std::string& id) const;
  std::optional<std::size_t> finding_index(const std::string& id) const;

  friend bool operator==(const ParamShape& a, const ParamShape& b) {
    return a.disease_ids_ == b.disease_ids_ && a.finding_ids_ == b.finding_ids_;
  }

 private:
  std::vector<std::string> disease_ids_;
  std::vector<std::string> finding_ids_;
  std::unordered_map<std::string, std::size_t> disease_index_;
  std::unordered_map<std::string, std::size_t> finding_index_;
};

// Learnable parameters of the naive-Bayes scorer. Snapshots are values:
// every update returns a new object.
struct ModelParams {
  std::shared_ptr<const ParamShape> shape;
  std::vector<double> priors;
  // Finding-major: cond[f * diseases + d] = P(finding f | disease d).
  std::vector<double> cond;
  std::int64_t version = 0;
  double eta = kDefaultEta;

  static ModelParams from_knowledge_base(const knowledge::KnowledgeBase& kb,
                                         double eta = kDefaultEta);

  std::size_t diseases() const { return shape->diseases(); }
  std::size_t findings() const { return shape->findings(); }
  double cond_at(std::size_t finding, std::size_t disease) const {
    return cond[finding * diseases() + disease];
  }
  double& cond_at(std::size_t finding, std::size_t disease) {
    return cond[finding * diseases() + disease];
  }
  // P(finding | d) for every disease d.
  std::span<const double> finding_column(std::size_t finding) const {
    return {cond.data() + finding * diseases(), diseases()};
  }

  // Throws InvariantError: simplex priors, conditionals in [eps, 1 - eps],
  // 0 < eta < 1.
  void validate() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return *a.shape == *b.shape && a.priors == b.priors && a.cond == b.cond &&
           a.version == b.version && a.eta == b.eta;
  }
};

}  // namespace adx::learner

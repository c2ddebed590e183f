#pragma once

// Building a knowledge base from free text: windowed co-occurrence counting
// followed by Laplace-smoothed conditional probabilities.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adx/knowledge/knowledge_base.hpp"

namespace adx::knowledge {

inline constexpr int kDefaultWindow = 50;
inline constexpr double kDefaultSmoothing = 1.0;

// Surface term (one or more lowercase words separated by single spaces) to
// catalog id. Several terms may map to the same id (synonyms).
using Vocabulary = std::map<std::string, std::string>;

struct CooccurrenceCounts {
  // Keys are normalised so that first < second.
  std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
  std::map<std::string, std::uint64_t> term_counts;
  int window = kDefaultWindow;
  // Number of corpus positions, i.e. windows opened while scanning.
  std::uint64_t total_windows = 0;

  std::uint64_t pair(const std::string& a, const std::string& b) const;
  std::uint64_t term(const std::string& id) const;
};

// Lowercases and splits on anything that is not a letter or digit.
std::vector<std::string> tokenize(std::string_view text);

// Mentions at positions i < j are paired when j - i < window. Multi-word
// terms are matched greedily longest-first; a mention's position is that of
// its first token. Pairs of the same id are not counted.
CooccurrenceCounts extract_cooccurrence(std::span<const std::string> tokens,
                                        const Vocabulary& vocab, int window);

struct DerivedModel {
  AssociationMatrix matrix;
  std::map<std::string, double> priors;
};

// P(s|d) = (pair(d,s) + alpha) / (term(d) + 2 alpha), clamped to
// [eps, 1 - eps]; prior(d) = term(d) / sum of term counts over diseases.
// Throws BuildError when no disease has any evidence.
DerivedModel derive_matrix(const CooccurrenceCounts& counts,
                           std::span<const std::string> disease_ids,
                           std::span<const std::string> finding_ids, double smoothing);

// Catalog half of a knowledge base, as read from a vocabulary file: the
// same schema as the knowledge-base file minus priors and matrix, with
// optional "synonyms" on diseases.
struct Catalog {
  std::vector<FindingDef> findings;
  std::vector<DiseaseDef> diseases;
  std::map<std::string, std::vector<std::string>> disease_synonyms;

  Vocabulary vocabulary() const;
};

Catalog parse_catalog(const nlohmann::json& doc);

KnowledgeBase build_knowledge_base(const Catalog& catalog, std::string_view corpus_text,
                                   int window, double smoothing, std::int64_t version);

// Ranked, case-insensitive finding search: exact name, exact synonym, name
// prefix, synonym prefix, then substring; ties by finding_id.
std::vector<const FindingDef*> lookup_finding(const KnowledgeBase& kb, std::string_view query,
                                              std::size_t limit);

struct SyntheticOptions {
  std::size_t diseases = 166;
  std::size_t findings = 300;
  // Fraction of findings present in each disease profile.
  double density = 0.1;
  std::uint64_t seed = 1;
};

// Random knowledge base in which every disease has a distinct binary
// finding profile with P(s|d) at the clamp bounds.
KnowledgeBase make_synthetic_kb(const SyntheticOptions& options);

}  // namespace adx::knowledge

#include <algorithm>
#include <cctype>
#include <set>

#include "adx/knowledge/builder.hpp"

namespace adx::knowledge {

std::uint64_t CooccurrenceCounts::pair(const std::string& a, const std::string& b) const {
  auto key = a < b ? std::pair{a, b} : std::pair{b, a};
  auto it = pair_counts.find(key);
  return it == pair_counts.end() ? 0 : it->second;
}

std::uint64_t CooccurrenceCounts::term(const std::string& id) const {
  auto it = term_counts.find(id);
  return it == term_counts.end() ? 0 : it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

struct Mention {
  std::size_t position;
  const std::string* id;
};

std::vector<Mention> find_mentions(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::size_t max_words = 1;
  for (const auto& [term, id] : vocab)
    max_words = std::max<std::size_t>(max_words, 1 + std::count(term.begin(), term.end(), ' '));

  std::vector<Mention> mentions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    const std::string* id = nullptr;
    std::string phrase;
    const std::size_t longest = std::min(max_words, tokens.size() - i);
    // Longest-first: try the widest phrase that fits, shrink on miss.
    for (std::size_t len = longest; len >= 1 && !id; --len) {
      phrase.clear();
      for (std::size_t k = 0; k < len; ++k) {
        if (k) phrase.push_back(' ');
        phrase += tokens[i + k];
      }
      if (auto it = vocab.find(phrase); it != vocab.end()) {
        id = &it->second;
        matched = len;
      }
    }
    if (id) {
      mentions.push_back({i, id});
      i += matched;
    } else {
      ++i;
    }
  }
  return mentions;
}

}  // namespace

CooccurrenceCounts extract_cooccurrence(std::span<const std::string> tokens,
                                        const Vocabulary& vocab, int window) {
  if (window < 1) throw BuildError("window must be >= 1");
  CooccurrenceCounts counts;
  counts.window = window;
  counts.total_windows = tokens.size();
  const auto mentions = find_mentions(tokens, vocab);
  for (std::size_t a = 0; a < mentions.size(); ++a) {
    ++counts.term_counts[*mentions[a].id];
    for (std::size_t b = a + 1; b < mentions.size(); ++b) {
      if (mentions[b].position - mentions[a].position >= static_cast<std::size_t>(window)) break;
      const std::string& x = *mentions[a].id;
      const std::string& y = *mentions[b].id;
      if (x == y) continue;
      ++counts.pair_counts[x < y ? std::pair{x, y} : std::pair{y, x}];
    }
  }
  return counts;
}

DerivedModel derive_matrix(const CooccurrenceCounts& counts,
                           std::span<const std::string> disease_ids,
                           std::span<const std::string> finding_ids, double smoothing) {
  if (!(smoothing > 0.0)) throw BuildError("smoothing must be > 0");
  double total = 0.0;
  for (const auto& d : disease_ids) total += static_cast<double>(counts.term(d));
  if (total <= 0.0) throw BuildError("no disease evidence");

  DerivedModel model;
  model.matrix.default_prob = 0.5;
  for (const auto& d : disease_ids) {
    const double term = static_cast<double>(counts.term(d));
    model.priors[d] = term / total;
    for (const auto& s : finding_ids) {
      const double pair = static_cast<double>(counts.pair(d, s));
      const double p = clamp_probability((pair + smoothing) / (term + 2.0 * smoothing));
      if (p != model.matrix.default_prob) model.matrix.entries[{d, s}] = p;
    }
  }
  // Renormalise against rounding drift.
  double sum = 0.0;
  for (const auto& [d, p] : model.priors) sum += p;
  for (auto& [d, p] : model.priors) p /= sum;
  return model;
}

}  // namespace adx::knowledge

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "adx/knowledge/builder.hpp"

namespace adx::knowledge {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

constexpr int kNoMatch = 99;

int tier_of(const FindingDef& f, const std::string& q) {
  const auto name = lower(f.name);
  std::vector<std::string> syns;
  for (const auto& s : f.synonyms) syns.push_back(lower(s));
  if (name == q) return 0;
  if (std::find(syns.begin(), syns.end(), q) != syns.end()) return 1;
  if (starts_with(name, q)) return 2;
  for (const auto& s : syns)
    if (starts_with(s, q)) return 3;
  if (name.find(q) != std::string::npos) return 4;
  for (const auto& s : syns)
    if (s.find(q) != std::string::npos) return 4;
  return kNoMatch;
}

}  // namespace

std::vector<const FindingDef*> lookup_finding(const KnowledgeBase& kb, std::string_view query,
                                              std::size_t limit) {
  if (limit < 1) throw std::invalid_argument("lookup limit must be >= 1");
  const auto q = lower(query);
  if (q.empty()) return {};
  std::vector<std::pair<int, const FindingDef*>> hits;
  for (const auto& f : kb.findings()) {
    const int tier = tier_of(f, q);
    if (tier != kNoMatch) hits.emplace_back(tier, &f);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->finding_id < b.second->finding_id;
  });
  std::vector<const FindingDef*> out;
  for (std::size_t i = 0; i < hits.size() && out.size() < limit; ++i) out.push_back(hits[i].second);
  return out;
}

}  // namespace adx::knowledge

#include "fidroute/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

namespace fidroute {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Token with leading/trailing punctuation removed; only used for keyword rules.
std::string_view bare(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && !is_alnum(token[b])) ++b;
  while (e > b && !is_alnum(token[e - 1])) --e;
  return token.substr(b, e - b);
}

constexpr std::array<std::string_view, 7> kWhWords = {"what", "where", "when", "who",
                                                      "why",  "how",   "which"};
constexpr std::array<std::string_view, 13> kYesNoLeads = {
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will", "would", "has", "have"};
constexpr std::array<std::string_view, 8> kSpatialWords = {"where",  "left",  "right", "behind",
                                                           "front", "above", "below", "under"};

template <std::size_t N>
bool one_of(std::string_view w, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, std::int64_t>> terms,
                       std::int64_t n_docs)
    : n_docs_(n_docs) {
  if (n_docs < 1) throw std::invalid_argument("vocabulary needs at least one document");
  terms_.reserve(terms.size());
  for (auto& [term, df] : terms) {
    if (df < 1 || df > n_docs)
      throw std::invalid_argument(
          fmt::format("term '{}' has document frequency {} outside [1, {}]", term, df, n_docs));
    if (!index_.emplace(term, terms_.size()).second)
      throw std::invalid_argument(fmt::format("duplicate vocabulary term '{}'", term));
    terms_.push_back(std::move(term));
    doc_freq_.push_back(df);
    // Smoothed idf: ln((1 + N) / (1 + df)) + 1.
    idf_.push_back(std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) +
                   1.0);
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary fit_vocabulary(std::span<const std::string> questions,
                          const VocabularyOptions& options) {
  if (questions.empty()) throw std::invalid_argument("cannot fit a vocabulary on zero questions");
  std::map<std::string, std::int64_t> df;
  for (const auto& q : questions) {
    auto tokens = tokenize(q);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }

  std::vector<std::pair<std::string, std::int64_t>> terms(df.begin(), df.end());
  if (options.max_terms && terms.size() > *options.max_terms) {
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    terms.resize(*options.max_terms);
    std::sort(terms.begin(), terms.end());
  }
  return Vocabulary(std::move(terms), static_cast<std::int64_t>(questions.size()));
}

double FeatureVector::value(std::size_t column) const {
  if (column >= sparse_width) return structured.at(column - sparse_width);
  auto it = std::lower_bound(sparse.begin(), sparse.end(), column,
                             [](const auto& entry, std::size_t c) { return entry.first < c; });
  return (it != sparse.end() && it->first == column) ? it->second : 0.0;
}

FeatureVector featurize(std::string_view question, const Vocabulary& vocab) {
  FeatureVector fv;
  fv.sparse_width = vocab.size();
  const auto tokens = tokenize(question);
  if (tokens.empty()) {
    fv.degenerate = true;
    return fv;
  }

  std::map<std::size_t, int> counts;
  for (const auto& t : tokens)
    if (auto idx = vocab.index_of(t)) ++counts[*idx];
  double norm2 = 0.0;
  fv.sparse.reserve(counts.size());
  for (auto [idx, tf] : counts) {
    const double w = tf * vocab.idf(idx);
    fv.sparse.emplace_back(static_cast<std::uint32_t>(idx), w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& entry : fv.sparse) entry.second *= inv;
  }

  auto& s = fv.structured;
  s[kTokenLength] = static_cast<double>(tokens.size());
  s[kHasNumeric] = std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    return std::any_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
  });

  std::size_t wh = kWhNone;
  for (const auto& t : tokens) {
    auto it = std::find(kWhWords.begin(), kWhWords.end(), bare(t));
    if (it != kWhWords.end()) {
      wh = kWhWhat + static_cast<std::size_t>(it - kWhWords.begin());
      break;
    }
  }
  s[wh] = 1.0;

  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined.push_back(' ');
    joined += t;
  }
  s[kYesNo] = one_of(bare(tokens.front()), kYesNoLeads);
  s[kCounting] = joined.find("how many") != std::string::npos ||
                 joined.find("how much") != std::string::npos;
  s[kColor] = std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    auto b = bare(t);
    return b == "color" || b == "colour";
  });
  s[kSpatial] = joined.find("on top") != std::string::npos ||
                std::any_of(tokens.begin(), tokens.end(),
                            [](const std::string& t) { return one_of(bare(t), kSpatialWords); });
  return fv;
}

}  // namespace fidroute

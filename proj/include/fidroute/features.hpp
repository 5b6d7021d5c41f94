#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fidroute {

/// Lowercases ASCII letters and splits on runs of whitespace. Punctuation stays
/// attached to its token.
std::vector<std::string> tokenize(std::string_view text);

/// TF-IDF vocabulary learned from a set of training questions. Terms are
/// indexed in lexicographic order.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Rebuilds from serialized (term, document frequency) pairs in index order.
  Vocabulary(std::vector<std::pair<std::string, std::int64_t>> terms, std::int64_t n_docs);

  std::size_t size() const { return terms_.size(); }
  std::int64_t n_docs() const { return n_docs_; }
  const std::vector<std::string>& terms() const { return terms_; }
  std::int64_t doc_freq(std::size_t index) const { return doc_freq_[index]; }
  double idf(std::size_t index) const { return idf_[index]; }
  std::optional<std::size_t> index_of(std::string_view term) const;
  bool contains(std::string_view term) const { return index_of(term).has_value(); }

 private:
  std::vector<std::string> terms_;
  std::vector<std::int64_t> doc_freq_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t n_docs_ = 0;
};

struct VocabularyOptions {
  /// Keep only this many terms (highest document frequency first, ties
  /// lexicographic). Unset means no cap.
  std::optional<std::size_t> max_terms;
};

Vocabulary fit_vocabulary(std::span<const std::string> questions,
                          const VocabularyOptions& options = {});

/// Positions of the structured slots, appended after the TF-IDF block.
enum StructuredSlot : std::size_t {
  kTokenLength = 0,
  kHasNumeric,
  kWhWhat,
  kWhWhere,
  kWhWhen,
  kWhWho,
  kWhWhy,
  kWhHow,
  kWhWhich,
  kWhNone,
  kYesNo,
  kCounting,
  kColor,
  kSpatial,
  kStructuredSlotCount
};

struct FeatureVector {
  /// (column, value) with strictly increasing columns, all below sparse_width.
  std::vector<std::pair<std::uint32_t, double>> sparse;
  std::array<double, kStructuredSlotCount> structured{};
  std::size_t sparse_width = 0;
  /// Set for empty or whitespace-only text; structured slots stay zero.
  bool degenerate = false;

  std::size_t columns() const { return sparse_width + kStructuredSlotCount; }
  /// Value of one column of the concatenated layout. Absent sparse entries are 0.
  double value(std::size_t column) const;
};

FeatureVector featurize(std::string_view question, const Vocabulary& vocab);

}  // namespace fidroute

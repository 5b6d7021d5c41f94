#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fidroute {

/// One logged outcome: did the answerer get question `qid` right when it was
/// given the input at fidelity `fidelity_id`.
struct CorrectnessRecord {
  std::string qid;
  std::string question_text;
  std::string fidelity_id;
  int correct = 0;

  bool operator==(const CorrectnessRecord&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validated collection of records. Each (qid, fidelity) pair occurs once and
/// every record of a qid carries the same question text.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<CorrectnessRecord> records);

  const std::vector<CorrectnessRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Distinct qids in first-appearance order.
  const std::vector<std::string>& qids() const { return qids_; }
  /// Record positions belonging to `qid`, in file order. Throws on unknown qid.
  const std::vector<std::size_t>& records_for(const std::string& qid) const;
  bool contains(const std::string& qid) const { return index_.contains(qid); }

 private:
  std::vector<CorrectnessRecord> records_;
  std::vector<std::string> qids_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

/// Parses the line-delimited JSON record format. Blank lines are skipped.
Dataset parse_records(std::istream& in);
Dataset load_records(const std::filesystem::path& path);
void write_records(std::ostream& out, const Dataset& dataset);

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> assignment;

  int fold_of(const std::string& qid) const;
  /// qids of one fold, sorted lexicographically.
  std::vector<std::string> fold_qids(int fold) const;
};

/// Question-level k-fold split: sorted qids, seeded Fisher-Yates, round-robin deal.
FoldAssignment assign_folds(const Dataset& dataset, int k, std::uint64_t seed);

/// A question with its labels laid out along a fixed fidelity order.
struct QuestionRow {
  std::string qid;
  std::string text;
  std::vector<std::optional<int>> labels;
};

/// Groups records by qid (first-appearance order). Throws if a record names a
/// fidelity outside `fidelity_ids`.
std::vector<QuestionRow> group_by_question(const Dataset& dataset,
                                           std::span<const std::string> fidelity_ids);

}  // namespace fidroute

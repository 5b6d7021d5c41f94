#include "fidroute/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/core.h>
#include <json.hpp>

#include "fidroute/rng.hpp"

namespace fidroute {

using nlohmann::json;

Dataset::Dataset(std::vector<CorrectnessRecord> records) : records_(std::move(records)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.qid.empty()) throw CorpusError(fmt::format("record {}: empty qid", i));
    if (r.question_text.empty())
      throw CorpusError(fmt::format("record {}: empty question for qid '{}'", i, r.qid));
    if (r.fidelity_id.empty())
      throw CorpusError(fmt::format("record {}: empty fidelity for qid '{}'", i, r.qid));
    if (r.correct != 0 && r.correct != 1)
      throw CorpusError(fmt::format("record {}: correct must be 0 or 1, got {}", i, r.correct));
    if (!seen.emplace(r.qid, r.fidelity_id).second)
      throw CorpusError(
          fmt::format("duplicate record for (qid '{}', fidelity '{}')", r.qid, r.fidelity_id));

    auto [it, inserted] = index_.try_emplace(r.qid);
    if (inserted) {
      qids_.push_back(r.qid);
    } else if (records_[it->second.front()].question_text != r.question_text) {
      throw CorpusError(fmt::format("qid '{}' has conflicting question texts", r.qid));
    }
    it->second.push_back(i);
  }
}

const std::vector<std::size_t>& Dataset::records_for(const std::string& qid) const {
  auto it = index_.find(qid);
  if (it == index_.end()) throw CorpusError(fmt::format("unknown qid '{}'", qid));
  return it->second;
}

namespace {

CorrectnessRecord parse_line(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(fmt::format("line {}: malformed JSON ({})", line_no, e.what()));
  }
  if (!j.is_object()) throw CorpusError(fmt::format("line {}: expected a JSON object", line_no));

  auto string_field = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw CorpusError(fmt::format("line {}: missing field \"{}\"", line_no, key));
    if (!it->is_string())
      throw CorpusError(fmt::format("line {}: field \"{}\" must be a string", line_no, key));
    return it->get<std::string>();
  };

  CorrectnessRecord r;
  r.qid = string_field("qid");
  r.question_text = string_field("question");
  r.fidelity_id = string_field("fidelity");

  auto it = j.find("correct");
  if (it == j.end()) throw CorpusError(fmt::format("line {}: missing field \"correct\"", line_no));
  if (!it->is_number_integer() || (it->get<std::int64_t>() != 0 && it->get<std::int64_t>() != 1))
    throw CorpusError(fmt::format("line {}: field \"correct\" must be 0 or 1", line_no));
  r.correct = it->get<int>();
  return r;
}

}  // namespace

Dataset parse_records(std::istream& in) {
  std::vector<CorrectnessRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_line(line, line_no));
  }
  return Dataset(std::move(records));
}

Dataset load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError(fmt::format("cannot open '{}'", path.string()));
  return parse_records(in);
}

void write_records(std::ostream& out, const Dataset& dataset) {
  for (const auto& r : dataset.records()) {
    json j = json::object();
    j["qid"] = r.qid;
    j["question"] = r.question_text;
    j["fidelity"] = r.fidelity_id;
    j["correct"] = r.correct;
    out << j.dump() << '\n';
  }
}

int FoldAssignment::fold_of(const std::string& qid) const {
  auto it = assignment.find(qid);
  if (it == assignment.end()) throw CorpusError(fmt::format("qid '{}' has no fold", qid));
  return it->second;
}

std::vector<std::string> FoldAssignment::fold_qids(int fold) const {
  std::vector<std::string> out;
  for (const auto& [qid, f] : assignment)
    if (f == fold) out.push_back(qid);
  return out;
}

FoldAssignment assign_folds(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw CorpusError(fmt::format("fold count must be >= 2, got {}", k));
  std::vector<std::string> qids = dataset.qids();
  if (qids.size() < static_cast<std::size_t>(k))
    throw CorpusError(fmt::format("{} distinct questions cannot fill {} folds", qids.size(), k));

  std::sort(qids.begin(), qids.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(qids));

  FoldAssignment out;
  out.k = k;
  for (std::size_t i = 0; i < qids.size(); ++i)
    out.assignment.emplace(qids[i], static_cast<int>(i % static_cast<std::size_t>(k)));
  return out;
}

std::vector<QuestionRow> group_by_question(const Dataset& dataset,
                                           std::span<const std::string> fidelity_ids) {
  std::map<std::string, std::size_t> level;
  for (std::size_t i = 0; i < fidelity_ids.size(); ++i) level.emplace(fidelity_ids[i], i);

  std::vector<QuestionRow> rows;
  rows.reserve(dataset.qids().size());
  for (const auto& qid : dataset.qids()) {
    QuestionRow row;
    row.qid = qid;
    row.labels.assign(fidelity_ids.size(), std::nullopt);
    for (std::size_t pos : dataset.records_for(qid)) {
      const auto& r = dataset.records()[pos];
      auto it = level.find(r.fidelity_id);
      if (it == level.end())
        throw CorpusError(fmt::format("qid '{}': fidelity '{}' is not in the active cost profile",
                                      qid, r.fidelity_id));
      row.text = r.question_text;
      row.labels[it->second] = r.correct;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fidroute

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fidroute/corpus.hpp"

namespace fidroute {

/// A family of questions sharing marker tokens and a known success
/// probability at every fidelity.
struct Archetype {
  std::string name;
  std::vector<std::string> markers;
  /// Aligned with WorldSpec::fidelities.
  std::vector<double> true_p;
  double weight = 1.0;
};

struct WorldSpec {
  std::vector<std::string> fidelities;
  std::vector<Archetype> archetypes;
  std::size_t n_questions = 0;
  std::uint64_t seed = 0;

  void validate() const;
  const Archetype& archetype(std::string_view name) const;
};

struct GeneratedCorpus {
  Dataset dataset;
  /// qid -> archetype name.
  std::map<std::string, std::string> truth;
};

/// Samples an archetype per question, writes its markers followed by 2-5
/// filler words, then draws one Bernoulli(true_p) label per fidelity.
GeneratedCorpus generate(const WorldSpec& spec);

/// The fixed filler vocabulary used to pad generated questions.
const std::vector<std::string>& filler_words();

double true_success(const WorldSpec& spec, const std::string& qid,
                    const std::map<std::string, std::string>& truth, std::string_view fidelity);
/// True probabilities of `qid` along spec.fidelities.
std::vector<double> true_success_vector(const WorldSpec& spec, const std::string& qid,
                                        const std::map<std::string, std::string>& truth);

/// "heterogeneous-mix", "monotone" or "adversarial", over the five
/// edge-cloud fidelity levels.
WorldSpec canned_world(std::string_view name, std::size_t n_questions, std::uint64_t seed);
std::vector<std::string> canned_world_names();

WorldSpec parse_world_spec(std::string_view json_text);
WorldSpec load_world_spec(const std::filesystem::path& path);
std::string world_spec_to_json(const WorldSpec& spec);

void write_truth(std::ostream& out, const GeneratedCorpus& corpus, const Dataset& order);
std::map<std::string, std::string> parse_truth(std::istream& in);
std::map<std::string, std::string> load_truth(const std::filesystem::path& path);

}  // namespace fidroute

#include "fidroute/synthworld.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

#include "fidroute/rng.hpp"

namespace fidroute {

using nlohmann::json;

const std::vector<std::string>& filler_words() {
  // No word here trips a question-type keyword rule.
  static const std::vector<std::string> words = {
      "the",    "a",      "scene",  "image",  "photo",    "picture", "in",     "of",
      "this",   "that",   "near",   "small",  "large",    "old",     "new",    "man",
      "woman",  "dog",    "cat",    "car",    "tree",     "house",   "street", "table",
      "room",   "bus",    "boat",   "bird",   "horse",    "field",   "building", "window",
      "door",   "sky",    "water",  "person", "child",    "group",   "plate",  "food",
      "chair",  "wall",   "road",   "shirt",  "ball",     "train",   "bike",   "kite",
      "umbrella", "lamp"};
  return words;
}

void WorldSpec::validate() const {
  if (fidelities.empty()) throw std::invalid_argument("world spec needs at least one fidelity");
  if (std::set<std::string>(fidelities.begin(), fidelities.end()).size() != fidelities.size())
    throw std::invalid_argument("world spec has duplicate fidelities");
  if (archetypes.empty()) throw std::invalid_argument("world spec needs at least one archetype");
  double total = 0.0;
  std::set<std::string> names;
  for (const auto& a : archetypes) {
    if (!names.insert(a.name).second)
      throw std::invalid_argument(fmt::format("duplicate archetype '{}'", a.name));
    if (a.markers.empty())
      throw std::invalid_argument(fmt::format("archetype '{}' has no marker tokens", a.name));
    if (a.true_p.size() != fidelities.size())
      throw std::invalid_argument(fmt::format("archetype '{}' gives {} probabilities for {} fidelities",
                                              a.name, a.true_p.size(), fidelities.size()));
    for (double p : a.true_p)
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(
            fmt::format("archetype '{}' has probability {} outside [0, 1]", a.name, p));
    if (!(a.weight > 0.0))
      throw std::invalid_argument(fmt::format("archetype '{}' needs a positive weight", a.name));
    total += a.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("archetype weights must sum to a positive value");
}

const Archetype& WorldSpec::archetype(std::string_view name) const {
  for (const auto& a : archetypes)
    if (a.name == name) return a;
  throw std::invalid_argument(fmt::format("unknown archetype '{}'", name));
}

GeneratedCorpus generate(const WorldSpec& spec) {
  spec.validate();
  const auto& fillers = filler_words();
  double total_weight = 0.0;
  for (const auto& a : spec.archetypes) total_weight += a.weight;

  std::size_t digits = 6;
  for (std::size_t n = spec.n_questions; n >= 1000000; n /= 10) ++digits;

  Rng rng(spec.seed);
  std::vector<CorrectnessRecord> records;
  records.reserve(spec.n_questions * spec.fidelities.size());
  GeneratedCorpus out;
  for (std::size_t i = 0; i < spec.n_questions; ++i) {
    const double u = rng.uniform() * total_weight;
    std::size_t k = 0;
    for (double acc = spec.archetypes[0].weight; k + 1 < spec.archetypes.size() && u >= acc;)
      acc += spec.archetypes[++k].weight;
    const Archetype& arch = spec.archetypes[k];

    std::string text;
    for (const auto& m : arch.markers) {
      if (!text.empty()) text.push_back(' ');
      text += m;
    }
    const auto n_fill = 2 + rng.below(4);
    for (std::uint64_t f = 0; f < n_fill; ++f) {
      text.push_back(' ');
      text += fillers[rng.below(fillers.size())];
    }

    const std::string qid = fmt::format("q{:0{}d}", i, digits);
    for (std::size_t f = 0; f < spec.fidelities.size(); ++f)
      records.push_back({qid, text, spec.fidelities[f], rng.uniform() < arch.true_p[f] ? 1 : 0});
    out.truth.emplace(qid, arch.name);
  }
  out.dataset = Dataset(std::move(records));
  return out;
}

double true_success(const WorldSpec& spec, const std::string& qid,
                    const std::map<std::string, std::string>& truth, std::string_view fidelity) {
  auto it = truth.find(qid);
  if (it == truth.end()) throw std::invalid_argument(fmt::format("no ground truth for qid '{}'", qid));
  const auto pos = std::find(spec.fidelities.begin(), spec.fidelities.end(), fidelity);
  if (pos == spec.fidelities.end())
    throw std::invalid_argument(fmt::format("unknown fidelity '{}'", fidelity));
  return spec.archetype(it->second).true_p[static_cast<std::size_t>(pos - spec.fidelities.begin())];
}

std::vector<double> true_success_vector(const WorldSpec& spec, const std::string& qid,
                                        const std::map<std::string, std::string>& truth) {
  auto it = truth.find(qid);
  if (it == truth.end()) throw std::invalid_argument(fmt::format("no ground truth for qid '{}'", qid));
  return spec.archetype(it->second).true_p;
}

namespace {

const std::vector<std::string> kFidelities = {"caption", "resize_32", "jpeg_q1", "jpeg_q10",
                                              "full"};

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

WorldSpec canned_world(std::string_view name, std::size_t n_questions, std::uint64_t seed) {
  WorldSpec spec;
  spec.fidelities = kFidelities;
  spec.n_questions = n_questions;
  spec.seed = seed;
  auto add = [&](std::string n, std::string_view markers, std::vector<double> p, double w) {
    spec.archetypes.push_back({std::move(n), words(markers), std::move(p), w});
  };

  if (name == "heterogeneous-mix") {
    // Each archetype saturates at a different level, so every fixed choice
    // either overpays on easy questions or underserves hard ones.
    add("yes_no", "is there a", {0.93, 0.93, 0.93, 0.93, 0.93}, 0.4);
    add("color", "what color is the", {0.30, 0.86, 0.86, 0.86, 0.86}, 0.2);
    add("counting", "how many", {0.15, 0.30, 0.86, 0.86, 0.86}, 0.2);
    add("text_reading", "what is written on", {0.05, 0.15, 0.45, 0.88, 0.90}, 0.2);
  } else if (name == "monotone") {
    // Full resolution is clearly the most accurate level for every archetype.
    add("yes_no", "is there a", {0.70, 0.74, 0.77, 0.80, 0.92}, 0.25);
    add("color", "what color is the", {0.30, 0.55, 0.68, 0.75, 0.88}, 0.2);
    add("counting", "how many", {0.10, 0.25, 0.45, 0.60, 0.80}, 0.2);
    add("text_reading", "what is written on", {0.02, 0.05, 0.20, 0.50, 0.75}, 0.15);
    add("location", "where is the", {0.40, 0.48, 0.56, 0.64, 0.80}, 0.2);
  } else if (name == "adversarial") {
    // plateau_jump: flat first step hides a large gain two levels up.
    // dip: non-monotone in fidelity.
    add("yes_no", "is there a", {0.90, 0.90, 0.91, 0.91, 0.92}, 0.3);
    add("plateau_jump", "what sport is", {0.50, 0.52, 0.90, 0.91, 0.92}, 0.25);
    add("dip", "why is the", {0.60, 0.30, 0.35, 0.85, 0.88}, 0.2);
    add("counting", "how many", {0.15, 0.30, 0.86, 0.86, 0.86}, 0.25);
  } else {
    throw std::invalid_argument(fmt::format("unknown canned world '{}'", name));
  }
  return spec;
}

std::vector<std::string> canned_world_names() {
  return {"heterogeneous-mix", "monotone", "adversarial"};
}

WorldSpec parse_world_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("malformed world spec JSON: {}", e.what()));
  }
  try {
    WorldSpec spec;
    spec.fidelities = j.at("fidelities").get<std::vector<std::string>>();
    spec.n_questions = j.at("n_questions").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& a : j.at("archetypes")) {
      Archetype arch;
      arch.name = a.at("name").get<std::string>();
      arch.markers = a.at("markers").get<std::vector<std::string>>();
      arch.weight = a.value("weight", 1.0);
      const auto& tp = a.at("true_p");
      for (const auto& f : spec.fidelities) {
        if (!tp.contains(f))
          throw std::invalid_argument(
              fmt::format("archetype '{}' has no true_p for fidelity '{}'", arch.name, f));
        arch.true_p.push_back(tp.at(f).get<double>());
      }
      spec.archetypes.push_back(std::move(arch));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("invalid world spec: {}", e.what()));
  }
}

WorldSpec load_world_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open world spec '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_world_spec(ss.str());
}

std::string world_spec_to_json(const WorldSpec& spec) {
  nlohmann::ordered_json j;
  j["fidelities"] = spec.fidelities;
  j["n_questions"] = spec.n_questions;
  j["seed"] = spec.seed;
  auto& arr = j["archetypes"] = nlohmann::ordered_json::array();
  for (const auto& a : spec.archetypes) {
    nlohmann::ordered_json tp = nlohmann::ordered_json::object();
    for (std::size_t f = 0; f < spec.fidelities.size(); ++f) tp[spec.fidelities[f]] = a.true_p[f];
    arr.push_back({{"name", a.name}, {"markers", a.markers}, {"true_p", tp}, {"weight", a.weight}});
  }
  return j.dump(2);
}

void write_truth(std::ostream& out, const GeneratedCorpus& corpus, const Dataset& order) {
  for (const auto& qid : order.qids()) {
    nlohmann::ordered_json j;
    j["qid"] = qid;
    j["archetype"] = corpus.truth.at(qid);
    out << j.dump() << '\n';
  }
}

std::map<std::string, std::string> parse_truth(std::istream& in) {
  std::map<std::string, std::string> truth;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      truth[j.at("qid").get<std::string>()] = j.at("archetype").get<std::string>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(fmt::format("truth line {}: {}", line_no, e.what()));
    }
  }
  return truth;
}

std::map<std::string, std::string> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open truth file '{}'", path.string()));
  return parse_truth(in);
}

}  // namespace fidroute

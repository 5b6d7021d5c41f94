#include "fidroute/serialize.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

namespace fidroute {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json parse_or_throw(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("malformed {} JSON: {}", what, e.what()));
  }
}

ordered_json node_json(const RegressionTree& tree, std::size_t i) {
  const auto& n = tree.nodes.at(i);
  if (n.is_leaf()) return {{"leaf", n.value}};
  ordered_json j;
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["left"] = node_json(tree, static_cast<std::size_t>(n.left));
  j["right"] = node_json(tree, static_cast<std::size_t>(n.right));
  return j;
}

// Preorder, the same order the trainer allocates nodes in.
int read_node(const json& j, RegressionTree& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    tree.nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
    return id;
  }
  TreeNode n;
  n.feature = j.at("feature").get<int>();
  n.threshold = j.at("threshold").get<double>();
  if (n.feature < 0) throw ArtifactError("split node with negative feature index");
  n.left = read_node(j.at("left"), tree);
  n.right = read_node(j.at("right"), tree);
  tree.nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

ordered_json model_json(const BoostedModel& model) {
  ordered_json j;
  j["base_value"] = model.base_value;
  j["learning_rate"] = model.learning_rate;
  j["n_columns"] = model.n_columns;
  auto& trees = j["trees"] = ordered_json::array();
  for (const auto& t : model.trees) trees.push_back(t.nodes.empty() ? ordered_json{{"leaf", 0.0}} : node_json(t, 0));
  return j;
}

BoostedModel model_from(const json& j) {
  BoostedModel m;
  m.base_value = j.at("base_value").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.n_columns = j.at("n_columns").get<std::size_t>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    read_node(t, tree);
    for (const auto& n : tree.nodes)
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= m.n_columns)
        throw ArtifactError(fmt::format("tree splits on column {} of {}", n.feature, m.n_columns));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

ordered_json calibrator_json(const Calibrator& calibrator) {
  ordered_json j;
  if (const auto* iso = std::get_if<IsotonicCalibrator>(&calibrator)) {
    j["type"] = "isotonic";
    j["sigmoid_input"] = iso->sigmoid_input;
    j["knot_x"] = iso->knot_x;
    j["knot_y"] = iso->knot_y;
  } else if (const auto* t = std::get_if<TemperatureCalibrator>(&calibrator)) {
    j["type"] = "temperature";
    j["temperature"] = t->temperature;
  } else {
    j["type"] = "clip";
  }
  return j;
}

Calibrator calibrator_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "clip") return ClipCalibrator{};
  if (type == "temperature") {
    TemperatureCalibrator t{j.at("temperature").get<double>()};
    if (!(t.temperature > 0.0)) throw ArtifactError("temperature must be positive");
    return t;
  }
  if (type == "isotonic") {
    IsotonicCalibrator c;
    c.knot_x = j.at("knot_x").get<std::vector<double>>();
    c.knot_y = j.at("knot_y").get<std::vector<double>>();
    c.sigmoid_input = j.value("sigmoid_input", false);
    if (c.knot_x.empty() || c.knot_x.size() != c.knot_y.size())
      throw ArtifactError("isotonic calibrator needs matching, non-empty knot arrays");
    for (std::size_t i = 1; i < c.knot_x.size(); ++i)
      if (!(c.knot_x[i] > c.knot_x[i - 1]) || c.knot_y[i] < c.knot_y[i - 1])
        throw ArtifactError("isotonic knots must increase");
    return c;
  }
  throw ArtifactError(fmt::format("unknown calibrator type '{}'", type));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError(fmt::format("cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw ArtifactError(fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

std::string vocabulary_to_json(const Vocabulary& vocab) {
  ordered_json j;
  j["n_docs"] = vocab.n_docs();
  auto& terms = j["terms"] = ordered_json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i)
    terms.push_back({{"t", vocab.terms()[i]}, {"df", vocab.doc_freq(i)}});
  return j.dump();
}

Vocabulary vocabulary_from_json(std::string_view text) {
  const auto j = parse_or_throw(text, "vocabulary");
  try {
    std::vector<std::pair<std::string, std::int64_t>> terms;
    for (const auto& t : j.at("terms"))
      terms.emplace_back(t.at("t").get<std::string>(), t.at("df").get<std::int64_t>());
    return Vocabulary(std::move(terms), j.at("n_docs").get<std::int64_t>());
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("invalid vocabulary: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ArtifactError(fmt::format("invalid vocabulary: {}", e.what()));
  }
}

std::string model_to_json(const BoostedModel& model) { return model_json(model).dump(); }

BoostedModel model_from_json(std::string_view text) {
  try {
    return model_from(parse_or_throw(text, "model"));
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("invalid model: {}", e.what()));
  }
}

std::string calibrator_to_json(const Calibrator& calibrator) {
  return calibrator_json(calibrator).dump();
}

Calibrator calibrator_from_json(std::string_view text) {
  try {
    return calibrator_from(parse_or_throw(text, "calibrator"));
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("invalid calibrator: {}", e.what()));
  }
}

void save_bank(const std::filesystem::path& dir, const BankArtifact& artifact) {
  std::filesystem::create_directories(dir);
  const auto& predictors = artifact.bank.predictors();

  ordered_json manifest;
  manifest["format"] = 1;
  manifest["profile"] = artifact.profile;
  manifest["fidelities"] = artifact.bank.fidelity_ids();
  manifest["lambda"] = artifact.policy.lambda;
  manifest["tau"] = artifact.policy.tau;
  manifest["marginal_cost"] = artifact.policy.marginal_cost;
  manifest["calibration"] = std::string(to_string(artifact.calibration));
  manifest["gbr"] = {{"n_estimators", artifact.gbr.n_estimators},
                     {"learning_rate", artifact.gbr.learning_rate},
                     {"max_depth", artifact.gbr.max_depth},
                     {"min_samples_split", artifact.gbr.min_samples_split},
                     {"seed", artifact.gbr.seed}};
  auto& files = manifest["predictors"] = ordered_json::array();
  for (std::size_t i = 0; i < predictors.size(); ++i) {
    const auto name = fmt::format("predictor_{}.json", i);
    files.push_back(name);
    ordered_json p;
    p["fidelity"] = predictors[i].fidelity;
    p["model"] = model_json(predictors[i].model);
    p["calibrator"] = calibrator_json(predictors[i].calibrator);
    write_file(dir / name, p.dump() + "\n");
  }
  write_file(dir / "vocabulary.json", vocabulary_to_json(artifact.bank.vocabulary()) + "\n");
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

BankArtifact load_bank(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.json"))
    throw ArtifactError(fmt::format("no model manifest in '{}'", dir.string()));
  const auto manifest = parse_or_throw(read_file(dir / "manifest.json"), "manifest");
  try {
    BankArtifact a;
    a.profile = manifest.value("profile", std::string{});
    a.policy.lambda = manifest.at("lambda").get<double>();
    a.policy.tau = manifest.at("tau").get<double>();
    a.policy.marginal_cost = manifest.value("marginal_cost", false);
    a.calibration = parse_calibration_method(manifest.at("calibration").get<std::string>());
    const auto& g = manifest.at("gbr");
    a.gbr.n_estimators = g.at("n_estimators").get<int>();
    a.gbr.learning_rate = g.at("learning_rate").get<double>();
    a.gbr.max_depth = g.at("max_depth").get<int>();
    a.gbr.min_samples_split = g.at("min_samples_split").get<int>();
    a.gbr.seed = g.value("seed", std::uint64_t{0});

    const auto fidelities = manifest.at("fidelities").get<std::vector<std::string>>();
    const auto files = manifest.at("predictors").get<std::vector<std::string>>();
    if (files.size() != fidelities.size())
      throw ArtifactError("manifest lists a different number of predictors and fidelities");

    std::vector<FidelityPredictor> predictors;
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto p = parse_or_throw(read_file(dir / files[i]), "predictor");
      FidelityPredictor fp;
      fp.fidelity = p.at("fidelity").get<std::string>();
      if (fp.fidelity != fidelities[i])
        throw ArtifactError(fmt::format("predictor file '{}' holds fidelity '{}', manifest says '{}'",
                                        files[i], fp.fidelity, fidelities[i]));
      fp.model = model_from(p.at("model"));
      fp.calibrator = calibrator_from(p.at("calibrator"));
      predictors.push_back(std::move(fp));
    }
    a.bank = PredictorBank(vocabulary_from_json(read_file(dir / "vocabulary.json")),
                           std::move(predictors));
    return a;
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("invalid model artifacts in '{}': {}", dir.string(), e.what()));
  } catch (const std::invalid_argument& e) {
    throw ArtifactError(fmt::format("invalid model artifacts in '{}': {}", dir.string(), e.what()));
  }
}

}  // namespace fidroute

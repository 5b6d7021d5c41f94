#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "fidroute/harness.hpp"
#include "fidroute/serialize.hpp"
#include "fidroute/synthworld.hpp"

namespace fidroute::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string profile = "edge-cloud";
  std::string out = "out";
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) items.push_back(item);
  return items;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

WorldSpec resolve_world(const std::string& name_or_path) {
  const auto names = canned_world_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return canned_world(name_or_path, 0, 0);
  if (!fs::exists(name_or_path))
    throw std::invalid_argument(fmt::format("world '{}' is neither a canned world nor a readable file",
                                            name_or_path));
  return load_world_spec(name_or_path);
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
  std::string world = "heterogeneous-mix";
  std::optional<std::size_t> n;
};

int cmd_gen(const Globals& g, const GenArgs& a, std::ostream& out) {
  WorldSpec spec = resolve_world(a.world);
  if (a.n) spec.n_questions = *a.n;
  else if (spec.n_questions == 0) spec.n_questions = 1000;
  if (g.seed_given || spec.seed == 0) spec.seed = g.seed;

  const GeneratedCorpus corpus = generate(spec);
  fs::create_directories(g.out);
  std::ostringstream records, truth;
  write_records(records, corpus.dataset);
  write_truth(truth, corpus, corpus.dataset);
  write_text(fs::path(g.out) / "corpus.jsonl", records.str());
  write_text(fs::path(g.out) / "truth.jsonl", truth.str());
  write_text(fs::path(g.out) / "world.json", world_spec_to_json(spec) + "\n");
  fmt::print(out, "wrote {} records for {} questions to {}\n", corpus.dataset.records().size(),
             spec.n_questions, g.out);
  return 0;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string calibration = "isotonic";
  std::string grid;
  std::optional<double> lambda;
  std::optional<double> tau;
};

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
  const CostProfile profile = resolve_profile(g.profile);
  const Dataset data = load_records(a.data);
  const auto rows = group_by_question(data, profile.ids());
  const GridSpec grid = a.grid.empty() ? GridSpec::defaults() : load_grid_spec(a.grid);
  SearchOptions search;
  search.calibration = parse_calibration_method(a.calibration);

  GridChoice choice;
  choice.gbr = grid.gbr_configs.front();
  if (!a.lambda || !a.tau || grid.gbr_configs.size() > 1) {
    // Hold one of five folds out for validation, as inside each CV fold.
    const FoldAssignment folds = assign_folds(data, 5, g.seed);
    std::vector<QuestionRow> inner, validation;
    for (const auto& r : rows) (folds.fold_of(r.qid) == 4 ? validation : inner).push_back(r);
    choice = grid_search(inner, validation, grid, profile, search);
  }
  if (a.lambda) choice.policy.lambda = *a.lambda;
  if (a.tau) choice.policy.tau = *a.tau;
  choice.policy.validate();

  BankArtifact artifact;
  artifact.gbr = choice.gbr;
  artifact.policy = choice.policy;
  artifact.calibration = search.calibration;
  artifact.profile = g.profile;
  artifact.bank = train_bank(rows, profile.ids(), search.vocab, choice.gbr, search.calibration);
  save_bank(g.out, artifact);
  fmt::print(out, "trained {} predictors on {} questions; lambda={} tau={}; saved to {}\n",
             profile.size(), rows.size(), choice.policy.lambda, choice.policy.tau, g.out);
  return 0;
}

// --- route -----------------------------------------------------------------

struct RouteArgs {
  std::string model;
  std::string question;
  std::optional<double> lambda;
  std::optional<double> tau;
};

int cmd_route(const Globals& g, const RouteArgs& a, std::ostream& out) {
  const CostProfile profile = resolve_profile(g.profile);
  const BankArtifact artifact = load_bank(a.model);
  artifact.bank.check_covers(profile);
  PolicyConfig config = artifact.policy;
  if (a.lambda) config.lambda = *a.lambda;
  if (a.tau) config.tau = *a.tau;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const RoutingDecision d = route_greedy(artifact.bank, a.question, config, profile);
  const auto stop = std::chrono::steady_clock::now();

  auto j = to_json(d, profile.ids());
  const double us = std::chrono::duration<double, std::micro>(stop - start).count();
  j["route_us"] = std::max(us, 1e-3);
  out << j.dump(2) << '\n';
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string policies;
  std::string truth;
  std::string world;
  std::string grid;
  std::string calibration = "isotonic";
  int k = 5;
};

std::vector<PolicySpec> eval_policies(const EvalArgs& a, const CostProfile& profile, bool have_truth) {
  std::vector<std::string> names;
  if (a.policies.empty()) {
    names = {"voi", "argmax", "accuracy-only", "fixed-threshold"};
    if (have_truth) names.push_back("oracle");
    for (const auto& id : profile.ids()) names.push_back(id + "-only");
  } else {
    names = split_list(a.policies);
  }
  std::vector<PolicySpec> out;
  for (const auto& n : names) out.push_back(parse_policy(n, profile));
  return out;
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const CostProfile profile = resolve_profile(g.profile);
  const Dataset data = load_records(a.data);

  std::optional<TrueProbs> truth;
  if (!a.truth.empty()) {
    if (a.world.empty()) throw std::invalid_argument("--truth needs --world to look up archetypes");
    const WorldSpec world = resolve_world(a.world);
    const auto archetypes = load_truth(a.truth);
    truth.emplace();
    for (const auto& qid : data.qids()) {
      std::vector<double> p;
      for (const auto& id : profile.ids()) p.push_back(true_success(world, qid, archetypes, id));
      truth->emplace(qid, std::move(p));
    }
  }

  CvOptions options;
  options.k = a.k;
  options.seed = g.seed;
  options.grid = a.grid.empty() ? GridSpec::defaults() : load_grid_spec(a.grid);
  options.search.calibration = parse_calibration_method(a.calibration);
  options.policies = eval_policies(a, profile, truth.has_value());
  for (const auto& p : options.policies)
    if (p.kind == PolicyKind::Oracle && !truth)
      throw std::invalid_argument("the oracle policy needs --truth and --world");
  options.truth = truth ? &*truth : nullptr;

  const CvResult result = run_cv(data, profile, options);
  const std::string report = report_to_json(result, profile);
  const auto points = points_from_report_json(report);

  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "reports.json", report);
  write_text(fs::path(g.out) / "pareto.csv", pareto_csv(points));

  fmt::print(out, "{:<20} {:>10} {:>10}\n", "policy", "accuracy%", "avg_cost");
  for (const auto& [name, r] : result.reports)
    fmt::print(out, "{:<20} {:>10.1f} {:>10.1f}\n", name, 100.0 * r.accuracy, r.avg_cost);
  return 0;
}

// --- costs / pareto --------------------------------------------------------

int cmd_costs(const Globals& g, const std::string& positional, std::ostream& out) {
  const CostProfile profile = resolve_profile(positional.empty() ? g.profile : positional);
  const auto& full = profile.levels().back();
  fmt::print(out, "{:<12} {:>10} {:>10} {:>10} {:>8}\n", "level", "size_kb", "r", "raw_cost", "cost");
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto& l = profile.levels()[i];
    fmt::print(out, "{:<12} {:>10.2f} {:>10.2e} {:>10.4f} {:>8.1f}\n", l.id, l.avg_size_kb,
               size_ratio(l, full), raw_cost(l, profile), profile.costs()[i]);
  }
  return 0;
}

int cmd_pareto(const Globals& g, const std::string& report_path, bool to_stdout, std::ostream& out) {
  const auto points = points_from_report_json(read_text(report_path));
  const std::string csv = pareto_csv(points);
  if (to_stdout) {
    out << csv;
    return 0;
  }
  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "pareto.csv", csv);
  fmt::print(out, "{} points, {} on the frontier\n", points.size(), pareto_frontier(points).size());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-aware fidelity routing: generate, train, route and evaluate."};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->each([&](const std::string&) {
    g.seed_given = true;
  });
  app.add_option("--profile", g.profile, "Cost profile name or JSON file")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus with known truth");
  gen_cmd->add_option("--world", gen.world, "Canned world name or world spec JSON")
      ->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of questions");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a predictor bank and save it to --out");
  train_cmd->add_option("--data", train.data, "Correctness log (JSON lines)")->required();
  train_cmd->add_option("--calibration", train.calibration, "none|isotonic|isotonic-sigmoid|temperature")
      ->capture_default_str();
  train_cmd->add_option("--grid", train.grid, "Grid spec JSON");
  train_cmd->add_option("--lambda", train.lambda, "Fix lambda instead of searching");
  train_cmd->add_option("--tau", train.tau, "Fix tau instead of searching");

  RouteArgs route;
  auto* route_cmd = app.add_subcommand("route", "Route one question through a trained bank");
  route_cmd->add_option("--model", route.model, "Directory written by train")->required();
  route_cmd->add_option("question,--question", route.question, "Question text")->required();
  route_cmd->add_option("--lambda", route.lambda, "Override the trained lambda");
  route_cmd->add_option("--tau", route.tau, "Override the trained tau");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validate policies and write reports");
  eval_cmd->add_option("--data", eval.data, "Correctness log (JSON lines)")->required();
  eval_cmd->add_option("--policies", eval.policies, "Comma-separated policy names");
  eval_cmd->add_option("--truth", eval.truth, "Truth sidecar from gen (enables oracle)");
  eval_cmd->add_option("--world", eval.world, "World the truth file refers to");
  eval_cmd->add_option("--grid", eval.grid, "Grid spec JSON");
  eval_cmd->add_option("--calibration", eval.calibration, "none|isotonic|isotonic-sigmoid|temperature")
      ->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Fold count")->capture_default_str();

  std::string costs_profile;
  auto* costs_cmd = app.add_subcommand("costs", "Print the normalized cost table");
  costs_cmd->add_option("profile", costs_profile, "Profile name or file (defaults to --profile)");

  std::string report_path;
  bool pareto_stdout = false;
  auto* pareto_cmd = app.add_subcommand("pareto", "Export the Pareto CSV from a report");
  pareto_cmd->add_option("--report", report_path, "reports.json written by eval")->required();
  pareto_cmd->add_flag("--stdout", pareto_stdout, "Print the CSV instead of writing it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen_cmd) return cmd_gen(g, gen, out);
    if (*train_cmd) return cmd_train(g, train, out);
    if (*route_cmd) return cmd_route(g, route, out);
    if (*eval_cmd) return cmd_eval(g, eval, out);
    if (*costs_cmd) return cmd_costs(g, costs_profile, out);
    if (*pareto_cmd) return cmd_pareto(g, report_path, pareto_stdout, out);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace fidroute::cli

#include "fidroute/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

namespace fidroute {

using nlohmann::json;
using nlohmann::ordered_json;

void GridSpec::validate() const {
  if (lambda_values.empty() || tau_values.empty() || gbr_configs.empty())
    throw std::invalid_argument("grid needs at least one lambda, one tau and one GBR config");
  for (double l : lambda_values)
    if (!(l >= 0.0)) throw std::invalid_argument(fmt::format("grid lambda {} is negative", l));
  for (double t : tau_values)
    if (!(t >= 0.0)) throw std::invalid_argument(fmt::format("grid tau {} is negative", t));
  for (const auto& c : gbr_configs) c.validate();
}

GridSpec GridSpec::defaults() {
  return GridSpec{{0.0005, 0.001, 0.002, 0.004, 0.008}, {0.0, 0.01, 0.02, 0.05}, {TrainConfig{}}};
}

GridSpec parse_grid_spec(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    GridSpec grid = GridSpec::defaults();
    if (j.contains("lambda")) grid.lambda_values = j.at("lambda").get<std::vector<double>>();
    if (j.contains("tau")) grid.tau_values = j.at("tau").get<std::vector<double>>();
    if (j.contains("gbr")) {
      grid.gbr_configs.clear();
      for (const auto& g : j.at("gbr")) {
        TrainConfig c;
        c.n_estimators = g.value("n_estimators", c.n_estimators);
        c.learning_rate = g.value("learning_rate", c.learning_rate);
        c.max_depth = g.value("max_depth", c.max_depth);
        c.min_samples_split = g.value("min_samples_split", c.min_samples_split);
        grid.gbr_configs.push_back(c);
      }
    }
    grid.validate();
    return grid;
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("invalid grid spec: {}", e.what()));
  }
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open grid spec '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_spec(ss.str());
}

namespace {

Calibrator fit_calibrator(CalibrationMethod method, std::span<const double> scores,
                          std::span<const int> labels) {
  switch (method) {
    case CalibrationMethod::None:
      return ClipCalibrator{};
    case CalibrationMethod::Isotonic:
      return fit_isotonic(scores, labels);
    case CalibrationMethod::IsotonicSigmoid:
      return fit_isotonic(scores, labels, true);
    case CalibrationMethod::Temperature:
      try {
        return fit_temperature(scores, labels);
      } catch (const CalibrationError&) {
        // All labels agree: only a constant map fits, which isotonic gives.
        return fit_isotonic(scores, labels);
      }
  }
  throw std::logic_error("unhandled calibration method");
}

}  // namespace

PredictorBank train_bank(std::span<const QuestionRow> train, std::span<const std::string> fidelities,
                         const VocabularyOptions& vocab_options, const TrainConfig& gbr,
                         CalibrationMethod calibration, double holdout) {
  if (train.empty()) throw std::invalid_argument("cannot train a bank on zero questions");
  if (!(holdout >= 0.0 && holdout < 1.0))
    throw std::invalid_argument(fmt::format("calibration holdout {} is outside [0, 1)", holdout));
  std::vector<std::string> texts;
  texts.reserve(train.size());
  for (const auto& r : train) texts.push_back(r.text);
  Vocabulary vocab = fit_vocabulary(texts, vocab_options);

  std::vector<FeatureVector> features;
  features.reserve(train.size());
  for (const auto& r : train) features.push_back(featurize(r.text, vocab));

  // Row i is held out when the running count floor(i * holdout) steps up.
  std::vector<bool> held_out(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    held_out[i] = std::floor(static_cast<double>(i + 1) * holdout) > std::floor(static_cast<double>(i) * holdout);

  std::vector<FidelityPredictor> predictors;
  for (std::size_t f = 0; f < fidelities.size(); ++f) {
    std::vector<std::size_t> fit_rows, cal_rows;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].labels.size() != fidelities.size())
        throw std::invalid_argument(fmt::format("question '{}' is not laid out on the fidelity list",
                                                train[i].qid));
      if (train[i].labels[f]) (held_out[i] ? cal_rows : fit_rows).push_back(i);
    }
    if (fit_rows.empty() && cal_rows.empty())
      throw std::invalid_argument(
          fmt::format("fidelity '{}' has no training records", fidelities[f]));
    if (fit_rows.empty() || cal_rows.empty()) {
      fit_rows.insert(fit_rows.end(), cal_rows.begin(), cal_rows.end());
      std::sort(fit_rows.begin(), fit_rows.end());
      cal_rows = fit_rows;
    }

    std::vector<FeatureVector> rows;
    std::vector<double> targets;
    for (auto i : fit_rows) {
      rows.push_back(features[i]);
      targets.push_back(*train[i].labels[f]);
    }
    FidelityPredictor p;
    p.fidelity = fidelities[f];
    p.model = fit(rows, targets, gbr);

    std::vector<double> scores;
    std::vector<int> labels;
    for (auto i : cal_rows) {
      scores.push_back(predict(p.model, features[i]));
      labels.push_back(*train[i].labels[f]);
    }
    p.calibrator = fit_calibrator(calibration, scores, labels);
    predictors.push_back(std::move(p));
  }
  return PredictorBank(std::move(vocab), std::move(predictors));
}

PolicySpec parse_policy(std::string_view name, const CostProfile& profile) {
  PolicySpec p;
  p.name = std::string(name);
  if (name == "voi") {
    p.kind = PolicyKind::Voi;
  } else if (name == "argmax") {
    p.kind = PolicyKind::ArgmaxUtility;
  } else if (name == "accuracy-only") {
    p.kind = PolicyKind::AccuracyOnly;
  } else if (name == "oracle") {
    p.kind = PolicyKind::Oracle;
  } else if (name == "fixed-threshold") {
    p.kind = PolicyKind::FixedThreshold;
    p.base = 0;
    const auto& ids = profile.ids();
    const bool has_q10 = std::find(ids.begin(), ids.end(), "jpeg_q10") != ids.end();
    p.target = has_q10 ? profile.index_of("jpeg_q10") : profile.size() - 1;
  } else {
    constexpr std::string_view suffix = "-only";
    const auto& ids = profile.ids();
    if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix) {
      const auto level = name.substr(0, name.size() - suffix.size());
      if (std::find(ids.begin(), ids.end(), level) != ids.end()) {
        p.kind = PolicyKind::FixedLevel;
        p.level = profile.index_of(level);
        return p;
      }
    }
    std::string valid;
    for (const auto& n : policy_names(profile)) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument(fmt::format("unknown policy '{}' (valid: {})", name, valid));
  }
  return p;
}

std::vector<std::string> policy_names(const CostProfile& profile) {
  std::vector<std::string> names = {"voi", "argmax", "accuracy-only", "fixed-threshold", "oracle"};
  for (const auto& id : profile.ids()) names.push_back(id + "-only");
  return names;
}

ScoredQuestions score_questions(const PredictorBank& bank, std::span<const QuestionRow> rows) {
  ScoredQuestions out;
  out.rows.assign(rows.begin(), rows.end());
  out.probs.reserve(rows.size());
  for (const auto& r : rows) out.probs.push_back(predict_success(bank, r.text));
  return out;
}

RoutingDecision route_with(const PolicySpec& policy, const PolicyConfig& config,
                           std::span<const double> probs, std::span<const double> costs,
                           const std::vector<double>* true_probs) {
  if (policy.kind == PolicyKind::Voi) return route_greedy(probs, costs, config);

  check_routing_inputs(probs, costs);
  RoutingDecision d;
  d.probs.assign(probs.begin(), probs.end());
  switch (policy.kind) {
    case PolicyKind::ArgmaxUtility:
      d.selected = route_argmax_utility(probs, costs, config.lambda);
      break;
    case PolicyKind::AccuracyOnly:
      d.selected = route_accuracy_only(probs);
      break;
    case PolicyKind::FixedThreshold:
      d.selected = route_fixed_threshold(probs, policy.base, policy.target, policy.cutoff);
      break;
    case PolicyKind::Oracle:
      if (!true_probs)
        throw std::invalid_argument("the oracle policy needs ground-truth probabilities");
      d.selected = oracle_select(*true_probs, costs, config.lambda);
      break;
    case PolicyKind::FixedLevel:
      if (policy.level >= costs.size()) throw std::invalid_argument("fixed level out of range");
      d.selected = policy.level;
      break;
    case PolicyKind::Voi:
      break;
  }
  d.cost = costs[d.selected];
  return d;
}

EvalMetrics evaluate_policy(const ScoredQuestions& scored, const PolicySpec& policy,
                            const PolicyConfig& config, const CostProfile& profile,
                            const TrueProbs* truth, const DecisionObserver& observer) {
  const auto& costs = profile.costs();
  const auto& ids = profile.ids();
  EvalMetrics m;
  m.fidelity_distribution.assign(profile.size(), 0.0);
  if (scored.rows.empty()) throw std::invalid_argument("cannot evaluate on zero questions");

  double correct = 0.0, sq_all = 0.0, sq_sel = 0.0;
  std::size_t n_all = 0;
  for (std::size_t i = 0; i < scored.rows.size(); ++i) {
    const auto& row = scored.rows[i];
    const auto& probs = scored.probs[i];
    const std::vector<double>* tp = nullptr;
    if (truth) {
      auto it = truth->find(row.qid);
      if (it == truth->end())
        throw std::invalid_argument(fmt::format("no ground truth for qid '{}'", row.qid));
      tp = &it->second;
    }
    const RoutingDecision d = route_with(policy, config, probs, costs, tp);
    if (observer) observer(policy.name, config, d);

    const auto& label = row.labels.at(d.selected);
    if (!label)
      throw std::invalid_argument(fmt::format("no logged label for (qid '{}', fidelity '{}')",
                                              row.qid, ids[d.selected]));
    correct += *label;
    m.fidelity_distribution[d.selected] += 1.0;
    sq_sel += (probs[d.selected] - *label) * (probs[d.selected] - *label);
    for (std::size_t f = 0; f < row.labels.size(); ++f)
      if (row.labels[f]) {
        sq_all += (probs[f] - *row.labels[f]) * (probs[f] - *row.labels[f]);
        ++n_all;
      }
  }
  const double n = static_cast<double>(scored.rows.size());
  m.n = scored.rows.size();
  m.accuracy = correct / n;
  m.brier = sq_all / static_cast<double>(n_all);
  m.brier_selected = sq_sel / n;
  // Averaging through the selection shares keeps a constant policy's cost
  // exactly equal to its level's cost.
  for (std::size_t f = 0; f < costs.size(); ++f) {
    m.fidelity_distribution[f] /= n;
    m.avg_cost += m.fidelity_distribution[f] * costs[f];
  }
  m.avg_cost = std::clamp(m.avg_cost, costs.front(), costs.back());
  return m;
}

EvalMetrics evaluate_policy(const PredictorBank& bank, const PolicySpec& policy,
                            const PolicyConfig& config, std::span<const QuestionRow> rows,
                            const CostProfile& profile, const TrueProbs* truth) {
  bank.check_covers(profile);
  return evaluate_policy(score_questions(bank, rows), policy, config, profile, truth);
}

namespace {

bool better_choice(const GridChoice& a, const GridChoice& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.avg_cost != b.avg_cost) return a.avg_cost < b.avg_cost;
  if (a.policy.lambda != b.policy.lambda) return a.policy.lambda < b.policy.lambda;
  return a.policy.tau < b.policy.tau;
}

}  // namespace

GridChoice grid_search(std::span<const QuestionRow> inner_train,
                       std::span<const QuestionRow> validation, const GridSpec& grid,
                       const CostProfile& profile, const SearchOptions& options) {
  grid.validate();
  if (validation.empty()) throw std::invalid_argument("grid search needs validation questions");
  const PolicySpec voi{.name = "voi", .kind = PolicyKind::Voi};

  std::optional<GridChoice> best;
  for (const auto& gbr : grid.gbr_configs) {
    const PredictorBank bank =
        train_bank(inner_train, profile.ids(), options.vocab, gbr, options.calibration);
    const ScoredQuestions scored = score_questions(bank, validation);
    for (double lambda : grid.lambda_values)
      for (double tau : grid.tau_values) {
        GridChoice c;
        c.gbr = gbr;
        c.policy = PolicyConfig{.lambda = lambda, .tau = tau};
        const EvalMetrics m = evaluate_policy(scored, voi, c.policy, profile);
        c.accuracy = m.accuracy;
        c.avg_cost = m.avg_cost;
        c.score = m.accuracy - options.lambda_obj * m.avg_cost / CostProfile::kNormalizationTarget;
        if (!best || better_choice(c, *best)) best = c;
      }
  }
  return *best;
}

const EvalReport& CvResult::report(std::string_view policy) const {
  for (const auto& [name, r] : reports)
    if (name == policy) return r;
  throw std::invalid_argument(fmt::format("no report for policy '{}'", policy));
}

CvResult run_cv(const Dataset& dataset, const CostProfile& profile, const CvOptions& options) {
  if (options.policies.empty()) throw std::invalid_argument("no policies to evaluate");
  const auto rows = group_by_question(dataset, profile.ids());
  const FoldAssignment folds = assign_folds(dataset, options.k, options.seed);

  CvResult result;
  for (const auto& p : options.policies) {
    EvalReport r;
    r.fidelity_distribution.assign(profile.size(), 0.0);
    result.reports.emplace_back(p.name, std::move(r));
  }

  for (int fold = 0; fold < options.k; ++fold) {
    const int validation_fold = fold == options.k - 1 ? options.k - 2 : options.k - 1;
    std::vector<QuestionRow> train, test, inner_train, validation;
    for (const auto& r : rows) {
      const int f = folds.fold_of(r.qid);
      if (f == fold) {
        test.push_back(r);
        continue;
      }
      train.push_back(r);
      (f == validation_fold ? validation : inner_train).push_back(r);
    }

    FoldSummary summary;
    summary.fold = fold;
    for (const auto& r : test) summary.test_qids.push_back(r.qid);

    summary.choice = grid_search(inner_train, validation, options.grid, profile, options.search);
    const PredictorBank bank = train_bank(train, profile.ids(), options.search.vocab,
                                          summary.choice.gbr, options.search.calibration);

    // The inner banks share one vocabulary fitted on inner_train; record it
    // alongside the final one for leakage audits.
    std::vector<std::string> inner_texts;
    for (const auto& r : inner_train) inner_texts.push_back(r.text);
    summary.vocabularies.push_back(fit_vocabulary(inner_texts, options.search.vocab));
    summary.vocabularies.push_back(bank.vocabulary());

    const ScoredQuestions scored = score_questions(bank, test);
    for (std::size_t p = 0; p < options.policies.size(); ++p) {
      const EvalMetrics m = evaluate_policy(scored, options.policies[p], summary.choice.policy,
                                            profile, options.truth, options.observer);
      result.reports[p].second.per_fold.push_back(m);
    }
    result.folds.push_back(std::move(summary));
  }

  for (auto& [name, r] : result.reports) {
    const double k = static_cast<double>(r.per_fold.size());
    for (const auto& m : r.per_fold) {
      r.accuracy += m.accuracy / k;
      r.avg_cost += m.avg_cost / k;
      r.brier += m.brier / k;
      r.brier_selected += m.brier_selected / k;
      r.n += m.n;
      for (std::size_t f = 0; f < m.fidelity_distribution.size(); ++f)
        r.fidelity_distribution[f] += m.fidelity_distribution[f] / k;
    }
  }
  return result;
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  auto dominates = [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.accuracy >= b.accuracy && a.cost <= b.cost &&
           (a.accuracy > b.accuracy || a.cost < b.cost);
  };
  std::vector<ParetoPoint> out;
  for (const auto& p : points)
    if (std::none_of(points.begin(), points.end(),
                     [&](const ParetoPoint& q) { return dominates(q, p); }))
      out.push_back(p);
  std::stable_sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.accuracy > b.accuracy);
  });
  return out;
}

std::string pareto_csv(std::span<const ParetoPoint> points) {
  const auto frontier = pareto_frontier(points);
  std::string csv = "policy,accuracy,avg_cost,on_frontier\n";
  for (const auto& p : points) {
    const bool on = std::any_of(frontier.begin(), frontier.end(), [&](const ParetoPoint& q) {
      return q.name == p.name && q.accuracy == p.accuracy && q.cost == p.cost;
    });
    csv += fmt::format("{},{},{},{}\n", p.name, p.accuracy, p.cost, on ? 1 : 0);
  }
  return csv;
}

namespace {

ordered_json metrics_json(const EvalMetrics& m, const CostProfile& profile) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["avg_cost"] = m.avg_cost;
  j["brier"] = m.brier;
  j["brier_selected"] = m.brier_selected;
  j["n"] = m.n;
  auto& dist = j["fidelity_distribution"] = ordered_json::object();
  for (std::size_t f = 0; f < profile.size(); ++f)
    dist[profile.ids()[f]] = m.fidelity_distribution.at(f);
  return j;
}

}  // namespace

std::string report_to_json(const CvResult& result, const CostProfile& profile) {
  ordered_json j;
  auto& costs = j["costs"] = ordered_json::object();
  for (std::size_t f = 0; f < profile.size(); ++f) costs[profile.ids()[f]] = profile.costs()[f];

  auto& policies = j["policies"] = ordered_json::array();
  for (const auto& [name, r] : result.reports) {
    ordered_json p;
    p["policy"] = name;
    p.update(metrics_json(r, profile));
    auto& per_fold = p["per_fold"] = ordered_json::array();
    for (const auto& m : r.per_fold) per_fold.push_back(metrics_json(m, profile));
    policies.push_back(std::move(p));
  }

  auto& folds = j["folds"] = ordered_json::array();
  for (const auto& f : result.folds)
    folds.push_back({{"fold", f.fold},
                     {"n_test", f.test_qids.size()},
                     {"lambda", f.choice.policy.lambda},
                     {"tau", f.choice.policy.tau},
                     {"gbr",
                      {{"n_estimators", f.choice.gbr.n_estimators},
                       {"learning_rate", f.choice.gbr.learning_rate},
                       {"max_depth", f.choice.gbr.max_depth},
                       {"min_samples_split", f.choice.gbr.min_samples_split}}},
                     {"validation_score", f.choice.score}});
  return j.dump(2) + "\n";
}

std::vector<ParetoPoint> points_from_report_json(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    std::vector<ParetoPoint> points;
    for (const auto& p : j.at("policies"))
      points.push_back({p.at("policy").get<std::string>(), p.at("accuracy").get<double>(),
                        p.at("avg_cost").get<double>()});
    return points;
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("invalid report JSON: {}", e.what()));
  }
}

}  // namespace fidroute

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidroute/bank.hpp"
#include "fidroute/boosted_trees.hpp"
#include "fidroute/calibration.hpp"
#include "fidroute/corpus.hpp"
#include "fidroute/cost_model.hpp"
#include "fidroute/features.hpp"
#include "fidroute/policy.hpp"

namespace fidroute {

struct GridSpec {
  std::vector<double> lambda_values;
  std::vector<double> tau_values;
  std::vector<TrainConfig> gbr_configs;

  void validate() const;
  /// lambda {0.0005 .. 0.008}, tau {0, 0.01, 0.02, 0.05}, one default GBR config.
  static GridSpec defaults();
};

GridSpec parse_grid_spec(std::string_view json_text);
GridSpec load_grid_spec(const std::filesystem::path& path);

/// Share of training questions held back to fit the calibrators.
inline constexpr double kCalibrationHoldout = 0.2;

/// Fits the vocabulary on `train` only, then per fidelity a scorer on the
/// fitting split and a calibrator on the scores of the held-out calibration
/// split (every 1/holdout-th question in order). A fidelity with no labels on
/// one side of the split uses all of its labelled rows for both steps.
PredictorBank train_bank(std::span<const QuestionRow> train, std::span<const std::string> fidelities,
                         const VocabularyOptions& vocab_options, const TrainConfig& gbr,
                         CalibrationMethod calibration, double holdout = kCalibrationHoldout);

enum class PolicyKind { Voi, ArgmaxUtility, AccuracyOnly, FixedThreshold, Oracle, FixedLevel };

struct PolicySpec {
  std::string name;
  PolicyKind kind = PolicyKind::Voi;
  /// FixedLevel: the level always chosen.
  std::size_t level = 0;
  /// FixedThreshold: escalate from base to target when p(base) < cutoff.
  std::size_t base = 0;
  std::size_t target = 0;
  double cutoff = 0.30;
};

/// Recognized names: voi, argmax, accuracy-only, fixed-threshold, oracle and
/// "<level>-only" for every level in the profile.
PolicySpec parse_policy(std::string_view name, const CostProfile& profile);
std::vector<std::string> policy_names(const CostProfile& profile);

/// qid -> true success probability per fidelity; only synthetic corpora have one.
using TrueProbs = std::map<std::string, std::vector<double>>;

/// Test questions with their calibrated probabilities already computed.
struct ScoredQuestions {
  std::vector<QuestionRow> rows;
  std::vector<std::vector<double>> probs;
};

ScoredQuestions score_questions(const PredictorBank& bank, std::span<const QuestionRow> rows);

RoutingDecision route_with(const PolicySpec& policy, const PolicyConfig& config,
                           std::span<const double> probs, std::span<const double> costs,
                           const std::vector<double>* true_probs);

struct EvalMetrics {
  double accuracy = 0.0;
  double avg_cost = 0.0;
  /// Every labelled (question, fidelity) scored by that fidelity's predictor.
  double brier = 0.0;
  /// Only the selected fidelity of each question.
  double brier_selected = 0.0;
  /// Selection fraction per level, aligned with the profile.
  std::vector<double> fidelity_distribution;
  std::size_t n = 0;
};

struct EvalReport : EvalMetrics {
  std::vector<EvalMetrics> per_fold;
};

using DecisionObserver =
    std::function<void(const std::string& policy, const PolicyConfig&, const RoutingDecision&)>;

/// Routes every question and reads the logged label at the chosen fidelity.
/// A missing label is an error naming the (qid, fidelity) pair.
EvalMetrics evaluate_policy(const ScoredQuestions& scored, const PolicySpec& policy,
                            const PolicyConfig& config, const CostProfile& profile,
                            const TrueProbs* truth = nullptr,
                            const DecisionObserver& observer = {});
EvalMetrics evaluate_policy(const PredictorBank& bank, const PolicySpec& policy,
                            const PolicyConfig& config, std::span<const QuestionRow> rows,
                            const CostProfile& profile, const TrueProbs* truth = nullptr);

struct SearchOptions {
  VocabularyOptions vocab;
  CalibrationMethod calibration = CalibrationMethod::Isotonic;
  /// Weight on mean(cost) / 120 in the validation objective.
  double lambda_obj = 0.5;
};

struct GridChoice {
  TrainConfig gbr;
  PolicyConfig policy;
  double score = 0.0;
  double accuracy = 0.0;
  double avg_cost = 0.0;
};

/// Scores every grid point by validation accuracy - lambda_obj * cost / 120
/// for the greedy VOI policy. Ties prefer lower cost, then lower lambda, then
/// lower tau, then the earlier GBR config.
GridChoice grid_search(std::span<const QuestionRow> inner_train,
                       std::span<const QuestionRow> validation, const GridSpec& grid,
                       const CostProfile& profile, const SearchOptions& options = {});

struct CvOptions {
  int k = 5;
  std::uint64_t seed = 0;
  GridSpec grid = GridSpec::defaults();
  SearchOptions search;
  std::vector<PolicySpec> policies;
  const TrueProbs* truth = nullptr;
  DecisionObserver observer;
};

struct FoldSummary {
  int fold = 0;
  std::vector<std::string> test_qids;
  GridChoice choice;
  /// Every vocabulary fitted while processing this fold.
  std::vector<Vocabulary> vocabularies;
};

struct CvResult {
  /// In CvOptions::policies order.
  std::vector<std::pair<std::string, EvalReport>> reports;
  std::vector<FoldSummary> folds;

  const EvalReport& report(std::string_view policy) const;
};

/// k-fold cross-validation over questions: per fold, grid search on the
/// training folds (last training fold as validation), refit on all training
/// folds, evaluate every policy on the held-out fold, then average.
CvResult run_cv(const Dataset& dataset, const CostProfile& profile, const CvOptions& options);

struct ParetoPoint {
  std::string name;
  double accuracy = 0.0;
  double cost = 0.0;
};

/// Non-dominated subset, sorted by cost.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);
/// CSV `policy,accuracy,avg_cost,on_frontier`, rows in input order.
std::string pareto_csv(std::span<const ParetoPoint> points);

std::string report_to_json(const CvResult& result, const CostProfile& profile);
/// Reads the policy/accuracy/cost triples back out of a report document.
std::vector<ParetoPoint> points_from_report_json(std::string_view json_text);

}  // namespace fidroute

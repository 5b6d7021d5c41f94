#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fidroute/boosted_trees.hpp"
#include "fidroute/calibration.hpp"
#include "fidroute/cost_model.hpp"
#include "fidroute/features.hpp"
#include "fidroute/policy.hpp"

namespace fidroute {

/// Scorer plus calibrator for one fidelity level.
struct FidelityPredictor {
  std::string fidelity;
  BoostedModel model;
  Calibrator calibrator;
};

/// One predictor per fidelity, all sharing a single vocabulary. Immutable once
/// built; every query method is const and thread-safe.
class PredictorBank {
 public:
  PredictorBank() = default;
  PredictorBank(Vocabulary vocabulary, std::vector<FidelityPredictor> predictors);

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<FidelityPredictor>& predictors() const { return predictors_; }
  std::vector<std::string> fidelity_ids() const;
  bool trained() const { return !predictors_.empty(); }

  std::vector<double> raw_scores(const FeatureVector& fv) const;
  std::vector<double> calibrated(const FeatureVector& fv) const;

  /// Throws unless the bank's fidelities match the profile's levels in order.
  void check_covers(const CostProfile& profile) const;

 private:
  Vocabulary vocabulary_;
  std::vector<FidelityPredictor> predictors_;
};

/// Calibrated success probability per fidelity, from question text alone.
std::vector<double> predict_success(const PredictorBank& bank, std::string_view question);

RoutingDecision route_greedy(const PredictorBank& bank, std::string_view question,
                             const PolicyConfig& config, const CostProfile& profile);

}  // namespace fidroute

#include "fidroute/bank.hpp"

#include <stdexcept>

#include <fmt/core.h>
#include <fmt/ranges.h>

namespace fidroute {

PredictorBank::PredictorBank(Vocabulary vocabulary, std::vector<FidelityPredictor> predictors)
    : vocabulary_(std::move(vocabulary)), predictors_(std::move(predictors)) {
  const std::size_t width = vocabulary_.size() + kStructuredSlotCount;
  for (const auto& p : predictors_)
    if (p.model.n_columns != width)
      throw std::invalid_argument(fmt::format(
          "predictor '{}' expects {} columns but the vocabulary yields {}", p.fidelity,
          p.model.n_columns, width));
}

std::vector<std::string> PredictorBank::fidelity_ids() const {
  std::vector<std::string> ids;
  for (const auto& p : predictors_) ids.push_back(p.fidelity);
  return ids;
}

std::vector<double> PredictorBank::raw_scores(const FeatureVector& fv) const {
  std::vector<double> out;
  out.reserve(predictors_.size());
  for (const auto& p : predictors_) out.push_back(predict(p.model, fv));
  return out;
}

std::vector<double> PredictorBank::calibrated(const FeatureVector& fv) const {
  std::vector<double> out;
  out.reserve(predictors_.size());
  for (const auto& p : predictors_) out.push_back(apply(p.calibrator, predict(p.model, fv)));
  return out;
}

void PredictorBank::check_covers(const CostProfile& profile) const {
  if (fidelity_ids() != profile.ids())
    throw std::invalid_argument(fmt::format("bank fidelities [{}] do not match profile levels [{}]",
                                            fmt::join(fidelity_ids(), ", "),
                                            fmt::join(profile.ids(), ", ")));
}

std::vector<double> predict_success(const PredictorBank& bank, std::string_view question) {
  if (!bank.trained()) throw std::logic_error("predictor bank is not trained");
  return bank.calibrated(featurize(question, bank.vocabulary()));
}

RoutingDecision route_greedy(const PredictorBank& bank, std::string_view question,
                             const PolicyConfig& config, const CostProfile& profile) {
  bank.check_covers(profile);
  const auto probs = predict_success(bank, question);
  return route_greedy(probs, profile.costs(), config);
}

}  // namespace fidroute

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fidroute/bank.hpp"
#include "fidroute/boosted_trees.hpp"
#include "fidroute/calibration.hpp"
#include "fidroute/features.hpp"
#include "fidroute/policy.hpp"

namespace fidroute {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string vocabulary_to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(std::string_view text);

/// Trees are written as nested {"feature","threshold","left","right"} /
/// {"leaf"} objects. Reloading restores the exact node layout.
std::string model_to_json(const BoostedModel& model);
BoostedModel model_from_json(std::string_view text);

std::string calibrator_to_json(const Calibrator& calibrator);
Calibrator calibrator_from_json(std::string_view text);

/// Everything `route` needs: the bank plus the operating point chosen for it.
struct BankArtifact {
  PredictorBank bank;
  PolicyConfig policy;
  TrainConfig gbr;
  CalibrationMethod calibration = CalibrationMethod::Isotonic;
  std::string profile;
};

/// Writes manifest.json, vocabulary.json and one predictor_<i>.json per
/// fidelity into `dir`, creating it if needed.
void save_bank(const std::filesystem::path& dir, const BankArtifact& artifact);
BankArtifact load_bank(const std::filesystem::path& dir);

}  // namespace fidroute

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fidroute {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted least-squares projection of `values` onto non-decreasing
/// sequences (pool adjacent violators).
std::vector<double> pava(std::span<const double> values, std::span<const double> weights);

/// Monotone piecewise-linear map from raw scores to probabilities, clipped to
/// the end knots outside their range.
struct IsotonicCalibrator {
  std::vector<double> knot_x;
  std::vector<double> knot_y;
  /// Knots live in sigmoid(score) space rather than raw-score space.
  bool sigmoid_input = false;

  double apply(double score) const;
  bool operator==(const IsotonicCalibrator&) const = default;
};

/// Equal scores are pooled into one weighted point before PAVA; runs of equal
/// fitted values keep only their two endpoints as knots.
IsotonicCalibrator fit_isotonic(std::span<const double> scores, std::span<const int> labels,
                                bool sigmoid_input = false);

/// p = sigmoid(score / T).
struct TemperatureCalibrator {
  double temperature = 1.0;

  double apply(double score) const;
  bool operator==(const TemperatureCalibrator&) const = default;
};

/// Minimizes mean log loss by golden-section search over ln T in [-5, 5].
/// Throws CalibrationError when every label is identical.
TemperatureCalibrator fit_temperature(std::span<const double> scores, std::span<const int> labels);

/// Raw scores clipped to [0, 1]; the uncalibrated control.
struct ClipCalibrator {
  double apply(double score) const;
  bool operator==(const ClipCalibrator&) const = default;
};

using Calibrator = std::variant<ClipCalibrator, IsotonicCalibrator, TemperatureCalibrator>;

inline double apply(const Calibrator& calibrator, double score) {
  return std::visit([score](const auto& c) { return c.apply(score); }, calibrator);
}

enum class CalibrationMethod { None, Isotonic, IsotonicSigmoid, Temperature };

std::string_view to_string(CalibrationMethod method);
CalibrationMethod parse_calibration_method(std::string_view name);

double brier(std::span<const double> probs, std::span<const int> labels);

/// Expected calibration error over `bins` equal-width bins on [0, 1].
double ece(std::span<const double> probs, std::span<const int> labels, int bins = 10);

struct CalibrationReport {
  double brier = 0.0;
  double ece = 0.0;
  std::size_t n = 0;
};

CalibrationReport calibration_report(std::span<const double> probs, std::span<const int> labels);

}  // namespace fidroute

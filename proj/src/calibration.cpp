#include "fidroute/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

namespace fidroute {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw CalibrationError("calibration needs at least one sample");
  if (scores.size() != labels.size())
    throw CalibrationError(
        fmt::format("{} scores but {} labels", scores.size(), labels.size()));
  for (int y : labels)
    if (y != 0 && y != 1) throw CalibrationError(fmt::format("label {} is not 0 or 1", y));
}

}  // namespace

std::vector<double> pava(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size())
    throw std::invalid_argument(
        fmt::format("pava: {} values but {} weights", values.size(), weights.size()));
  struct Block {
    double value;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0))
      throw std::invalid_argument(fmt::format("pava: weight {} at position {} is not positive",
                                              weights[i], i));
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.value = (prev.weight * prev.value + top.weight * top.value) / w;
      prev.weight = w;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

double IsotonicCalibrator::apply(double score) const {
  const double x = sigmoid_input ? sigmoid(score) : score;
  if (x <= knot_x.front()) return knot_y.front();
  if (x >= knot_x.back()) return knot_y.back();
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(knot_x.begin(), knot_x.end(), x) - knot_x.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - knot_x[lo]) / (knot_x[hi] - knot_x[lo]);
  const double y = knot_y[lo] + t * (knot_y[hi] - knot_y[lo]);
  return std::clamp(y, knot_y[lo], knot_y[hi]);
}

IsotonicCalibrator fit_isotonic(std::span<const double> scores, std::span<const int> labels,
                                bool sigmoid_input) {
  check_labels(scores, labels);
  std::vector<std::pair<double, int>> pts(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    pts[i] = {sigmoid_input ? sigmoid(scores[i]) : scores[i], labels[i]};
  std::sort(pts.begin(), pts.end());

  std::vector<double> xs, means, weights;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double positives = 0.0;
    while (j < pts.size() && pts[j].first == pts[i].first) positives += pts[j++].second;
    const double w = static_cast<double>(j - i);
    xs.push_back(pts[i].first);
    means.push_back(positives / w);
    weights.push_back(w);
    i = j;
  }
  const auto fitted = pava(means, weights);

  IsotonicCalibrator cal;
  cal.sigmoid_input = sigmoid_input;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool starts_run = i == 0 || fitted[i] != fitted[i - 1];
    const bool ends_run = i + 1 == xs.size() || fitted[i] != fitted[i + 1];
    if (starts_run || ends_run) {
      cal.knot_x.push_back(xs[i]);
      cal.knot_y.push_back(std::clamp(fitted[i], 0.0, 1.0));
    }
  }
  return cal;
}

double TemperatureCalibrator::apply(double score) const { return sigmoid(score / temperature); }

TemperatureCalibrator fit_temperature(std::span<const double> scores,
                                      std::span<const int> labels) {
  check_labels(scores, labels);
  const bool all_same =
      std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); });
  if (all_same)
    throw CalibrationError(
        "temperature is unidentifiable when all labels agree; use an isotonic or constant "
        "calibrator instead");

  auto nll = [&](double log_t) {
    const double inv_t = std::exp(-log_t);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double z = scores[i] * inv_t;
      total += softplus(z) - labels[i] * z;
    }
    return total / static_cast<double>(scores.size());
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -5.0, b = 5.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = nll(c), fd = nll(d);
  while (b - a > 1e-6) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = nll(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = nll(d);
    }
  }
  return TemperatureCalibrator{std::exp((a + b) / 2.0)};
}

double ClipCalibrator::apply(double score) const { return std::clamp(score, 0.0, 1.0); }

std::string_view to_string(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::None: return "none";
    case CalibrationMethod::Isotonic: return "isotonic";
    case CalibrationMethod::IsotonicSigmoid: return "isotonic-sigmoid";
    case CalibrationMethod::Temperature: return "temperature";
  }
  return "unknown";
}

CalibrationMethod parse_calibration_method(std::string_view name) {
  for (auto m : {CalibrationMethod::None, CalibrationMethod::Isotonic,
                 CalibrationMethod::IsotonicSigmoid, CalibrationMethod::Temperature})
    if (to_string(m) == name) return m;
  throw std::invalid_argument(fmt::format(
      "unknown calibration method '{}' (expected none, isotonic, isotonic-sigmoid, temperature)",
      name));
}

double brier(std::span<const double> probs, std::span<const int> labels) {
  if (probs.empty()) throw std::invalid_argument("brier: empty input");
  if (probs.size() != labels.size()) throw std::invalid_argument("brier: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = probs[i] - labels[i];
    s += d * d;
  }
  return s / static_cast<double>(probs.size());
}

double ece(std::span<const double> probs, std::span<const int> labels, int bins) {
  if (probs.empty()) throw std::invalid_argument("ece: empty input");
  if (probs.size() != labels.size()) throw std::invalid_argument("ece: length mismatch");
  if (bins < 1) throw std::invalid_argument("ece: bins must be positive");
  std::vector<double> p_sum(static_cast<std::size_t>(bins), 0.0), y_sum(p_sum), count(p_sum);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int b = std::clamp(static_cast<int>(std::floor(probs[i] * bins)), 0, bins - 1);
    p_sum[static_cast<std::size_t>(b)] += probs[i];
    y_sum[static_cast<std::size_t>(b)] += labels[i];
    count[static_cast<std::size_t>(b)] += 1.0;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < count.size(); ++b)
    if (count[b] > 0.0) total += std::abs(p_sum[b] - y_sum[b]);
  // sum_b (n_b / n) * |mean_p - mean_y| = sum_b |sum_p - sum_y| / n
  return total / static_cast<double>(probs.size());
}

CalibrationReport calibration_report(std::span<const double> probs, std::span<const int> labels) {
  return {brier(probs, labels), ece(probs, labels), probs.size()};
}

}  // namespace fidroute

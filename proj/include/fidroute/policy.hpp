#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fidroute {

// Fidelities are addressed by their position in the active cost profile
// (ascending cost). `probs` and `costs` spans share that order.

struct PolicyConfig {
  double lambda = 0.004;
  double tau = 0.0;
  /// Charge lambda * (c(next) - c(current)) instead of lambda * c(next).
  bool marginal_cost = false;

  void validate() const;
  bool operator==(const PolicyConfig&) const = default;
};

/// Value of escalating: (p_next - p_cur) - lambda * cost_next.
inline double voi(double p_next, double p_cur, double cost_next, double lambda) {
  return (p_next - p_cur) - lambda * cost_next;
}

inline double utility(double p, double cost, double lambda) { return p - lambda * cost; }

struct VoiStep {
  std::size_t from = 0;
  std::size_t to = 0;
  double voi = 0.0;
  bool accepted = false;
};

struct RoutingDecision {
  std::size_t selected = 0;
  std::vector<double> probs;
  std::vector<VoiStep> trace;
  double cost = 0.0;
};

/// Greedy escalation: start at the cheapest level and step up while the VOI of
/// the next level exceeds tau; stop at the first rejected step.
RoutingDecision route_greedy(std::span<const double> probs, std::span<const double> costs,
                             const PolicyConfig& config);

/// argmax_f p_f - lambda * c_f, ties to the cheaper level.
std::size_t route_argmax_utility(std::span<const double> probs, std::span<const double> costs,
                                 double lambda);

/// argmax_f p_f, ties to the cheaper level.
std::size_t route_accuracy_only(std::span<const double> probs);

/// `target` when probs[base] < cutoff, else `base`.
std::size_t route_fixed_threshold(std::span<const double> probs, std::size_t base,
                                  std::size_t target, double cutoff = 0.30);

/// Bayes-optimal choice given true success probabilities.
std::size_t oracle_select(std::span<const double> true_probs, std::span<const double> costs,
                          double lambda);

/// max_f U_f - U_decision under the true probabilities. Never negative.
double regret(std::span<const double> true_probs, std::size_t decision,
              std::span<const double> costs, double lambda);

/// Throws unless probs and costs align, costs strictly increase and every
/// probability lies in [0, 1].
void check_routing_inputs(std::span<const double> probs, std::span<const double> costs);

nlohmann::ordered_json to_json(const RoutingDecision& decision,
                               std::span<const std::string> fidelity_ids);

}  // namespace fidroute

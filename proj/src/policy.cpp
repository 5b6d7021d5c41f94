#include "fidroute/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/core.h>

namespace fidroute {

void PolicyConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument(fmt::format("lambda must be >= 0, got {}", lambda));
  if (!(tau >= 0.0)) throw std::invalid_argument(fmt::format("tau must be >= 0, got {}", tau));
}

void check_routing_inputs(std::span<const double> probs, std::span<const double> costs) {
  if (probs.empty()) throw std::invalid_argument("routing needs at least one fidelity");
  if (probs.size() != costs.size())
    throw std::invalid_argument(
        fmt::format("{} probabilities for {} cost levels", probs.size(), costs.size()));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw std::invalid_argument(fmt::format("probability {} at level {} is outside [0, 1]",
                                              probs[i], i));
    if (i > 0 && !(costs[i] > costs[i - 1]))
      throw std::invalid_argument("costs must strictly increase along the fidelity order");
  }
}

RoutingDecision route_greedy(std::span<const double> probs, std::span<const double> costs,
                             const PolicyConfig& config) {
  config.validate();
  check_routing_inputs(probs, costs);
  RoutingDecision d;
  d.probs.assign(probs.begin(), probs.end());
  std::size_t cur = 0;
  for (std::size_t next = 1; next < probs.size(); ++next) {
    const double charged = config.marginal_cost ? costs[next] - costs[cur] : costs[next];
    const double value = voi(probs[next], probs[cur], charged, config.lambda);
    const bool accept = value > config.tau;
    d.trace.push_back({cur, next, value, accept});
    if (!accept) break;
    cur = next;
  }
  d.selected = cur;
  d.cost = costs[cur];
  return d;
}

std::size_t route_argmax_utility(std::span<const double> probs, std::span<const double> costs,
                                 double lambda) {
  check_routing_inputs(probs, costs);
  std::size_t best = 0;
  double best_u = utility(probs[0], costs[0], lambda);
  for (std::size_t i = 1; i < probs.size(); ++i) {
    const double u = utility(probs[i], costs[i], lambda);
    if (u > best_u) {
      best = i;
      best_u = u;
    }
  }
  return best;
}

std::size_t route_accuracy_only(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("routing needs at least one fidelity");
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::size_t route_fixed_threshold(std::span<const double> probs, std::size_t base,
                                  std::size_t target, double cutoff) {
  if (base >= probs.size() || target >= probs.size())
    throw std::invalid_argument("fixed-threshold levels out of range");
  return probs[base] < cutoff ? target : base;
}

std::size_t oracle_select(std::span<const double> true_probs, std::span<const double> costs,
                          double lambda) {
  return route_argmax_utility(true_probs, costs, lambda);
}

double regret(std::span<const double> true_probs, std::size_t decision,
              std::span<const double> costs, double lambda) {
  check_routing_inputs(true_probs, costs);
  if (decision >= true_probs.size()) throw std::invalid_argument("decision out of range");
  double best = utility(true_probs[0], costs[0], lambda);
  for (std::size_t i = 1; i < true_probs.size(); ++i)
    best = std::max(best, utility(true_probs[i], costs[i], lambda));
  return best - utility(true_probs[decision], costs[decision], lambda);
}

nlohmann::ordered_json to_json(const RoutingDecision& decision,
                               std::span<const std::string> fidelity_ids) {
  if (fidelity_ids.size() != decision.probs.size())
    throw std::invalid_argument("fidelity id list does not match the decision");
  nlohmann::ordered_json j;
  j["selected"] = fidelity_ids[decision.selected];
  j["cost"] = decision.cost;
  auto& probs = j["probs"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < fidelity_ids.size(); ++i) probs[fidelity_ids[i]] = decision.probs[i];
  auto& trace = j["voi_trace"] = nlohmann::ordered_json::array();
  for (const auto& s : decision.trace)
    trace.push_back({{"from", fidelity_ids[s.from]},
                     {"to", fidelity_ids[s.to]},
                     {"voi", s.voi},
                     {"accepted", s.accepted}});
  return j;
}

}  // namespace fidroute

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "fidroute/policy.hpp"
#include "fidroute/rng.hpp"

using namespace fidroute;

namespace {

const std::vector<double> kEdge = {9.06, 18.12, 45.41, 63.87, 120.0};

std::vector<double> random_probs(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  for (auto& v : p) v = rng.uniform();
  return p;
}

std::vector<double> random_costs(Rng& rng, std::size_t k) {
  std::vector<double> c(k);
  double acc = 0.0;
  for (auto& v : c) v = acc += 0.5 + rng.uniform() * 40;
  return c;
}

}  // namespace

TEST(Voi, Formula) {
  EXPECT_DOUBLE_EQ(voi(0.4, 0.4, 50, 0.004), -0.2);
  EXPECT_NEAR(voi(0.8, 0.3, 63.9, 0.004), 0.2444, 1e-12);
  EXPECT_DOUBLE_EQ(voi(0.8, 0.3, 63.9, 0.0), 0.5);
}

TEST(Greedy, EqualProbsStayCheapest) {
  const std::vector<double> p(5, 0.6);
  const auto d = route_greedy(p, kEdge, {});
  EXPECT_EQ(d.selected, 0u);
  ASSERT_EQ(d.trace.size(), 1u);
  EXPECT_FALSE(d.trace[0].accepted);
  EXPECT_EQ(d.cost, kEdge[0]);
}

TEST(Greedy, TwoLevelEscalates) {
  const auto d = route_greedy(std::vector<double>{0.3, 0.8}, std::vector<double>{9.1, 63.9}, {});
  EXPECT_EQ(d.selected, 1u);
  EXPECT_NEAR(d.trace[0].voi, 0.2444, 1e-12);
  EXPECT_TRUE(d.trace[0].accepted);
}

TEST(Greedy, DivergesFromArgmaxOnPlateau) {
  const std::vector<double> p = {0.5, 0.52, 0.9}, c = {9.1, 45.4, 63.9};
  const auto d = route_greedy(p, c, {});
  EXPECT_EQ(d.selected, 0u);
  EXPECT_NEAR(d.trace[0].voi, 0.02 - 0.1816, 1e-12);
  EXPECT_EQ(route_argmax_utility(p, c, 0.004), 2u);
  EXPECT_NEAR(utility(0.9, 63.9, 0.004), 0.6444, 1e-12);
}

TEST(Greedy, TauRaisesTheBar) {
  const std::vector<double> p = {0.3, 0.8}, c = {9.1, 63.9};
  EXPECT_EQ(route_greedy(p, c, {.lambda = 0.004, .tau = 0.25}).selected, 0u);
  EXPECT_EQ(route_greedy(p, c, {.lambda = 0.004, .tau = 0.24}).selected, 1u);
}

TEST(Greedy, MarginalCostVariant) {
  const std::vector<double> p = {0.5, 0.52, 0.9}, c = {9.1, 45.4, 63.9};
  // Marginal step 1->2 charges 0.004*36.3 = 0.1452 > 0.02: still rejected.
  EXPECT_EQ(route_greedy(p, c, {.lambda = 0.004, .marginal_cost = true}).selected, 0u);
  EXPECT_EQ(route_greedy(std::vector<double>{0.5, 0.7}, std::vector<double>{100, 110},
                         {.lambda = 0.004, .marginal_cost = true})
                .selected,
            1u);
}

TEST(Greedy, InputValidation) {
  EXPECT_THROW(route_greedy(std::vector<double>{0.1}, std::vector<double>{1, 2}, {}), std::invalid_argument);
  EXPECT_THROW(route_greedy(std::vector<double>{0.1, 1.2}, std::vector<double>{1, 2}, {}), std::invalid_argument);
  EXPECT_THROW(route_greedy(std::vector<double>{0.1, 0.2}, std::vector<double>{2, 2}, {}), std::invalid_argument);
  EXPECT_THROW(PolicyConfig{.lambda = -1}.validate(), std::invalid_argument);
  EXPECT_THROW(PolicyConfig{.tau = -0.1}.validate(), std::invalid_argument);
}

TEST(Argmax, Examples) {
  EXPECT_EQ(route_argmax_utility(std::vector<double>{0.5, 0.9}, std::vector<double>{9.1, 120}, 0.004), 0u);
  EXPECT_EQ(route_argmax_utility(std::vector<double>{0.5, 0.9, 0.7}, std::vector<double>{1, 2, 3}, 0.0), 1u);
  // 0.6 - 0.01*10 = 0.5 = 0.7 - 0.01*20.
  EXPECT_EQ(route_argmax_utility(std::vector<double>{0.6, 0.7}, std::vector<double>{10, 20}, 0.01), 0u);
}

TEST(AccuracyOnly, Examples) {
  EXPECT_EQ(route_accuracy_only(std::vector<double>{0.1, 0.2, 0.3}), 2u);
  EXPECT_EQ(route_accuracy_only(std::vector<double>{0.4, 0.4, 0.4}), 0u);
}

TEST(FixedThreshold, Boundary) {
  const std::vector<double> p29 = {0.29, 0.5, 0.9}, p30 = {0.30, 0.5, 0.9}, p1 = {1.0, 0, 0};
  EXPECT_EQ(route_fixed_threshold(p29, 0, 2), 2u);
  EXPECT_EQ(route_fixed_threshold(p30, 0, 2), 0u);
  EXPECT_EQ(route_fixed_threshold(p30, 0, 2, 1.0), 2u);
  EXPECT_EQ(route_fixed_threshold(p1, 0, 2, 1.0), 0u);
}

TEST(Oracle, MirrorsArgmaxAndHugeLambda) {
  const std::vector<double> p = {0.5, 0.9}, c = {9.1, 120};
  EXPECT_EQ(oracle_select(p, c, 0.004), route_argmax_utility(p, c, 0.004));
  EXPECT_EQ(oracle_select(std::vector<double>{0.0, 1.0}, c, 1.0 / 9.1), 0u);
}

TEST(Regret, Examples) {
  const std::vector<double> p = {0.5, 0.9}, c = {10, 120};
  EXPECT_NEAR(regret(p, 0, c, 0.001), 0.29, 1e-12);
  EXPECT_EQ(regret(p, oracle_select(p, c, 0.001), c, 0.001), 0.0);
}

TEST(Properties, RegretWithinTwoEpsilon) {
  Rng rng(17);
  for (int t = 0; t < 20000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const double eps = std::array{0.01, 0.05, 0.1}[rng.below(3)];
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01;
    std::vector<double> ph(k);
    for (std::size_t i = 0; i < k; ++i) ph[i] = std::clamp(p[i] + (2 * rng.uniform() - 1) * eps, 0.0, 1.0);
    const double r = regret(p, route_argmax_utility(ph, c, lambda), c, lambda);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 2 * eps + 1e-12);
  }
}

TEST(Properties, GreedyChainUtilityIncreases) {
  Rng rng(23);
  for (int t = 0; t < 20000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const PolicyConfig cfg{.lambda = rng.uniform() * 0.01, .tau = rng.below(2) ? 0.0 : rng.uniform() * 0.05};
    const auto d = route_greedy(p, c, cfg);
    bool rejected = false;
    for (const auto& s : d.trace) {
      EXPECT_EQ(s.to, s.from + 1);
      if (s.accepted) {
        EXPECT_FALSE(rejected) << "accepted steps must form a prefix";
        EXPECT_GT(utility(p[s.to], c[s.to], cfg.lambda), utility(p[s.from], c[s.from], cfg.lambda));
      } else {
        rejected = true;
      }
    }
    EXPECT_GE(utility(p[d.selected], c[d.selected], cfg.lambda), utility(p[0], c[0], cfg.lambda));
    EXPECT_EQ(d.cost, c[d.selected]);
  }
}

TEST(Properties, CostScaleInvariance) {
  Rng rng(29);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01;
    // Powers of two keep lambda * c bit-identical after rescaling.
    const double s = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
    std::vector<double> cs(c);
    for (auto& v : cs) v *= s;
    EXPECT_EQ(route_argmax_utility(p, c, lambda), route_argmax_utility(p, cs, lambda / s));
    EXPECT_EQ(oracle_select(p, c, lambda), oracle_select(p, cs, lambda / s));
    EXPECT_EQ(route_greedy(p, c, {.lambda = lambda}).selected, route_greedy(p, cs, {.lambda = lambda / s}).selected);
  }
}

TEST(Properties, CostScaleInvarianceWithArbitraryFactorAwayFromTies) {
  Rng rng(31);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01, s = 0.1 + rng.uniform() * 10;
    std::vector<double> u(k);
    for (std::size_t i = 0; i < k; ++i) u[i] = utility(p[i], c[i], lambda);
    std::sort(u.begin(), u.end());
    if (u[k - 1] - u[k - 2] < 1e-9) continue;
    std::vector<double> cs(c);
    for (auto& v : cs) v *= s;
    EXPECT_EQ(route_argmax_utility(p, c, lambda), route_argmax_utility(p, cs, lambda / s));
  }
}

TEST(Properties, LambdaDominationNeverEscalates) {
  Rng rng(37);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const double lambda = 1.0 / c[1] + rng.uniform();
    EXPECT_EQ(route_greedy(p, c, {.lambda = lambda}).selected, 0u);
  }
}

TEST(Properties, AccuracyOnlyIsArgmaxAtZeroLambda) {
  Rng rng(41);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t k = 1 + rng.below(6);
    auto p = random_probs(rng, k);
    if (t % 3 == 0) p[rng.below(k)] = p[0];
    const auto c = random_costs(rng, k);
    EXPECT_EQ(route_accuracy_only(p), route_argmax_utility(p, c, 0.0));
  }
}

TEST(Properties, PerfectCalibrationMatchesOracle) {
  Rng rng(43);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const auto p = random_probs(rng, k);
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01;
    EXPECT_EQ(route_argmax_utility(p, c, lambda), oracle_select(p, c, lambda));
  }
}

TEST(Decision, JsonShape) {
  const auto d = route_greedy(std::vector<double>{0.3, 0.8}, std::vector<double>{9.1, 63.9}, {});
  const std::vector<std::string> ids = {"caption", "jpeg_q10"};
  const auto j = to_json(d, ids);
  EXPECT_EQ(j.at("selected"), "jpeg_q10");
  EXPECT_EQ(j.at("cost"), 63.9);
  EXPECT_EQ(j.at("probs").at("caption"), 0.3);
  ASSERT_EQ(j.at("voi_trace").size(), 1u);
  EXPECT_EQ(j.at("voi_trace")[0].at("from"), "caption");
  EXPECT_EQ(j.at("voi_trace")[0].at("accepted"), true);
}

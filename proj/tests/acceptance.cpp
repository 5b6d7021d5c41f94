// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cli.hpp"
#include "fidroute/harness.hpp"
#include "fidroute/rng.hpp"
#include "fidroute/synthworld.hpp"
#include "oracles.hpp"

using namespace fidroute;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("threw: {}", e.what())};
  }
  if (!o.pass) ++failures;
  fmt::print("criterion {:>2}: {} {} [{}] ({:.1f} s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail,
             seconds_since(start));
  std::fflush(stdout);
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "fidroute");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int status = cli::run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (status != 0) fmt::print("  cli error: {}", e.str());
  return status;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const CostProfile& edge() {
  static const CostProfile p = builtin_profile("edge-cloud");
  return p;
}

std::vector<double> random_costs(Rng& rng, std::size_t k) {
  std::vector<double> c(k);
  double acc = 0.0;
  for (auto& v : c) v = acc += 0.5 + rng.uniform() * 40;
  return c;
}

// Pooled ECE of a bank over every (question, fidelity) pair of `rows`.
double pooled_ece(const PredictorBank& bank, const std::vector<QuestionRow>& rows) {
  std::vector<double> p;
  std::vector<int> y;
  for (const auto& r : rows) {
    const auto probs = predict_success(bank, r.text);
    for (std::size_t f = 0; f < probs.size(); ++f)
      if (r.labels[f]) {
        p.push_back(probs[f]);
        y.push_back(*r.labels[f]);
      }
  }
  return ece(p, y);
}

std::vector<QuestionRow> world_rows(const std::string& world, std::size_t n, std::uint64_t seed) {
  return group_by_question(generate(canned_world(world, n, seed)).dataset, edge().ids());
}

// --- 1 ---------------------------------------------------------------------

Outcome cost_table() {
  const auto start = Clock::now();
  std::string out;
  if (run_cli({"costs", "edge-cloud"}, &out) != 0) return {false, "costs command failed"};
  const double elapsed = seconds_since(start);
  const std::map<std::string, double> want = {
      {"caption", 9.1}, {"resize_32", 18.1}, {"jpeg_q1", 45.4}, {"jpeg_q10", 63.9}, {"full", 120.0}};
  std::istringstream in(out);
  std::string line, shown;
  std::getline(in, line);
  bool ok = true;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string id, size, r, raw, cost;
    ls >> id >> size >> r >> raw >> cost;
    if (!want.contains(id)) return {false, fmt::format("unexpected row '{}'", line)};
    ++rows;
    ok &= std::abs(std::stod(cost) - want.at(id)) <= 0.1 + 1e-12;
    shown += fmt::format("{}={} ", id, cost);
  }
  ok &= rows == 5;
  const bool exact = edge().costs().back() == 120.0;
  ok &= exact && elapsed < 1.0;
  return {ok, fmt::format("{}full bit-exact={} runtime {:.3f} s", shown, exact, elapsed)};
}

// --- 2 ---------------------------------------------------------------------

Outcome pava_oracle() {
  const auto start = Clock::now();
  const std::array<double, 5> grid = {0, 0.25, 0.5, 0.75, 1};
  std::size_t cases = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= grid.size();
    std::vector<double> v(n), w(n, 1.0);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= grid.size()) v[i] = grid[c % grid.size()];
      const auto got = pava(v, w);
      const auto want = oracle::monotone_ls_oracle(v, w);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(got[i] - want[i]));
      worst = std::max(worst, err);
      bad += err > 1e-10;
      ++cases;
    }
  }
  const double elapsed = seconds_since(start);
  return {bad == 0 && elapsed < 30.0,
          fmt::format("{} sequences, {} mismatches, max |diff| {:.2e}, runtime {:.2f} s", cases, bad, worst, elapsed)};
}

// --- 3 ---------------------------------------------------------------------

Outcome regret_bound() {
  const auto start = Clock::now();
  Rng rng(2024);
  const std::array<double, 3> eps_values = {0.01, 0.05, 0.1};
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const double eps = eps_values[rng.below(3)];
    std::vector<double> p(k), ph(k);
    for (auto& v : p) v = rng.uniform();
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01;
    for (std::size_t i = 0; i < k; ++i) ph[i] = std::clamp(p[i] + (2 * rng.uniform() - 1) * eps, 0.0, 1.0);
    const double r = regret(p, route_argmax_utility(ph, c, lambda), c, lambda);
    violations += r > 2 * eps + 1e-12 || r < 0;
    worst_ratio = std::max(worst_ratio, r / (2 * eps));
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && elapsed < 60.0,
          fmt::format("1e5 instances, {} violations, max regret/(2 eps) {:.3f}, runtime {:.2f} s", violations,
                      worst_ratio, elapsed)};
}

// --- 4 ---------------------------------------------------------------------

Outcome exact_optimality() {
  const auto start = Clock::now();
  Rng rng(77);
  std::size_t agree = 0;
  const std::size_t n = 100000;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t k = 2 + rng.below(5);
    std::vector<double> p(k);
    for (auto& v : p) v = rng.uniform();
    const auto c = random_costs(rng, k);
    const double lambda = rng.uniform() * 0.01;
    agree += route_argmax_utility(p, c, lambda) == oracle_select(p, c, lambda);
  }
  const double elapsed = seconds_since(start);
  return {agree == n && elapsed < 30.0,
          fmt::format("{}/{} agree, runtime {:.2f} s", agree, n, elapsed)};
}

// --- 5 ---------------------------------------------------------------------

Outcome calibration_convergence() {
  const auto start = Clock::now();
  const std::array<std::size_t, 3> sizes = {1000, 4000, 16000};
  const auto held_out = world_rows("monotone", 5000, 999);
  std::array<double, 3> mean{};
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      const auto train = world_rows("monotone", sizes[s], seed * 100 + s);
      const auto bank = train_bank(train, edge().ids(), {}, TrainConfig{}, CalibrationMethod::Isotonic);
      mean[s] += pooled_ece(bank, held_out) / 5.0;
    }
  const double elapsed = seconds_since(start);
  const bool monotone = mean[1] <= mean[0] && mean[2] <= mean[1];
  return {monotone && mean[2] < 0.05 && elapsed < 300.0,
          fmt::format("mean held-out ECE 1k={:.4f} 4k={:.4f} 16k={:.4f}, runtime {:.1f} s", mean[0], mean[1],
                      mean[2], elapsed)};
}

// --- 6 and 7 ---------------------------------------------------------------

struct MixRun {
  double margin = 0.0;
  double voi_accuracy = 0.0, voi_cost = 0.0, full_accuracy = 0.0;
  std::string best_fixed;
};

struct ChainAudit {
  std::size_t decisions = 0, steps = 0, violations = 0;
};

std::vector<MixRun> mix_runs;
ChainAudit chain_audit;
double mix_seconds = 0.0;

Outcome heterogeneous_dominance() {
  const auto start = Clock::now();
  const auto& costs = edge().costs();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto corpus = generate(canned_world("heterogeneous-mix", 10000, seed));
    CvOptions o;
    o.seed = seed;
    o.policies.push_back(parse_policy("voi", edge()));
    for (const auto& id : edge().ids()) o.policies.push_back(parse_policy(id + "-only", edge()));
    o.observer = [&](const std::string& policy, const PolicyConfig& cfg, const RoutingDecision& d) {
      if (policy != "voi") return;
      ++chain_audit.decisions;
      for (const auto& s : d.trace) {
        if (!s.accepted) continue;
        ++chain_audit.steps;
        if (!(utility(d.probs[s.to], costs[s.to], cfg.lambda) > utility(d.probs[s.from], costs[s.from], cfg.lambda)))
          ++chain_audit.violations;
      }
      if (utility(d.probs[d.selected], costs[d.selected], cfg.lambda) < utility(d.probs[0], costs[0], cfg.lambda))
        ++chain_audit.violations;
    };
    const auto res = run_cv(corpus.dataset, edge(), o);

    // Utility per fold at that fold's selected lambda, averaged over folds.
    auto mean_utility = [&](const std::string& name) {
      const auto& r = res.report(name);
      double u = 0.0;
      for (std::size_t f = 0; f < r.per_fold.size(); ++f)
        u += (r.per_fold[f].accuracy - res.folds[f].choice.policy.lambda * r.per_fold[f].avg_cost) /
             static_cast<double>(r.per_fold.size());
      return u;
    };
    MixRun run;
    double best = -1e9;
    for (const auto& id : edge().ids()) {
      const double u = mean_utility(id + "-only");
      if (u > best) {
        best = u;
        run.best_fixed = id;
      }
    }
    run.margin = mean_utility("voi") - best;
    run.voi_accuracy = res.report("voi").accuracy;
    run.voi_cost = res.report("voi").avg_cost;
    run.full_accuracy = res.report("full-only").accuracy;
    std::string lambdas;
    for (const auto& f : res.folds) lambdas += fmt::format("{}/{} ", f.choice.policy.lambda, f.choice.policy.tau);
    fmt::print("  seed {}: margin {:+.4f} over {}-only, voi acc {:.4f} cost {:.2f}, full acc {:.4f}, lambda/tau {}\n",
               seed, run.margin, run.best_fixed, run.voi_accuracy, run.voi_cost, run.full_accuracy, lambdas);
    mix_runs.push_back(run);
  }
  mix_seconds = seconds_since(start);

  int positive = 0;
  double acc = 0.0, cost = 0.0, full = 0.0;
  for (const auto& r : mix_runs) {
    positive += r.margin > 0.0;
    acc += r.voi_accuracy / 5.0;
    cost += r.voi_cost / 5.0;
    full += r.full_accuracy / 5.0;
  }
  const bool ok = positive >= 4 && cost <= 0.6 * 120.0 && acc >= 0.9 * full && mix_seconds < 600.0;
  return {ok, fmt::format("positive margin in {}/5 seeds; mean voi cost {:.2f} (limit 72), accuracy ratio {:.4f} "
                          "(limit 0.9), runtime {:.1f} s",
                          positive, cost, acc / full, mix_seconds)};
}

Outcome chain_monotonicity() {
  return {chain_audit.decisions > 0 && chain_audit.violations == 0,
          fmt::format("{} decisions, {} accepted steps, {} violations", chain_audit.decisions, chain_audit.steps,
                      chain_audit.violations)};
}

// --- 8 ---------------------------------------------------------------------

Outcome greedy_argmax_agreement() {
  const auto& costs = edge().costs();
  auto compare = [&](const std::string& world, double lambda, std::size_t* diverge, std::string* example) {
    const auto train = world_rows(world, 4000, 31);
    const auto test = world_rows(world, 2000, 32);
    const auto bank = train_bank(train, edge().ids(), {}, TrainConfig{}, CalibrationMethod::Isotonic);
    std::size_t agree = 0;
    for (const auto& r : test) {
      const auto p = predict_success(bank, r.text);
      const auto g = route_greedy(p, costs, {.lambda = lambda});
      const auto a = route_argmax_utility(p, costs, lambda);
      if (g.selected == a) {
        ++agree;
        continue;
      }
      // The counterexample shape: greedy halts on a rejected step while a
      // pricier level further up has strictly higher utility.
      const bool halted = !g.trace.empty() && !g.trace.back().accepted;
      if (diverge && halted && a > g.selected + 1 &&
          utility(p[a], costs[a], lambda) > utility(p[g.selected], costs[g.selected], lambda)) {
        if ((*diverge)++ == 0)
          *example = fmt::format("p=[{:.3f}, {:.3f}, {:.3f}, {:.3f}, {:.3f}] greedy={} argmax={}", p[0], p[1], p[2],
                                 p[3], p[4], edge().ids()[g.selected], edge().ids()[a]);
      }
    }
    return static_cast<double>(agree) / static_cast<double>(test.size());
  };
  std::string rates;
  for (double lambda : {0.001, 0.004}) rates += fmt::format("monotone agreement at lambda {}: {:.4f}; ", lambda,
                                                            compare("monotone", lambda, nullptr, nullptr));
  std::size_t divergences = 0;
  std::string example;
  const double adv = compare("adversarial", 0.004, &divergences, &example);
  return {divergences >= 1, fmt::format("{}adversarial agreement {:.4f}, {} counterexample-pattern divergences, e.g. {}",
                                        rates, adv, divergences, example)};
}

// --- 9 ---------------------------------------------------------------------

Outcome routing_overhead() {
  const auto train = world_rows("heterogeneous-mix", 5000, 41);
  const auto bank = train_bank(train, edge().ids(), {}, TrainConfig{}, CalibrationMethod::Isotonic);
  const auto queries = world_rows("heterogeneous-mix", 10000, 42);
  std::size_t sink = 0;
  const auto start = Clock::now();
  for (const auto& q : queries) sink += route_greedy(bank, q.text, {}, edge()).selected;
  const double ms = seconds_since(start) * 1000.0 / static_cast<double>(queries.size());
  return {ms < 1.0, fmt::format("mean {:.4f} ms per query over {} queries (checksum {})", ms, queries.size(), sink)};
}

// --- 10 --------------------------------------------------------------------

Outcome leakage_guard() {
  auto records = generate(canned_world("heterogeneous-mix", 1000, 51)).dataset.records();
  for (auto& r : records) r.question_text += " sentinel_" + r.qid;
  const Dataset data(records);
  CvOptions o;
  o.seed = 5;
  o.policies = {parse_policy("voi", edge())};
  o.grid.gbr_configs[0].n_estimators = 20;
  const auto res = run_cv(data, edge(), o);
  std::size_t checked = 0, leaks = 0, vocabularies = 0;
  for (const auto& f : res.folds)
    for (const auto& v : f.vocabularies) {
      ++vocabularies;
      for (const auto& q : f.test_qids) {
        ++checked;
        leaks += v.contains("sentinel_" + q);
      }
    }
  return {leaks == 0 && res.folds.size() == 5 && checked > 0,
          fmt::format("{} folds, {} vocabularies, {} sentinel probes, {} leaks", res.folds.size(), vocabularies,
                      checked, leaks)};
}

// --- 11 --------------------------------------------------------------------

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "fidroute_acceptance_determinism";
  fs::remove_all(root);
  const auto data = root / "data";
  if (run_cli({"gen", "--world", "adversarial", "--n", "1500", "--seed", "9", "--out", data.string()}) != 0)
    return {false, "gen failed"};
  for (const auto* out : {"a", "b"})
    if (run_cli({"eval", "--data", (data / "corpus.jsonl").string(), "--truth", (data / "truth.jsonl").string(),
                 "--world", "adversarial", "--seed", "9", "--out", (root / out).string()}) != 0)
      return {false, "eval failed"};
  const bool json_same = slurp(root / "a" / "reports.json") == slurp(root / "b" / "reports.json");
  const bool csv_same = slurp(root / "a" / "pareto.csv") == slurp(root / "b" / "pareto.csv");
  const auto bytes = slurp(root / "a" / "reports.json").size();
  fs::remove_all(root);
  return {json_same && csv_same && bytes > 0,
          fmt::format("reports.json identical={} ({} bytes), pareto.csv identical={}", json_same, bytes, csv_same)};
}

}  // namespace

int main() {
  report(1, "edge-cloud cost table", cost_table);
  report(2, "PAVA matches brute-force monotone least squares", pava_oracle);
  report(3, "argmax regret within 2 eps", regret_bound);
  report(4, "argmax equals oracle under perfect calibration", exact_optimality);
  report(5, "held-out ECE shrinks with training size", calibration_convergence);
  report(6, "VOI beats every fixed fidelity on the heterogeneous mix", heterogeneous_dominance);
  report(7, "greedy escalation chains raise utility", chain_monotonicity);
  report(8, "greedy/argmax agreement and adversarial divergence", greedy_argmax_agreement);
  report(9, "routing overhead below 1 ms per query", routing_overhead);
  report(10, "no held-out term reaches a fitted vocabulary", leakage_guard);
  report(11, "eval reports are byte-identical across runs", determinism);
  fmt::print("{} of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

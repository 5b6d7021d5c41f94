#include "fidroute/boosted_trees.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace fidroute {

namespace {

// Squared error below this is rounding noise on O(1) residuals.
constexpr double kPureSse = 1e-12;

// Gains this close are ties; the earlier feature/threshold keeps the split so
// the choice does not depend on summation order.
bool beats(double gain, double best) { return gain > best + 1e-9 * std::max(1.0, best); }

struct Stats {
  double sum = 0.0;
  double count = 0.0;
  void add(double y) {
    sum += y;
    count += 1.0;
  }
};

// n_l * n_r / n * (mean_l - mean_r)^2, the squared-error reduction of a split.
double split_gain(const Stats& left, const Stats& total) {
  const double nr = total.count - left.count;
  if (left.count <= 0.0 || nr <= 0.0) return 0.0;
  const double ml = left.sum / left.count;
  const double mr = (total.sum - left.sum) / nr;
  return left.count * nr / total.count * (ml - mr) * (ml - mr);
}

}  // namespace

void TrainConfig::validate() const {
  if (n_estimators < 0) throw std::invalid_argument("n_estimators must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
}

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), columns_(n_cols) {}

FeatureMatrix::FeatureMatrix(std::span<const FeatureVector> rows) {
  if (rows.empty()) return;
  const std::size_t width = rows.front().columns();
  const std::size_t sparse_width = rows.front().sparse_width;
  n_rows_ = rows.size();
  columns_.resize(width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fv = rows[r];
    if (fv.columns() != width || fv.sparse_width != sparse_width)
      throw std::invalid_argument(fmt::format(
          "row {} has {} columns, expected {}", r, fv.columns(), width));
    const auto row = static_cast<std::uint32_t>(r);
    for (auto [c, v] : fv.sparse)
      if (v != 0.0) columns_[c].push_back({v, row});
    for (std::size_t s = 0; s < fv.structured.size(); ++s)
      if (fv.structured[s] != 0.0) columns_[sparse_width + s].push_back({fv.structured[s], row});
  }
  finish();
}

FeatureMatrix FeatureMatrix::from_dense(std::span<const std::vector<double>> rows) {
  FeatureMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols())
      throw std::invalid_argument(fmt::format("row {} has {} columns, expected {}", r,
                                              rows[r].size(), m.cols()));
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      if (rows[r][c] != 0.0) m.columns_[c].push_back({rows[r][c], static_cast<std::uint32_t>(r)});
  }
  m.finish();
  return m;
}

void FeatureMatrix::finish() {
  for (auto& col : columns_)
    std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
}

std::optional<Split> best_split(const FeatureMatrix& x, std::span<const double> targets,
                                std::span<const std::uint32_t> rows,
                                std::span<const std::size_t> candidate_features) {
  if (rows.size() < 2) return std::nullopt;
  std::vector<char> member(x.rows(), 0);
  Stats total;
  for (auto r : rows) {
    member[r] = 1;
    total.add(targets[r]);
  }
  // A pure node stays a leaf. An impure one splits even when no single split
  // helps (XOR-like targets), as in the usual CART growth rule.
  double sse = 0.0;
  const double mean = total.sum / total.count;
  for (auto r : rows) sse += (targets[r] - mean) * (targets[r] - mean);
  if (sse <= kPureSse) return std::nullopt;

  std::optional<Split> best;
  std::vector<FeatureMatrix::Entry> nonzero;
  for (std::size_t f : candidate_features) {
    nonzero.clear();
    Stats nz;
    for (const auto& e : x.column(f))
      if (member[e.row]) {
        nonzero.push_back(e);
        nz.add(targets[e.row]);
      }
    // Members absent from the column form one block at value 0.
    const Stats zeros{total.sum - nz.sum, total.count - nz.count};

    Stats left;
    bool have_prev = false;
    double prev = 0.0;
    auto boundary = [&](double next_value) {
      if (have_prev && next_value != prev) {
        const double gain = split_gain(left, total);
        if (!best || beats(gain, best->gain)) {
          double mid = prev + (next_value - prev) / 2.0;
          if (!(mid < next_value)) mid = prev;  // adjacent doubles
          best = Split{f, mid, gain};
        }
      }
    };
    auto take_zeros = [&] {
      boundary(0.0);
      left.sum += zeros.sum;
      left.count += zeros.count;
      prev = 0.0;
      have_prev = true;
    };

    bool zeros_done = zeros.count == 0.0;
    for (const auto& e : nonzero) {
      if (!zeros_done && e.value > 0.0) {
        take_zeros();
        zeros_done = true;
      }
      boundary(e.value);
      left.add(targets[e.row]);
      prev = e.value;
      have_prev = true;
    }
    if (!zeros_done) take_zeros();
  }
  return best;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> residuals, const TrainConfig& cfg,
              std::vector<std::uint32_t>& leaf_of)
      : x_(x), residuals_(residuals), cfg_(cfg), leaf_of_(leaf_of), features_(x.cols()) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  RegressionTree build(std::vector<std::uint32_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::size_t grow(std::vector<std::uint32_t> rows, int depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();

    std::optional<Split> split;
    if (depth < cfg_.max_depth && rows.size() >= static_cast<std::size_t>(cfg_.min_samples_split))
      split = best_split(x_, residuals_, rows, features_);

    if (!split) {
      double sum = 0.0;
      for (auto r : rows) sum += residuals_[r];
      tree_.nodes[id].value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
      for (auto r : rows) leaf_of_[r] = static_cast<std::uint32_t>(id);
      return id;
    }

    std::vector<char> goes_right(x_.rows(), 0.0 > split->threshold);
    for (const auto& e : x_.column(split->feature)) goes_right[e.row] = e.value > split->threshold;
    std::vector<std::uint32_t> left, right;
    for (auto r : rows) (goes_right[r] ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = static_cast<int>(l);
    node.right = static_cast<int>(r);
    return id;
  }

  const FeatureMatrix& x_;
  std::span<const double> residuals_;
  const TrainConfig& cfg_;
  std::vector<std::uint32_t>& leaf_of_;
  std::vector<std::size_t> features_;
  RegressionTree tree_;
};

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double r : v) s += r * r;
  return s / static_cast<double>(v.size());
}

}  // namespace

BoostedModel fit(const FeatureMatrix& x, std::span<const double> targets,
                 const TrainConfig& config, std::vector<double>* loss_trace) {
  config.validate();
  if (x.rows() == 0) throw std::invalid_argument("cannot fit on an empty training set");
  if (targets.size() != x.rows())
    throw std::invalid_argument(
        fmt::format("{} targets for {} feature rows", targets.size(), x.rows()));

  BoostedModel model;
  model.learning_rate = config.learning_rate;
  model.n_columns = x.cols();
  model.base_value =
      std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());

  std::vector<double> residuals(targets.begin(), targets.end());
  for (double& r : residuals) r -= model.base_value;
  if (loss_trace) loss_trace->assign(1, mean_square(residuals));

  std::vector<std::uint32_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0u);
  std::vector<std::uint32_t> leaf_of(x.rows(), 0);
  model.trees.reserve(static_cast<std::size_t>(config.n_estimators));
  for (int round = 0; round < config.n_estimators; ++round) {
    TreeBuilder builder(x, residuals, config, leaf_of);
    RegressionTree tree = builder.build(all);
    for (std::size_t i = 0; i < residuals.size(); ++i)
      residuals[i] -= config.learning_rate * tree.nodes[leaf_of[i]].value;
    model.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(mean_square(residuals));
  }
  return model;
}

BoostedModel fit(std::span<const FeatureVector> features, std::span<const double> targets,
                 const TrainConfig& config) {
  return fit(FeatureMatrix(features), targets, config);
}

double predict(const BoostedModel& model, const FeatureVector& fv) {
  if (fv.columns() != model.n_columns)
    throw std::invalid_argument(fmt::format("feature vector has {} columns, model expects {}",
                                            fv.columns(), model.n_columns));
  double sum = 0.0;
  for (const auto& tree : model.trees)
    sum += tree.evaluate([&](std::size_t c) { return fv.value(c); });
  return model.base_value + model.learning_rate * sum;
}

double predict(const BoostedModel& model, std::span<const double> dense_row) {
  if (dense_row.size() != model.n_columns)
    throw std::invalid_argument(fmt::format("row has {} columns, model expects {}",
                                            dense_row.size(), model.n_columns));
  double sum = 0.0;
  for (const auto& tree : model.trees)
    sum += tree.evaluate([&](std::size_t c) { return dense_row[c]; });
  return model.base_value + model.learning_rate * sum;
}

}  // namespace fidroute

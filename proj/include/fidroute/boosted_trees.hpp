#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fidroute/features.hpp"

namespace fidroute {

struct TrainConfig {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_split = 2;
  /// Unused while subsampling is off; kept so configs stay forward compatible.
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Column-major view of a training set. Each column stores only its nonzero
/// entries, sorted by (value, row); every other row holds an exact 0.
class FeatureMatrix {
 public:
  struct Entry {
    double value;
    std::uint32_t row;
  };

  FeatureMatrix(std::size_t n_rows, std::size_t n_cols);
  /// Throws if the vectors disagree on their column layout.
  explicit FeatureMatrix(std::span<const FeatureVector> rows);
  /// Dense row-major input, mostly for tests.
  static FeatureMatrix from_dense(std::span<const std::vector<double>> rows);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return columns_.size(); }
  std::span<const Entry> column(std::size_t c) const { return columns_[c]; }

 private:
  void finish();

  std::size_t n_rows_ = 0;
  std::vector<std::vector<Entry>> columns_;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  /// Reduction in summed squared error.
  double gain = 0.0;
};

/// Exhaustive CART search over midpoints of consecutive distinct values.
/// Returns nullopt when no split lowers the squared error. Ties go to the
/// lowest feature index, then the lowest threshold.
std::optional<Split> best_split(const FeatureMatrix& x, std::span<const double> targets,
                                std::span<const std::uint32_t> rows,
                                std::span<const std::size_t> candidate_features);

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Node 0 is the root. A row goes left when its feature value <= threshold.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  template <typename ValueOf>
  double evaluate(ValueOf&& value_of) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(value_of(static_cast<std::size_t>(n.feature)) <= n.threshold
                                       ? n.left
                                       : n.right);
    }
    return nodes[i].value;
  }
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct BoostedModel {
  double base_value = 0.0;
  double learning_rate = 0.1;
  std::size_t n_columns = 0;
  std::vector<RegressionTree> trees;

  bool operator==(const BoostedModel&) const = default;
};

/// Least-squares gradient boosting. When `loss_trace` is given it receives the
/// mean training squared error before the first round and after every round.
BoostedModel fit(const FeatureMatrix& x, std::span<const double> targets,
                 const TrainConfig& config, std::vector<double>* loss_trace = nullptr);
BoostedModel fit(std::span<const FeatureVector> features, std::span<const double> targets,
                 const TrainConfig& config);

/// Raw, unbounded score: base + learning_rate * sum of tree outputs.
double predict(const BoostedModel& model, const FeatureVector& fv);
double predict(const BoostedModel& model, std::span<const double> dense_row);

}  // namespace fidroute

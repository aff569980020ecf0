#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tvs/matrix.hpp"

namespace tvs {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
  int features_per_split = 0;  // 0 means ceil(sqrt(d))
  std::uint64_t seed = 0;
};

// Bagged CART with Gini splits for a binary response. Split points are
// anchored at training values (route left iff x <= largest left value),
// so predictions survive strictly increasing per-feature transforms
// applied to train and test alike.
class RandomForest {
 public:
  static RandomForest fit(const Matrix& x, std::span<const double> y, const ForestConfig& cfg);

  double predict_proba_row(std::span<const double> row) const;
  std::vector<double> predict_proba(const Matrix& x) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double p1 = 0.0;
  };
  std::vector<std::vector<Node>> trees_;
};

}  // namespace tvs

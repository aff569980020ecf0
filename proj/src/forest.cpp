#include "tvs/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tvs/common.hpp"
#include "tvs/rng.hpp"

namespace tvs {

RandomForest RandomForest::fit(const Matrix& x, std::span<const double> y, const ForestConfig& cfg) {
  const int n = x.rows(), d = x.cols();
  if (static_cast<int>(y.size()) != n) throw std::invalid_argument("RandomForest: label length mismatch");
  if (cfg.n_trees < 1) throw std::invalid_argument("RandomForest: n_trees must be positive");
  int npos = 0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("RandomForest: labels must be 0/1");
    if (v == 1.0) ++npos;
  }
  if (npos == 0 || npos == n) throw data_error("RandomForest: single-class training data");
  int mtry = cfg.features_per_split > 0 ? std::min(cfg.features_per_split, d)
                                        : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

  RandomForest forest;
  forest.trees_.resize(cfg.n_trees);
  RngStream base(cfg.seed, 0x466f726573ULL);

  parallel_for(cfg.n_trees, [&](int tree_idx) {
    RngStream rng = base.substream(tree_idx);
    std::vector<Node>& nodes = forest.trees_[tree_idx];
    std::vector<int> boot(n);
    for (int i = 0; i < n; ++i) boot[i] = static_cast<int>(rng.next_below(n));

    struct Work {
      std::vector<int> rows;
      int depth;
      int node;
    };
    nodes.push_back(Node{});
    std::vector<Work> stack;
    stack.push_back({boot, 0, 0});
    std::vector<int> feats(d);

    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      Node& node = nodes[w.node];
      const int m = static_cast<int>(w.rows.size());
      int pos = 0;
      for (int r : w.rows) pos += y[r] == 1.0;
      node.p1 = static_cast<double>(pos) / m;
      if (w.depth >= cfg.max_depth || m < 2 * cfg.min_leaf || pos == 0 || pos == m) continue;

      // mtry features without replacement
      std::iota(feats.begin(), feats.end(), 0);
      for (int i = 0; i < mtry; ++i) {
        int j = i + static_cast<int>(rng.next_below(d - i));
        std::swap(feats[i], feats[j]);
      }

      double best_score = std::numeric_limits<double>::infinity();
      int best_feat = -1;
      double best_thresh = 0.0;
      std::vector<std::pair<double, double>> vals(m);
      for (int fi = 0; fi < mtry; ++fi) {
        const int f = feats[fi];
        for (int i = 0; i < m; ++i) vals[i] = {x(w.rows[i], f), y[w.rows[i]]};
        std::sort(vals.begin(), vals.end());
        int left_n = 0, left_pos = 0;
        for (int i = 0; i + 1 < m; ++i) {
          ++left_n;
          left_pos += vals[i].second == 1.0;
          if (vals[i].first == vals[i + 1].first) continue;
          const int rn = m - left_n, rp = pos - left_pos;
          if (left_n < cfg.min_leaf || rn < cfg.min_leaf) continue;
          // weighted Gini impurity, scaled by m
          const double gl = left_n - (static_cast<double>(left_pos) * left_pos +
                                      static_cast<double>(left_n - left_pos) * (left_n - left_pos)) /
                                         left_n;
          const double gr =
              rn - (static_cast<double>(rp) * rp + static_cast<double>(rn - rp) * (rn - rp)) / rn;
          const double score = gl + gr;
          if (score < best_score) {
            best_score = score;
            best_feat = f;
            best_thresh = vals[i].first;  // route left iff value <= this
          }
        }
      }
      if (best_feat < 0) continue;

      std::vector<int> lrows, rrows;
      for (int r : w.rows)
        (x(r, best_feat) <= best_thresh ? lrows : rrows).push_back(r);
      if (lrows.empty() || rrows.empty()) continue;

      const int li = static_cast<int>(nodes.size());
      nodes.push_back(Node{});
      const int ri = static_cast<int>(nodes.size());
      nodes.push_back(Node{});
      nodes[w.node].feature = best_feat;
      nodes[w.node].threshold = best_thresh;
      nodes[w.node].left = li;
      nodes[w.node].right = ri;
      stack.push_back({std::move(rrows), w.depth + 1, ri});
      stack.push_back({std::move(lrows), w.depth + 1, li});
    }
  });
  return forest;
}

double RandomForest::predict_proba_row(std::span<const double> row) const {
  double acc = 0.0;
  for (const auto& nodes : trees_) {
    int i = 0;
    while (nodes[i].feature >= 0) i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    acc += nodes[i].p1;
  }
  return acc / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::predict_proba(const Matrix& x) const {
  std::vector<double> out(x.rows());
  std::vector<double> row(x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);
    out[i] = predict_proba_row(row);
  }
  return out;
}

}  // namespace tvs

#pragma once

#include <string>
#include <vector>

#include "tvs/forest.hpp"
#include "tvs/matrix.hpp"
#include "tvs/pair_copula.hpp"
#include "tvs/privacy.hpp"
#include "tvs/rng.hpp"

namespace tvs {

// AUC of a forest trained on `train` and scored on `test`.
double utility_auc(const Dataset& train, const Dataset& test, const ForestConfig& cfg);

struct FidelityReport {
  std::vector<double> alpha_grid;
  std::vector<double> p_alpha;
  std::vector<double> beta_grid;
  std::vector<double> r_beta;
  double ip_alpha = 0.0;
  double ir_beta = 0.0;
  double authenticity = 0.0;
};

// Alpha-precision / beta-recall / authenticity on standardized raw space.
// The alpha-support of each side is the Euclidean ball around its medoid
// holding alpha of its own probability mass; authenticity flags synthetic
// points that sit farther from their nearest real neighbor than that
// neighbor's own nearest real neighbor.
FidelityReport fidelity(const Matrix& real, const Matrix& synthetic);

struct SweepRecord {
  int truncation = 0;
  double utility_median = 0.0, utility_q25 = 0.0, utility_q75 = 0.0;
  std::string privacy_metric;
  double privacy_median = 0.0, privacy_q25 = 0.0, privacy_q75 = 0.0;
};

struct SweepConfig {
  std::vector<int> truncations;
  std::string privacy = "mab";  // "mab" or "pg"
  int sensitive = 0;
  int utility_reps = 50;
  int synth_rows = 0;  // 0 means the training size
  AIAConfig aia;
  MIAConfig mia;
  int mia_outlier_targets = 2;
  int mia_random_targets = 2;
  ForestConfig forest;
  std::vector<PairCopulaFamily> candidates;
};

// The truncation sweep: the C-vine is fitted once at max(T) on the
// training data and truncated to each level; each level gets a median
// TSTR utility over synthetic replicates and the requested privacy score.
std::vector<SweepRecord> sweep(const Dataset& train, const Dataset& test, const std::vector<int>& order,
                               const SweepConfig& cfg, RngStream& rng);

std::string sweep_records_to_csv(const std::vector<SweepRecord>& records);

}  // namespace tvs

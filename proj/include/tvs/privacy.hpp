#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tvs/matrix.hpp"
#include "tvs/pair_copula.hpp"
#include "tvs/rng.hpp"

namespace tvs {

// Attack-side view of a generative model: fitting a reference sample
// yields a sampler for synthetic sets. Fit and sampler must be safe to
// invoke concurrently on disjoint data.
using SamplerFn = std::function<Dataset(int n_rows, RngStream& rng)>;
using GeneratorFn = std::function<SamplerFn(const Dataset& ref, RngStream& rng)>;

// The C-vine generator used throughout: fit at the given truncation
// level under a fixed order.
GeneratorFn cvine_generator(std::vector<int> order, int truncation, std::vector<PairCopulaFamily> candidates = {});

struct AIAConfig {
  int n_iter = 10;         // game iterations N
  int size_raw_t = 500;    // reference sample per iteration
  int size_syn_t = 500;    // rows per synthetic set
  int n_synth = 50;        // synthetic sets per iteration
  int bootstrap_size = 500;  // real bootstrap samples for the MSE baseline
};

struct MIAConfig {
  int n_iter = 10;       // evaluation game iterations N
  int size_raw_a = 500;  // attacker's shadow training sample size
  int n_shadows = 10;
  int n_syn_a = 10;      // synthetic sets per shadow model
  int size_raw_t = 400;  // challenger's training sample size
  int size_syn_t = 400;  // rows per synthetic set
  int n_syn_t = 50;      // synthetic sets per evaluation iteration
};

struct AIAReport {
  int d = 0;           // regressors per fit (covariates except sensitive, plus response)
  int n_iter = 0;
  int n_synth = 0;
  std::vector<double> beta;  // |beta[k + d*(l + n_synth*m)]| layout, absolute values kept signed
  double mab = 0.0;
  double wcab = 0.0;
  std::vector<double> per_set_mab;  // mean |beta| per (iteration, synthetic set)
  std::vector<double> mse_synth;    // per target
  std::vector<double> mse_real;     // per target
  int skipped = 0;                  // iterations lost to collinearity
};

struct MIAReport {
  double privacy_gain = 0.0;
  double p_guess_in = 0.0;   // P(s_hat = 1 | s = 1)
  double p_guess_out = 0.0;  // P(s_hat = 1 | s = 0)
};

enum class TargetMode { outlier, random };

// Target rows for the privacy games: outliers sit outside the central
// 95% of the sensitive column, random targets are drawn uniformly.
std::vector<int> select_targets(const Dataset& data, int sensitive, TargetMode mode, int count, RngStream& rng);

// The attribute inference game: per iteration, fit the generator on a
// reference subsample, draw synthetic sets, standardize each, and regress
// the sensitive column on everything else. Coefficients feed MAB/WCAB;
// per-target guesses (standardized with the full real data) feed the MSE.
AIAReport run_aia(const Dataset& real, const GeneratorFn& generator, int sensitive,
                  std::span<const int> targets, const AIAConfig& cfg, RngStream& rng);

// Sweep-path AIA for a C-vine: the model is fitted once per iteration at
// the largest requested level and truncated downward, so every level sees
// the same reference data. Returns one report per truncation level.
std::map<int, AIAReport> run_aia_by_truncation(const Dataset& real, const std::vector<int>& order,
                                               std::span<const int> truncations, int sensitive,
                                               std::span<const int> targets, const AIAConfig& cfg,
                                               std::vector<PairCopulaFamily> candidates, RngStream& rng);

// The membership inference game with shadow models: the attacker trains a
// classifier on labeled synthetic sets from reference data with and
// without the target, then guesses membership on fresh challenges.
// Privacy gain is 1 - (P(s_hat=1|s=1) - P(s_hat=1|s=0)).
MIAReport run_mia(const Dataset& real, const GeneratorFn& generator, int target_row, const MIAConfig& cfg,
                  RngStream& rng);

struct TheoreticalBeta {
  std::vector<double> beta;  // d entries; regressor k maps to column k (k < j_star) or k+1
  double sigma2 = 0.0;
};

// Closed-form population regression coefficients of column j_star on the
// remaining columns of a standard Gaussian vector whose C-vine (ordered
// as the columns, response last) is truncated at level tau: the first
// d - tau coefficients vanish and the rest solve the trailing block.
// Requires tau <= d + 1 - (j_star + 1) in 0-based indexing.
TheoreticalBeta theoretical_beta(const Matrix& rho, int j_star, int tau);

struct BlockZeroCheck {
  bool holds = false;
  double max_abs_beta = 0.0;
};

// True when every sensitive column's truncated coefficient vector is zero
// to 1e-12, which the block structure guarantees at
// tau <= d + 1 - |K| - |S|.
BlockZeroCheck block_zero_beta_check(const Matrix& rho, std::span<const int> k_set, std::span<const int> s_set, int tau);

}  // namespace tvs

#pragma once

#include <span>
#include <string>
#include <vector>

#include "tvs/matrix.hpp"
#include "tvs/pair_copula.hpp"
#include "tvs/rng.hpp"

namespace tvs {

// Empirical marginal model for one covariate: sorted training values.
// Back-transform interpolates order statistics at plotting positions
// i/(n+1); the density for log-likelihood work is a Gaussian KDE with
// Silverman bandwidth over the same values.
struct MarginalTable {
  std::string name;
  std::vector<double> sorted_values;

  double quantile(double p) const;
  double pit(double x) const;  // clamped into (0,1)
  double log_density(double x) const;
};

// C-vine copula on D variables in root order: variable 1 is the root of
// tree 1, variable 2 the root of tree 2 (conditioned on variable 1), and
// so on. trees[t-1][j-1] is the tree-t edge whose non-root partner sits
// at position j counted from the far end (j in [1, D-t]), matching the
// triangular grid layout used in the model JSON.
class CVineCopula {
 public:
  CVineCopula() = default;
  explicit CVineCopula(int dim);

  int dim() const { return dim_; }
  int n_trees() const { return dim_ - 1; }

  // Edge of tree t joining the root (natural index t) with natural index
  // m in [t+1, D].
  const PairCopula& edge(int tree, int m) const { return trees_[tree - 1][dim_ - m]; }
  PairCopula& edge(int tree, int m) { return trees_[tree - 1][dim_ - m]; }

  const std::vector<std::vector<PairCopula>>& trees() const { return trees_; }
  std::vector<std::vector<PairCopula>>& trees() { return trees_; }

  // Sets every pair copula in trees above t to independence.
  void truncate_above(int t);

  // Inverse Rosenblatt transform of one iid-uniform vector; u_out gets
  // the D copula-scale coordinates in natural order.
  void sample_row(RngStream& rng, std::span<double> u_out) const;

  // Sum of log pair-copula densities along the h-recursion, trees 1..t_max.
  double log_density(std::span<const double> u, int t_max) const;

 private:
  int dim_ = 0;
  std::vector<std::vector<PairCopula>> trees_;
};

// Gaussian C-vine whose pair copulas carry the partial correlations of
// the given correlation matrix, indexed so that matrix row/column D-1
// (0-based) is the tree-1 root. Sampling it and applying the normal
// quantile reproduces N(0, rho).
CVineCopula gaussian_cvine_from_correlation(const Matrix& rho);

// The fitted generative model: covariate order, marginal tables, response
// prevalence and the pair-copula grid. Covariates enter the vine so that
// the response is the tree-1 root and the last covariate in the order is
// the tree-2 root.
struct CVineModel {
  std::vector<int> order;  // order[p] = original covariate column at position p
  std::vector<MarginalTable> marginals;  // per original covariate column
  double response_prevalence = 0.5;
  int truncation_level = 0;  // d means un-truncated
  int n_train = 0;
  std::string response_name = "y";
  CVineCopula copula;

  int dim() const { return static_cast<int>(order.size()); }
};

// Sequential tree-by-tree fit under the fixed star structure. Trees above
// t_max are independence and never see data. Tree-1 edges pair each
// covariate with the binary response and are fitted with the exact
// class-interval likelihood; the recursion then conditions on the class.
// Deterministic: refitting the same data gives the same model.
CVineModel fit_cvine(const Dataset& data, const std::vector<int>& order, int t_max,
                     std::span<const PairCopulaFamily> candidates = {});

// Copy with trees above t set to independence; never re-reads data.
// Throws std::invalid_argument when t exceeds the fitted level.
CVineModel truncate(const CVineModel& model, int t);

// n synthetic rows on the data scale; deterministic given rng.
Dataset sample(const CVineModel& model, int n, RngStream& rng);

// Copula-scale log density of a (d+1)-vector in natural order (response
// uniform first), trees up to the truncation level.
double copula_log_density(const CVineModel& model, std::span<const double> u_natural);

// Joint log density of a covariate row and binary response, handling the
// discrete response by integrating the latent uniform over its class
// interval. Marginal terms come from the KDE tables.
double log_density(const CVineModel& model, std::span<const double> x_row, int y);

struct PsiDecomposition {
  std::vector<double> psi_t;  // psi_1 .. psi_d
  double total = 0.0;
  double truncated(int tau) const;
};

// Tree-wise decomposition of the log-odds log P(Y=1|x)/P(Y=0|x) implied
// by the fitted vine.
PsiDecomposition psi_decomposition(const CVineModel& model, std::span<const double> x_row);

std::string model_to_json(const CVineModel& model);
CVineModel model_from_json(const std::string& text);
void save_model(const CVineModel& model, const std::string& path);
CVineModel load_model(const std::string& path);

}  // namespace tvs

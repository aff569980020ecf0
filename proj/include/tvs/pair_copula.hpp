#pragma once

#include <span>
#include <string>
#include <vector>

namespace tvs {

enum class FamilyKind { independence, gaussian, clayton, gumbel, frank, joe };

std::string family_name(FamilyKind kind);
FamilyKind family_from_name(const std::string& name);

// Family plus rotation in degrees. Independence, Gaussian and Frank are
// symmetric under rotation and normalize to rotation 0.
struct PairCopulaFamily {
  FamilyKind kind = FamilyKind::independence;
  int rotation = 0;

  PairCopulaFamily() = default;
  PairCopulaFamily(FamilyKind k, int rot = 0);

  bool operator==(const PairCopulaFamily&) const = default;
};

// One-parameter bivariate copula c(u,v). Admissible parameter ranges:
//   gaussian  rho in (-0.9999, 0.9999)
//   clayton   theta in (1e-10, 28]
//   gumbel    theta in [1, 17]
//   frank     theta in [-35, 35], |theta| < 1e-4 treated as independence
//   joe       theta in (1, 30]
struct PairCopula {
  PairCopulaFamily family;
  double theta = 0.0;

  PairCopula() = default;
  PairCopula(PairCopulaFamily fam, double th) : family(fam), theta(th) {}

  bool is_independence() const;
};

double pc_density(const PairCopula& pc, double u, double v);
double pc_log_density(const PairCopula& pc, double u, double v);

// Conditional CDF of the first argument given the second: d C(u,v) / dv.
double pc_h(const PairCopula& pc, double u, double v);

// Conditional CDF of the second argument given the first: d C(u,v) / du.
double pc_h2(const PairCopula& pc, double v, double u);

// Inverse of pc_h in its first argument.
double pc_h_inverse(const PairCopula& pc, double w, double v);

// Copula CDF C(u,v).
double pc_cdf(const PairCopula& pc, double u, double v);

// Kendall's tau implied by the parameter (sign follows the rotation).
double theta_to_tau(PairCopulaFamily family, double theta);

// Parameter matching a target tau. Throws data_error when the tau is not
// attainable for the family and rotation.
double tau_to_theta(PairCopulaFamily family, double tau);

struct PairCopulaFit {
  PairCopula copula;
  double loglik = 0.0;
  int n = 0;
  double aic() const;
};

// Maximum likelihood over the admissible range (Brent), initialized at
// the tau inversion. Throws numeric_error on non-convergence.
PairCopulaFit fit_mle(PairCopulaFamily family, std::span<const double> u, std::span<const double> v);

// Tree-1 edges pair a continuous pseudo-observation with the binary
// response. The response's latent uniform lives on the class interval
// ((1-pi,1] for y=1), so the exact per-observation likelihood factor is
//   y=0:  h2(1-pi | u) / (1-pi)
//   y=1:  (1 - h2(1-pi | u)) / pi.

// P(U <= u | Y = y) under the pair copula with a binary root.
double pc_class_conditional_cdf(const PairCopula& pc, double u, int y, double pi);

// The likelihood factor above (the class-conditional density of U).
double pc_class_conditional_density(const PairCopula& pc, double u, int y, double pi);

// Inverse of pc_class_conditional_cdf in u.
double pc_class_conditional_inverse(const PairCopula& pc, double w, int y, double pi);

// MLE of the binary-root likelihood; loglik is the sum of log factors.
PairCopulaFit fit_mle_binary_root(PairCopulaFamily family, std::span<const double> u,
                                  std::span<const double> y, double pi);

// AIC selection under the binary-root likelihood; same pretest and
// tie-breaking as select_aic.
PairCopulaFit select_aic_binary_root(std::span<const double> u, std::span<const double> y, double pi,
                                     std::span<const PairCopulaFamily> candidates);

// The default candidate set: independence, gaussian, frank, and the
// clayton/gumbel/joe rotations.
std::vector<PairCopulaFamily> default_candidates();

// Fits every candidate and returns the AIC minimizer (2k - 2 loglik).
// Ties break toward fewer parameters, then family name, then rotation.
PairCopulaFit select_aic(std::span<const double> u, std::span<const double> v,
                         std::span<const PairCopulaFamily> candidates);

}  // namespace tvs

#pragma once

#include <span>
#include <vector>

#include "tvs/matrix.hpp"

namespace tvs {

// Standard normal CDF, absolute error below 1e-12.
double std_normal_cdf(double x);

// Standard normal quantile; throws std::domain_error outside (0,1).
double std_normal_quantile(double p);

// Bivariate standard normal CDF P(X<=a, Y<=b) with correlation rho.
double bivariate_normal_cdf(double a, double b, double rho);

// Kendall's tau; tau_b tie correction when ties are present.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Ranks averaged over ties, 1-based.
std::vector<double> average_ranks(std::span<const double> x);

// Pseudo-observations rank/(n+1); strictly inside (0,1).
std::vector<double> empirical_pit(std::span<const double> column);

// Linear interpolation between order statistics at plotting positions
// i/(n+1); clamps to the extremes outside.
double empirical_quantile(std::span<const double> sample, double p);

// Column means and sample standard deviations (n-1 denominator).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  static Standardizer fit(const Matrix& m);
  Matrix apply(const Matrix& m) const;
  std::vector<double> apply_row(std::span<const double> row) const;
};

// Each column rescaled to mean 0 and sample sd 1. Throws data_error
// naming the column when one has zero variance.
Matrix standardize(const Matrix& m);

struct OlsFit {
  double intercept = 0.0;
  std::vector<double> coef;
  std::vector<double> fitted;
  double residual_sum_squares = 0.0;
};

// Least squares of response on design plus an intercept, via Householder
// QR. Throws data_error listing the collinear columns when the design is
// rank deficient.
OlsFit ols_fit(const Matrix& design, std::span<const double> response);

// Mann-Whitney AUC; ties contribute 1/2. Throws data_error when only one
// class is present.
double auc(std::span<const double> labels, std::span<const double> scores);

// In-place lower Cholesky factor; throws numeric_error when the matrix
// is not positive definite.
Matrix cholesky(const Matrix& a);

// Solves a x = b for symmetric positive definite a.
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

double median(std::vector<double> v);
double quantile_of(std::vector<double> v, double p);

}  // namespace tvs

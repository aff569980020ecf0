#pragma once

#include <utility>
#include <vector>

#include "tvs/matrix.hpp"
#include "tvs/rng.hpp"

namespace tvs {

// Class-conditional Gaussian mixture: Y ~ Bernoulli(prevalence),
// X | Y=k ~ N(mu[k], sigma[k]).
struct BlockGaussianSpec {
  int d = 0;
  double prevalence = 0.5;
  std::vector<double> mu0, mu1;
  Matrix sigma0, sigma1;
};

// The built-in 20-dimensional study generator: three mutually
// independent covariate blocks {1..5}, {6..10}, {11..20}, with only the
// third block depending on the class.
BlockGaussianSpec simulated_study_spec();

// Rows drawn class-first, then the conditional Gaussian via Cholesky
// with a fixed column order. Columns are named X1..Xd.
Dataset simulate(const BlockGaussianSpec& spec, int n, RngStream& rng);

// Disjoint, exhaustive split, stratified by the response.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, RngStream& rng);

}  // namespace tvs

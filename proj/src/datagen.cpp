#include "tvs/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tvs/common.hpp"
#include "tvs/stats.hpp"

namespace tvs {

namespace {

// Shared 5x5 blocks of both class covariance matrices.
const double kBlock1[5][5] = {
    {2.57, -2.14, 1.33, 0.04, -0.76},
    {-2.14, 6.12, -2.99, -0.36, 1.25},
    {1.33, -2.99, 6.36, -1.85, 2.05},
    {0.04, -0.36, -1.85, 3.29, -0.97},
    {-0.76, 1.25, 2.05, -0.97, 6.07},
};

const double kBlock2[5][5] = {
    {3.80, -1.97, 1.69, -0.29, -1.01},
    {-1.97, 7.77, -1.69, -2.07, 2.00},
    {1.69, -1.69, 3.86, 1.67, -1.46},
    {-0.29, -2.07, 1.67, 4.12, -1.47},
    {-1.01, 2.00, -1.46, -1.47, 1.92},
};

// Class-specific 10x10 blocks over X11..X20.
const double kBlock3Class0[10][10] = {
    {5.82, -1.29, -2.52, 1.80, -1.93, -2.13, -2.74, -1.84, -0.09, -2.72},
    {-1.29, 8.60, -0.98, -3.48, -1.80, -1.33, 2.56, -2.21, -1.09, -0.62},
    {-2.52, -0.98, 5.44, 0.48, -1.02, 0.63, -1.18, 1.90, -1.13, 2.84},
    {1.80, -3.48, 0.48, 5.67, -1.13, -1.80, -2.98, 0.89, 0.28, -0.37},
    {-1.93, -1.80, -1.02, -1.13, 7.80, 2.92, 3.83, 3.01, 1.11, 2.81},
    {-2.13, -1.33, 0.63, -1.80, 2.92, 4.44, 3.05, 2.73, -0.03, 1.93},
    {-2.74, 2.56, -1.18, -2.98, 3.83, 3.05, 7.16, 2.72, 2.21, 2.05},
    {-1.84, -2.21, 1.90, 0.89, 3.01, 2.73, 2.72, 5.21, 1.16, 3.65},
    {-0.09, -1.09, -1.13, 0.28, 1.11, -0.03, 2.21, 1.16, 4.99, 0.23},
    {-2.72, -0.62, 2.84, -0.37, 2.81, 1.93, 2.05, 3.65, 0.23, 5.88},
};

const double kBlock3Class1[10][10] = {
    {6.01, -3.24, 2.67, -0.55, 3.89, 1.34, 1.22, -1.22, 2.02, -2.53},
    {-3.24, 7.78, -0.19, 2.07, -3.66, 0.89, -0.01, 0.03, -0.35, -0.28},
    {2.67, -0.19, 6.12, 0.90, 3.53, 1.65, -0.00, -1.67, 3.01, -1.95},
    {-0.55, 2.07, 0.90, 5.60, 1.52, 2.00, 1.41, 1.80, 1.06, -1.91},
    {3.89, -3.66, 3.53, 1.52, 8.20, 1.75, 1.01, -0.11, 2.97, -1.88},
    {1.34, 0.89, 1.65, 2.00, 1.75, 3.06, 1.48, -0.59, 1.15, -0.50},
    {1.22, -0.01, -0.00, 1.41, 1.01, 1.48, 5.03, -1.08, 1.93, -1.31},
    {-1.22, 0.03, -1.67, 1.80, -0.11, -0.59, -1.08, 4.02, -1.14, 0.08},
    {2.02, -0.35, 3.01, 1.06, 2.97, 1.15, 1.93, -1.14, 5.13, -1.57},
    {-2.53, -0.28, -1.95, -1.91, -1.88, -0.50, -1.31, 0.08, -1.57, 5.40},
};

const double kMu0[20] = {-2.42, 5.84, 20.10, 12.66, 0.35,  12.64, 12.29, 21.29, 1.11,  24.69,
                         25.27, -3.53, 6.10, -4.52, 3.37,  19.73, 5.78,  12.80, -3.19, 14.76};
const double kMu1[20] = {-2.42, 5.84, 20.10, 12.66, 0.35,  12.64, 12.29, 21.29, 1.11,  24.69,
                         24.44, -4.78, 6.51, -4.73, 2.08,  20.63, 5.26,  13.57, -2.94, 15.39};

}  // namespace

BlockGaussianSpec simulated_study_spec() {
  BlockGaussianSpec spec;
  spec.d = 20;
  spec.prevalence = 0.5;
  spec.mu0.assign(kMu0, kMu0 + 20);
  spec.mu1.assign(kMu1, kMu1 + 20);
  spec.sigma0 = Matrix(20, 20);
  spec.sigma1 = Matrix(20, 20);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      spec.sigma0(i, j) = kBlock1[i][j];
      spec.sigma1(i, j) = kBlock1[i][j];
      spec.sigma0(i + 5, j + 5) = kBlock2[i][j];
      spec.sigma1(i + 5, j + 5) = kBlock2[i][j];
    }
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      spec.sigma0(i + 10, j + 10) = kBlock3Class0[i][j];
      spec.sigma1(i + 10, j + 10) = kBlock3Class1[i][j];
    }
  return spec;
}

Dataset simulate(const BlockGaussianSpec& spec, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("simulate: n must be positive");
  const int d = spec.d;
  Matrix l0 = cholesky(spec.sigma0);
  Matrix l1 = cholesky(spec.sigma1);

  Dataset out;
  out.names.resize(d);
  for (int j = 0; j < d; ++j) out.names[j] = "X" + std::to_string(j + 1);
  out.x = Matrix(n, d);
  out.y.resize(n);

  std::vector<double> z(d);
  for (int i = 0; i < n; ++i) {
    const int cls = rng.next_double() < spec.prevalence ? 1 : 0;
    out.y[i] = cls;
    for (int j = 0; j < d; ++j) z[j] = rng.next_normal();
    const Matrix& l = cls == 1 ? l1 : l0;
    const std::vector<double>& mu = cls == 1 ? spec.mu1 : spec.mu0;
    for (int j = 0; j < d; ++j) {
      double v = mu[j];
      for (int k = 0; k <= j; ++k) v += l(j, k) * z[k];
      out.x(i, j) = v;
    }
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("train_test_split: fraction must be in (0,1)");
  const int n = data.n_rows();
  std::vector<int> idx0, idx1;
  for (int i = 0; i < n; ++i) (data.y[i] == 1.0 ? idx1 : idx0).push_back(i);
  if (idx0.size() < 2 || idx1.size() < 2) throw data_error("train_test_split: degenerate class counts");
  rng.shuffle(idx0);
  rng.shuffle(idx1);

  const int target_total = static_cast<int>(std::floor(test_fraction * n));
  int t0 = static_cast<int>(std::floor(test_fraction * static_cast<double>(idx0.size())));
  int t1 = static_cast<int>(std::floor(test_fraction * static_cast<double>(idx1.size())));
  // Hand leftover slots to the class with the larger fractional part.
  while (t0 + t1 < target_total) {
    double f0 = test_fraction * static_cast<double>(idx0.size()) - t0;
    double f1 = test_fraction * static_cast<double>(idx1.size()) - t1;
    if (f0 >= f1 && t0 < static_cast<int>(idx0.size()) - 1)
      ++t0;
    else
      ++t1;
  }

  std::vector<int> test_rows(idx0.begin(), idx0.begin() + t0);
  test_rows.insert(test_rows.end(), idx1.begin(), idx1.begin() + t1);
  std::vector<int> train_rows(idx0.begin() + t0, idx0.end());
  train_rows.insert(train_rows.end(), idx1.begin() + t1, idx1.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {data.select_rows(train_rows), data.select_rows(test_rows)};
}

}  // namespace tvs

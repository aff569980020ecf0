#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tvs/common.hpp"
#include "tvs/cvine.hpp"
#include "tvs/datagen.hpp"
#include "tvs/privacy.hpp"
#include "tvs/rng.hpp"
#include "tvs/stats.hpp"

using namespace tvs;

namespace {

Matrix identity_corr(int d1) {
  Matrix m(d1, d1);
  for (int i = 0; i < d1; ++i) m(i, i) = 1.0;
  return m;
}

// Random well-conditioned correlation matrix via a random Gram matrix.
Matrix random_corr(int d1, RngStream& rng) {
  Matrix a(d1, d1 + 4);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1 + 4; ++j) a(i, j) = rng.next_normal();
  Matrix g(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j) {
      double s = 0;
      for (int k = 0; k < d1 + 4; ++k) s += a(i, k) * a(j, k);
      g(i, j) = s + (i == j ? 2.0 : 0.0);
    }
  Matrix r(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j) r(i, j) = g(i, j) / std::sqrt(g(i, i) * g(j, j));
  return r;
}

std::vector<int> identity_order(int d) {
  std::vector<int> o(d);
  std::iota(o.begin(), o.end(), 0);
  return o;
}

}  // namespace

TEST_SUITE_BEGIN("privacy");

TEST_CASE("select_targets") {
  Dataset ds;
  ds.names = {"s"};
  ds.x = Matrix(100, 1);
  ds.y.assign(100, 0.0);
  for (int i = 0; i < 100; ++i) {
    ds.x(i, 0) = i + 1;  // 1..100
    ds.y[i] = i % 2;
  }
  RngStream rng(81, 0);
  SUBCASE("outliers come from the tails") {
    std::vector<int> t = select_targets(ds, 0, TargetMode::outlier, 4, rng);
    CHECK(t.size() == 4);
    for (int row : t) {
      double v = ds.x(row, 0);
      CHECK((v <= 3.0 || v >= 98.0));
    }
  }
  SUBCASE("random selection is deterministic given the stream") {
    RngStream a(82, 0), b(82, 0);
    CHECK(select_targets(ds, 0, TargetMode::random, 5, a) == select_targets(ds, 0, TargetMode::random, 5, b));
  }
  SUBCASE("too many outliers requested") {
    CHECK_THROWS_AS(select_targets(ds, 0, TargetMode::outlier, 50, rng), data_error);
  }
}

TEST_CASE("theoretical_beta") {
  SUBCASE("identity correlation gives zero coefficients") {
    Matrix rho = identity_corr(8);
    TheoreticalBeta tb = theoretical_beta(rho, 2, 3);
    for (double b : tb.beta) CHECK(b == 0.0);
    CHECK(tb.sigma2 == doctest::Approx(1.0));
  }
  SUBCASE("leading zeros at the truncation boundary") {
    RngStream rng(83, 0);
    Matrix rho = random_corr(7, rng);  // d = 6 covariates + response
    const int j_star = 1;              // 0-based; 1-based j* = 2
    const int tau = 5;                 // d + 1 - j* = 6 + 1 - 2
    TheoreticalBeta tb = theoretical_beta(rho, j_star, tau);
    for (int k = 0; k < 6 - tau; ++k) CHECK(std::fabs(tb.beta[k]) <= 1e-12);
    CHECK(tb.sigma2 > 0.0);
    CHECK(tb.sigma2 < 1.0);
  }
  SUBCASE("full regression for the first column matches a direct solve") {
    RngStream rng(84, 0);
    Matrix rho = random_corr(6, rng);
    TheoreticalBeta tb = theoretical_beta(rho, 0, 5);  // tau = d = 5, j* = 1
    // direct normal-equation solve on the full minor
    Matrix sub(5, 5);
    std::vector<double> rhs(5);
    for (int i = 0; i < 5; ++i) {
      rhs[i] = rho(i + 1, 0);
      for (int j = 0; j < 5; ++j) sub(i, j) = rho(i + 1, j + 1);
    }
    std::vector<double> direct = solve_spd(sub, rhs);
    for (int i = 0; i < 5; ++i) CHECK(tb.beta[i] == doctest::Approx(direct[i]).epsilon(1e-10));
  }
  SUBCASE("zero pattern grows by one per truncation step") {
    RngStream rng(85, 0);
    Matrix rho = random_corr(7, rng);
    for (int tau = 1; tau <= 5; ++tau) {
      TheoreticalBeta tb = theoretical_beta(rho, 1, tau);
      int zeros = 0;
      for (double b : tb.beta) zeros += std::fabs(b) <= 1e-12;
      CHECK(zeros >= 6 - tau);
    }
  }
  SUBCASE("input validation") {
    Matrix rho = identity_corr(4);
    CHECK_THROWS_AS(theoretical_beta(rho, 0, 9), std::invalid_argument);
    rho(0, 1) = 0.5;  // asymmetric
    CHECK_THROWS_AS(theoretical_beta(rho, 0, 2), std::invalid_argument);
    Matrix bad = identity_corr(3);
    bad(0, 1) = bad(1, 0) = 0.999;
    bad(0, 2) = bad(2, 0) = 0.999;
    bad(1, 2) = bad(2, 1) = -0.999;
    CHECK_THROWS_AS(theoretical_beta(bad, 0, 1), numeric_error);
  }
}

TEST_CASE("block_zero_beta_check") {
  // d = 6 covariates + response; S + K block = columns {0,1,2}
  const int d1 = 7;
  RngStream rng(86, 0);
  Matrix rho = identity_corr(d1);
  // correlated sensitive block
  rho(0, 1) = rho(1, 0) = 0.6;
  rho(0, 2) = rho(2, 0) = 0.4;
  rho(1, 2) = rho(2, 1) = 0.3;
  // correlated remainder block including the response
  for (int i = 3; i < d1; ++i)
    for (int j = i + 1; j < d1; ++j) rho(i, j) = rho(j, i) = 0.25;

  std::vector<int> s_set{0}, k_set{1, 2};
  SUBCASE("block structure zeroes the coefficients at the bound") {
    BlockZeroCheck chk = block_zero_beta_check(rho, k_set, s_set, 4);  // d + 1 - |K| - |S| = 4
    CHECK(chk.holds);
    CHECK(chk.max_abs_beta <= 1e-12);
  }
  SUBCASE("a cross-block entry breaks the guarantee") {
    Matrix broken = rho;
    broken(0, 5) = broken(5, 0) = 0.5;
    BlockZeroCheck chk = block_zero_beta_check(broken, k_set, s_set, 4);
    CHECK(!chk.holds);
    CHECK(chk.max_abs_beta > 0.01);
  }
  SUBCASE("tau above the bound is rejected") {
    CHECK_THROWS_AS(block_zero_beta_check(rho, k_set, s_set, 5), std::invalid_argument);
  }
  SUBCASE("overlapping sets are rejected") {
    std::vector<int> overlap{0};
    CHECK_THROWS_AS(block_zero_beta_check(rho, overlap, s_set, 2), std::invalid_argument);
  }
}

TEST_CASE("aia on a hand-built exact linear relation") {
  // synthetic data with z_sensitive an exact linear combination: OLS
  // recovers the coefficients, so MAB equals their mean absolute value.
  const int n = 200;
  RngStream rng(87, 0);
  Dataset real;
  real.names = {"s", "a", "b"};
  real.x = Matrix(n, 3);
  real.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double a = rng.next_normal(), b = rng.next_normal();
    real.x(i, 1) = a;
    real.x(i, 2) = b;
    real.x(i, 0) = 2.0 * a - 1.0 * b;
    real.y[i] = i % 2;
  }
  // generator that returns bootstrap copies of its reference data
  GeneratorFn gen = [](const Dataset& ref, RngStream&) -> SamplerFn {
    Dataset copy = ref;
    return [copy](int n_rows, RngStream& srng) {
      std::vector<int> rows(n_rows);
      for (int i = 0; i < n_rows; ++i) rows[i] = static_cast<int>(srng.next_below(copy.n_rows()));
      return copy.select_rows(rows);
    };
  };
  AIAConfig cfg;
  cfg.n_iter = 1;
  cfg.n_synth = 1;
  cfg.size_raw_t = 150;
  cfg.size_syn_t = 150;
  cfg.bootstrap_size = 150;
  RngStream arng(88, 0);
  std::vector<int> targets{0, 1};
  AIAReport rep = run_aia(real, gen, 0, targets, cfg, arng);
  CHECK(rep.skipped == 0);
  CHECK(rep.per_set_mab.size() == 1);
  // standardized coefficients of an exact relation: mean |beta| over
  // (a, b, response): response coefficient is ~0
  CHECK(rep.wcab >= rep.mab);
  CHECK(rep.mab > 0.3);   // strong leakage visible
  CHECK(rep.wcab < 1.2);  // standardized coefficients stay bounded
}

TEST_CASE("aia on an independence generator stays at the noise floor") {
  RngStream rng(89, 0);
  Dataset real = simulate(simulated_study_spec(), 400, rng);
  GeneratorFn gen = cvine_generator(identity_order(20), 1);
  AIAConfig cfg;
  cfg.n_iter = 2;
  cfg.n_synth = 4;
  cfg.size_raw_t = 300;
  cfg.size_syn_t = 400;
  cfg.bootstrap_size = 300;
  RngStream arng(90, 0);
  std::vector<int> targets{0};
  AIAReport rep = run_aia(real, gen, 0, targets, cfg, arng);
  CHECK(rep.mab <= 3.0 / std::sqrt(static_cast<double>(cfg.size_syn_t)));
  CHECK(rep.wcab >= rep.mab);
}

TEST_CASE("aia by truncation shares the reference draws") {
  RngStream rng(91, 0);
  Dataset real = simulate(simulated_study_spec(), 400, rng);
  AIAConfig cfg;
  cfg.n_iter = 1;
  cfg.n_synth = 2;
  cfg.size_raw_t = 250;
  cfg.size_syn_t = 250;
  cfg.bootstrap_size = 250;
  std::vector<int> truncs{1, 12};
  std::vector<int> targets{0};
  RngStream arng(92, 0);
  auto reports = run_aia_by_truncation(real, identity_order(20), truncs, 5, targets, cfg, {}, arng);
  CHECK(reports.size() == 2);
  CHECK(reports.count(1) == 1);
  CHECK(reports.count(12) == 1);
  for (auto& [t, rep] : reports) CHECK(rep.per_set_mab.size() == 2);
}

TEST_CASE("mia privacy gain bounds") {
  // degenerate classifiers: a generator ignoring its training data makes
  // the attacker guess at chance, so PG sits near 1
  RngStream rng(93, 0);
  Dataset real = simulate(simulated_study_spec(), 300, rng);
  GeneratorFn constant_gen = [](const Dataset& ref, RngStream&) -> SamplerFn {
    Dataset frozen = ref;  // ignore membership: always sample from fixed marginals
    return [frozen](int n_rows, RngStream& srng) {
      Dataset out = frozen;
      std::vector<int> rows(n_rows);
      for (int i = 0; i < n_rows; ++i) rows[i] = static_cast<int>(srng.next_below(frozen.n_rows() / 2));
      return frozen.select_rows(rows);
    };
  };
  MIAConfig cfg;
  cfg.n_iter = 4;
  cfg.n_shadows = 4;
  cfg.n_syn_a = 3;
  cfg.n_syn_t = 3;
  cfg.size_raw_a = 120;
  cfg.size_raw_t = 100;
  cfg.size_syn_t = 100;
  RngStream mrng(94, 0);
  MIAReport rep = run_mia(real, constant_gen, 7, cfg, mrng);
  CHECK(rep.privacy_gain >= 0.0);
  CHECK(rep.privacy_gain <= 2.0);
  CHECK(rep.privacy_gain == doctest::Approx(1.0 - (rep.p_guess_in - rep.p_guess_out)));
}

TEST_SUITE_END();

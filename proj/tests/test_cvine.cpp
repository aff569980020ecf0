#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tvs/common.hpp"
#include "tvs/cvine.hpp"
#include "tvs/datagen.hpp"
#include "tvs/stats.hpp"

using namespace tvs;

namespace {

// Bivariate dataset whose covariate pair follows a Gaussian copula and
// whose response depends on nothing.
Dataset gaussian_pair_data(int n, double rho, RngStream& rng) {
  Dataset ds;
  ds.names = {"a", "b"};
  ds.x = Matrix(n, 2);
  ds.y.resize(n);
  PairCopula pc(PairCopulaFamily(FamilyKind::gaussian), rho);
  for (int i = 0; i < n; ++i) {
    double v = rng.next_double();
    double u = pc_h_inverse(pc, rng.next_double(), v);
    ds.x(i, 0) = std_normal_quantile(u);
    ds.x(i, 1) = std_normal_quantile(v);
    ds.y[i] = rng.next_double() < 0.5 ? 1.0 : 0.0;
  }
  return ds;
}

Dataset independent_data(int n, int d, RngStream& rng) {
  Dataset ds;
  for (int j = 0; j < d; ++j) ds.names.push_back("v" + std::to_string(j));
  ds.x = Matrix(n, d);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.x(i, j) = rng.next_normal();
    ds.y[i] = rng.next_double() < 0.5 ? 1.0 : 0.0;
  }
  return ds;
}

std::vector<int> identity_order(int d) {
  std::vector<int> o(d);
  for (int i = 0; i < d; ++i) o[i] = i;
  return o;
}

}  // namespace

TEST_SUITE_BEGIN("cvine");

TEST_CASE("marginal table quantile/pit round trip") {
  MarginalTable t;
  t.name = "x";
  t.sorted_values = {1.0, 2.0, 4.0, 8.0, 16.0};
  for (double p : {0.2, 0.35, 0.5, 0.71}) {
    CHECK(t.pit(t.quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(t.quantile(0.0) == 1.0);
  CHECK(t.quantile(1.0) == 16.0);
  CHECK(t.pit(100.0) < 1.0);
  CHECK(t.pit(-100.0) > 0.0);
}

TEST_CASE("gaussian cvine from correlation reproduces the matrix") {
  const int D = 4;
  Matrix rho(D, D);
  const double vals[4][4] = {{1.0, 0.5, 0.3, 0.2},
                             {0.5, 1.0, 0.4, 0.1},
                             {0.3, 0.4, 1.0, 0.25},
                             {0.2, 0.1, 0.25, 1.0}};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) rho(i, j) = vals[i][j];
  CVineCopula vine = gaussian_cvine_from_correlation(rho);

  const int n = 40000;
  RngStream rng(99, 0);
  Matrix z(n, D);
  std::vector<double> u(D);
  for (int i = 0; i < n; ++i) {
    vine.sample_row(rng, u);
    // natural index m corresponds to matrix column D - m (0-based)
    for (int m = 1; m <= D; ++m) z(i, D - m) = std_normal_quantile(u[m - 1]);
  }
  for (int a = 0; a < D; ++a) {
    for (int b = a + 1; b < D; ++b) {
      double sab = 0, saa = 0, sbb = 0;
      for (int i = 0; i < n; ++i) {
        sab += z(i, a) * z(i, b);
        saa += z(i, a) * z(i, a);
        sbb += z(i, b) * z(i, b);
      }
      CHECK(sab / std::sqrt(saa * sbb) == doctest::Approx(rho(a, b)).epsilon(0.03));
    }
  }
}

TEST_CASE("fit on a single covariate gives a single tree") {
  RngStream rng(1, 1);
  Dataset ds;
  ds.names = {"x"};
  ds.x = Matrix(200, 1);
  ds.y.resize(200);
  for (int i = 0; i < 200; ++i) {
    ds.x(i, 0) = rng.next_normal();
    ds.y[i] = ds.x(i, 0) + rng.next_normal() > 0 ? 1.0 : 0.0;
  }
  CVineModel m = fit_cvine(ds, identity_order(1), 1);
  CHECK(m.dim() == 1);
  CHECK(m.copula.n_trees() == 1);
  CHECK(m.copula.trees()[0].size() == 1);
  CHECK(m.truncation_level == 1);
}

TEST_CASE("independent columns stay independent") {
  int all_indep_trials = 0;
  for (int trial = 0; trial < 10; ++trial) {
    RngStream rng(40 + trial, 2);
    Dataset ds = independent_data(600, 2, rng);
      CVineModel m = fit_cvine(ds, identity_order(2), 2);
    bool all_indep = true;
    for (const auto& tree : m.copula.trees())
      for (const auto& pc : tree) all_indep &= pc.is_independence();
    all_indep_trials += all_indep;
  }
  CHECK(all_indep_trials >= 8);  // >= 80% of trials
}

TEST_CASE("refit of gaussian cvine recovers parameters") {
  // Three covariates with a known Gaussian dependence; the response is
  // independent of everything, so the covariate trees carry the hand-built
  // parameters. (Tree-1 parameters are attenuated by the response jitter
  // and are checked against independence instead.)
  const int D = 4;
  Matrix rho(D, D);
  const double vals[4][4] = {{1.0, 0.45, 0.3, 0.0},
                             {0.45, 1.0, 0.55, 0.0},
                             {0.3, 0.55, 1.0, 0.0},
                             {0.0, 0.0, 0.0, 1.0}};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) rho(i, j) = vals[i][j];
  CVineCopula vine = gaussian_cvine_from_correlation(rho);

  const int n = 5000;
  RngStream rng(7, 7);
  Dataset ds;
  ds.names = {"x1", "x2", "x3"};
  ds.x = Matrix(n, 3);
  ds.y.resize(n);
  std::vector<double> u(D);
  for (int i = 0; i < n; ++i) {
    vine.sample_row(rng, u);
    ds.y[i] = u[0] > 0.5 ? 1.0 : 0.0;  // response is natural column 1
    for (int m = 2; m <= D; ++m) ds.x(i, D - m) = std_normal_quantile(u[m - 1]);
  }
  std::vector<PairCopulaFamily> gauss_only{PairCopulaFamily(FamilyKind::independence),
                                           PairCopulaFamily(FamilyKind::gaussian)};
  CVineModel m = fit_cvine(ds, identity_order(3), 3, gauss_only);
  for (int nat = 2; nat <= D; ++nat) {
    const PairCopula& tree1 = m.copula.edge(1, nat);
    CHECK(std::fabs(tree1.theta) < 0.08);
  }
  for (int t = 2; t <= 3; ++t) {
    for (int nat = t + 1; nat <= D; ++nat) {
      const PairCopula& fitted = m.copula.edge(t, nat);
      const PairCopula& truth = vine.edge(t, nat);
      if (fitted.family.kind == FamilyKind::gaussian)
        CHECK(fitted.theta == doctest::Approx(truth.theta).epsilon(0.07));
      else
        CHECK(std::fabs(truth.theta) < 0.08);
    }
  }
}

TEST_CASE("truncate") {
  RngStream rng(3, 3);
  Dataset ds = independent_data(200, 4, rng);
  CVineModel m = fit_cvine(ds, identity_order(4), 4);
  CVineModel t_same = truncate(m, 4);
  CHECK(model_to_json(t_same) == model_to_json(m));
  CVineModel t1 = truncate(m, 1);
  for (size_t t0 = 1; t0 < t1.copula.trees().size(); ++t0)
    for (const auto& pc : t1.copula.trees()[t0]) CHECK(pc.family.kind == FamilyKind::independence);
  // composition
  CVineModel t5 = truncate(m, 3);
  CHECK(model_to_json(truncate(t5, 2)) == model_to_json(truncate(m, 2)));
  CHECK_THROWS_AS(truncate(t1, 3), std::invalid_argument);
}

TEST_CASE("sampling determinism and independence") {
  RngStream rng(5, 5);
  Dataset ds = independent_data(400, 3, rng);
  CVineModel m = fit_cvine(ds, identity_order(3), 3);
  CVineModel ind = truncate(m, 1);
  // replace tree 1 with independence as well: fully independent model
  ind.copula.trees()[0].assign(ind.copula.trees()[0].size(), PairCopula());

  RngStream s1(77, 1), s2(77, 1);
  Dataset a = sample(ind, 5000, s1);
  Dataset b = sample(ind, 5000, s2);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 5000; ++i) CHECK(a.x(i, j) == b.x(i, j));

  for (int j = 0; j < 3; ++j)
    for (int k = j + 1; k < 3; ++k) CHECK(std::fabs(kendall_tau(a.x.col(j), a.x.col(k))) <= 0.05);
}

TEST_CASE("fitted tau is reproduced in synthetic data") {
  RngStream rng(9, 9);
  Dataset ds = gaussian_pair_data(3000, 0.6, rng);
  CVineModel m = fit_cvine(ds, identity_order(2), 2);
  RngStream srng(11, 0);
  Dataset syn = sample(m, 5000, srng);
  const double target = 2.0 / M_PI * std::asin(0.6);
  CHECK(kendall_tau(syn.x.col(0), syn.x.col(1)) == doctest::Approx(target).epsilon(0.09));
}

TEST_CASE("truncate-then-sample equals refit at lower level") {
  RngStream data_rng(12, 0);
  BlockGaussianSpec spec = simulated_study_spec();
  Dataset ds = simulate(spec, 300, data_rng);

  CVineModel full = fit_cvine(ds, identity_order(20), 20);
  CVineModel low = fit_cvine(ds, identity_order(20), 7);
  CVineModel trunc = truncate(full, 7);
  CHECK(model_to_json(trunc) == model_to_json(low));

  RngStream s1(14, 0), s2(14, 0);
  Dataset a = sample(trunc, 200, s1);
  Dataset b = sample(low, 200, s2);
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 200; ++i) CHECK(a.x(i, j) == b.x(i, j));
}

TEST_CASE("truncation at one forces conditional independence given the response") {
  RngStream rng(28, 0);
  BlockGaussianSpec spec = simulated_study_spec();
  Dataset ds = simulate(spec, 600, rng);
  CVineModel t1 = truncate(fit_cvine(ds, identity_order(20), 20), 1);
  RngStream srng(29, 0);
  Dataset syn = sample(t1, 5000, srng);
  // class-conditional Kendall tau vanishes for every checked pair
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> rows;
    for (int i = 0; i < syn.n_rows(); ++i)
      if (syn.y[i] == cls) rows.push_back(i);
    Dataset part = syn.select_rows(rows);
    for (int a = 0; a < 20; a += 5) {
      for (int b = a + 1; b < 20; b += 7) {
        CHECK(std::fabs(kendall_tau(part.x.col(a), part.x.col(b))) <= 0.05);
      }
    }
  }
}

TEST_CASE("model PIT through own marginals is uniform") {
  RngStream rng(15, 0);
  Dataset ds = gaussian_pair_data(2000, 0.4, rng);
  CVineModel m = fit_cvine(ds, identity_order(2), 2);
  RngStream srng(17, 0);
  const int n = 5000;
  Dataset syn = sample(m, n, srng);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = m.marginals[j].pit(syn.x(i, j));
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      ks = std::max(ks, std::fabs(u[i] - (i + 1.0) / n));
      ks = std::max(ks, std::fabs(u[i] - static_cast<double>(i) / n));
    }
    CHECK(ks <= 1.36 / std::sqrt(static_cast<double>(n)) * 1.5);
  }
}

TEST_CASE("copula log density matches the closed form in two dimensions") {
  // one covariate + response: a single gaussian pair copula
  RngStream rng(18, 0);
  Dataset ds = independent_data(300, 1, rng);
  CVineModel m = fit_cvine(ds, identity_order(1), 1);
  m.copula.trees()[0][0] = PairCopula(PairCopulaFamily(FamilyKind::gaussian), 0.55);
  for (double uy : {0.2, 0.5, 0.9}) {
    for (double ux : {0.1, 0.45, 0.8}) {
      std::vector<double> u{uy, ux};
      CHECK(copula_log_density(m, u) ==
            doctest::Approx(pc_log_density(m.copula.edge(1, 2), ux, uy)).epsilon(1e-12));
    }
  }
}

TEST_CASE("log density of the independence model is the marginal sum") {
  RngStream rng(20, 0);
  Dataset ds = independent_data(400, 3, rng);
  CVineModel m = fit_cvine(ds, identity_order(3), 3);
  for (auto& tree : m.copula.trees()) tree.assign(tree.size(), PairCopula());
  std::vector<double> row{0.3, -0.5, 1.1};
  for (int y : {0, 1}) {
    double expect = y == 1 ? std::log(m.response_prevalence) : std::log(1 - m.response_prevalence);
    for (int j = 0; j < 3; ++j) expect += m.marginals[j].log_density(row[j]);
    CHECK(log_density(m, row, y) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("psi decomposition") {
  RngStream rng(22, 0);
  BlockGaussianSpec spec = simulated_study_spec();
  Dataset ds = simulate(spec, 500, rng);
  std::vector<PairCopulaFamily> gauss_only{PairCopulaFamily(FamilyKind::independence),
                                           PairCopulaFamily(FamilyKind::gaussian)};
  CVineModel m = fit_cvine(ds, identity_order(20), 20, gauss_only);

  SUBCASE("identity with the joint log density") {
    for (int i = 0; i < 20; ++i) {
      std::vector<double> row = ds.x.row(i);
      PsiDecomposition psi = psi_decomposition(m, row);
      const double recon = log_density(m, row, 1) - log_density(m, row, 0);
      CHECK(psi.total == doctest::Approx(recon).epsilon(1e-8));
      CHECK(psi.truncated(20) == doctest::Approx(psi.total).epsilon(1e-14));
    }
  }
  SUBCASE("independence trees contribute zero") {
    CVineModel t1 = truncate(m, 1);
    std::vector<double> row = ds.x.row(0);
    PsiDecomposition psi = psi_decomposition(t1, row);
    for (int t = 2; t <= 20; ++t) CHECK(psi.psi_t[t - 1] == 0.0);
  }
  SUBCASE("balanced classes and independence tree 1 give zero psi1") {
    CVineModel flat = truncate(m, 1);
    flat.response_prevalence = 0.5;
    flat.copula.trees()[0].assign(flat.copula.trees()[0].size(), PairCopula());
    std::vector<double> row = ds.x.row(3);
    PsiDecomposition psi = psi_decomposition(flat, row);
    CHECK(psi.psi_t[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("serialization round trip") {
  RngStream rng(24, 0);
  Dataset ds = gaussian_pair_data(300, 0.5, rng);
  CVineModel m = fit_cvine(ds, identity_order(2), 2);
  std::string j = model_to_json(m);
  CVineModel back = model_from_json(j);
  CHECK(model_to_json(back) == j);

  SUBCASE("schema violations are rejected") {
    CHECK_THROWS_AS(model_from_json("{ not json"), data_error);
    std::string bad_trunc = j;
    auto pos = bad_trunc.find("\"truncation_level\": 2");
    REQUIRE(pos != std::string::npos);
    bad_trunc.replace(pos, 21, "\"truncation_level\": 9");
    CHECK_THROWS_WITH_AS(model_from_json(bad_trunc), doctest::Contains("truncation_level"), data_error);
    std::string bad_family = j;
    pos = bad_family.find("\"gaussian\"");
    if (pos == std::string::npos) pos = bad_family.find("\"independence\"");
    REQUIRE(pos != std::string::npos);
    bad_family.replace(pos, 10, "\"studentt\"");
    CHECK_THROWS_WITH_AS(model_from_json(bad_family), doctest::Contains("studentt"), data_error);
  }
}

TEST_CASE("fit input validation") {
  RngStream rng(26, 0);
  Dataset tiny = independent_data(10, 2, rng);
  CHECK_THROWS_AS(fit_cvine(tiny, identity_order(2), 2), data_error);

  Dataset ds = independent_data(100, 2, rng);
  for (int i = 0; i < 100; ++i) ds.x(i, 1) = 3.0;
  CHECK_THROWS_WITH_AS(fit_cvine(ds, identity_order(2), 2), doctest::Contains("constant"), data_error);
}

TEST_SUITE_END();

#include "tvs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvs/common.hpp"
#include "tvs/cvine.hpp"
#include "tvs/stats.hpp"

namespace tvs {

double utility_auc(const Dataset& train, const Dataset& test, const ForestConfig& cfg) {
  RandomForest forest = RandomForest::fit(train.x, train.y, cfg);
  std::vector<double> scores = forest.predict_proba(test.x);
  return auc(test.y, scores);
}

namespace {

std::vector<double> distances_to(const Matrix& m, std::span<const double> center) {
  std::vector<double> d(m.rows());
  parallel_for(m.rows(), [&](int i) {
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
      double t = m(i, j) - center[j];
      s += t * t;
    }
    d[i] = std::sqrt(s);
  });
  return d;
}

// Index of the point minimizing the total distance to its own set.
int medoid(const Matrix& m) {
  const int n = m.rows();
  std::vector<double> total(n, 0.0);
  parallel_for(n, [&](int i) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < m.cols(); ++j) {
        double t = m(i, j) - m(k, j);
        s += t * t;
      }
      acc += std::sqrt(s);
    }
    total[i] = acc;
  });
  return static_cast<int>(std::min_element(total.begin(), total.end()) - total.begin());
}

double sq_dist(const Matrix& a, int i, const Matrix& b, int k) {
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    double t = a(i, j) - b(k, j);
    s += t * t;
  }
  return s;
}

// Fraction of the grid deviation |curve - grid| integrated by trapezoid.
double integrated_score(const std::vector<double>& grid, const std::vector<double>& curve) {
  double integral = 0.0;
  for (size_t i = 1; i < grid.size(); ++i) {
    const double f0 = std::fabs(curve[i - 1] - grid[i - 1]);
    const double f1 = std::fabs(curve[i] - grid[i]);
    integral += 0.5 * (f0 + f1) * (grid[i] - grid[i - 1]);
  }
  return 1.0 - 2.0 * integral;
}

}  // namespace

FidelityReport fidelity(const Matrix& real, const Matrix& synthetic) {
  if (real.cols() != synthetic.cols()) throw std::invalid_argument("fidelity: column count mismatch");
  if (real.rows() < 2 || synthetic.rows() < 2) throw data_error("fidelity: need at least two rows per side");

  // One common map: both sides standardized by the real-data statistics,
  // so location/scale drift of the synthetic data stays visible.
  Standardizer st = Standardizer::fit(real);
  Matrix r = st.apply(real);
  Matrix s = st.apply(synthetic);

  FidelityReport rep;
  const int grid_n = 21;
  for (int i = 0; i < grid_n; ++i) rep.alpha_grid.push_back(static_cast<double>(i) / (grid_n - 1));
  rep.beta_grid = rep.alpha_grid;

  const int rm = medoid(r);
  const int sm = medoid(s);
  std::vector<double> r_center = r.row(rm), s_center = s.row(sm);
  std::vector<double> r_dist = distances_to(r, r_center);
  std::vector<double> s_dist_to_r = distances_to(s, r_center);
  std::vector<double> s_dist = distances_to(s, s_center);
  std::vector<double> r_dist_to_s = distances_to(r, s_center);

  for (double a : rep.alpha_grid) {
    if (a == 0.0) {
      rep.p_alpha.push_back(0.0);
      continue;
    }
    const double radius = empirical_quantile(r_dist, a);
    int inside = 0;
    for (double dv : s_dist_to_r) inside += dv <= radius;
    rep.p_alpha.push_back(static_cast<double>(inside) / s_dist_to_r.size());
  }
  for (double b : rep.beta_grid) {
    if (b == 0.0) {
      rep.r_beta.push_back(0.0);
      continue;
    }
    const double radius = empirical_quantile(s_dist, b);
    int inside = 0;
    for (double dv : r_dist_to_s) inside += dv <= radius;
    rep.r_beta.push_back(static_cast<double>(inside) / r_dist_to_s.size());
  }
  rep.ip_alpha = integrated_score(rep.alpha_grid, rep.p_alpha);
  rep.ir_beta = integrated_score(rep.beta_grid, rep.r_beta);

  // Nearest-real-neighbor distance of every real point.
  std::vector<double> nn_real(r.rows());
  parallel_for(r.rows(), [&](int i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < r.rows(); ++k) {
      if (k == i) continue;
      best = std::min(best, sq_dist(r, i, r, k));
    }
    nn_real[i] = best;
  });
  std::vector<int> authentic(s.rows(), 0);
  parallel_for(s.rows(), [&](int i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int k = 0; k < r.rows(); ++k) {
      double dv = sq_dist(s, i, r, k);
      if (dv < best) {
        best = dv;
        arg = k;
      }
    }
    authentic[i] = best > nn_real[arg] ? 1 : 0;
  });
  double acc = 0.0;
  for (int a : authentic) acc += a;
  rep.authenticity = acc / s.rows();
  return rep;
}

std::vector<SweepRecord> sweep(const Dataset& train, const Dataset& test, const std::vector<int>& order,
                               const SweepConfig& cfg, RngStream& rng) {
  if (cfg.truncations.empty()) throw std::invalid_argument("sweep: empty truncation set");
  const int d = train.n_cols();
  for (int t : cfg.truncations)
    if (t < 1 || t > d) throw std::invalid_argument("sweep: truncation level out of range");
  const int t_fit = *std::max_element(cfg.truncations.begin(), cfg.truncations.end());
  const int n_rows = cfg.synth_rows > 0 ? cfg.synth_rows : train.n_rows();

  // The sensitive data is touched once: fit at the top level, truncate down.
  CVineModel full = fit_cvine(train, order, t_fit, cfg.candidates);

  std::vector<SweepRecord> records;
  std::map<int, std::vector<double>> utility_vals;
  for (int t : cfg.truncations) {
    CVineModel model = truncate(full, t);
    std::vector<double> aucs(cfg.utility_reps);
    parallel_for(cfg.utility_reps, [&](int r) {
      RngStream srng = rng.substream(0x5A3f00 + static_cast<std::uint64_t>(t) * 100003 + r);
      Dataset syn = sample(model, n_rows, srng);
      ForestConfig fc = cfg.forest;
      fc.seed = RngStream(cfg.forest.seed, 0xF0F0 + static_cast<std::uint64_t>(t) * 1009 + r).next_u64();
      aucs[r] = utility_auc(syn, test, fc);
    });
    utility_vals[t] = std::move(aucs);
  }

  std::map<int, std::vector<double>> privacy_vals;
  if (cfg.privacy == "mab") {
    RngStream aia_rng = rng.substream(0xA1A);
    std::vector<int> targets;  // MAB does not depend on targets
    std::map<int, AIAReport> reports = run_aia_by_truncation(train, order, cfg.truncations, cfg.sensitive,
                                                             targets, cfg.aia, cfg.candidates, aia_rng);
    for (auto& [t, rep] : reports) privacy_vals[t] = rep.per_set_mab;
  } else if (cfg.privacy == "pg") {
    RngStream tgt_rng = rng.substream(0x7A1);
    std::vector<int> targets = select_targets(train, cfg.sensitive, TargetMode::outlier, cfg.mia_outlier_targets,
                                              tgt_rng);
    std::vector<int> rnd = select_targets(train, cfg.sensitive, TargetMode::random, cfg.mia_random_targets, tgt_rng);
    targets.insert(targets.end(), rnd.begin(), rnd.end());
    for (int t : cfg.truncations) {
      std::vector<double> pgs;
      for (size_t k = 0; k < targets.size(); ++k) {
        RngStream mia_rng = rng.substream(0x41A000 + static_cast<std::uint64_t>(t) * 4099 + k);
        GeneratorFn gen = cvine_generator(order, t, cfg.candidates);
        MIAReport rep = run_mia(train, gen, targets[k], cfg.mia, mia_rng);
        pgs.push_back(rep.privacy_gain);
      }
      privacy_vals[t] = std::move(pgs);
    }
  } else {
    throw std::invalid_argument("sweep: privacy metric must be 'mab' or 'pg'");
  }

  for (int t : cfg.truncations) {
    SweepRecord rec;
    rec.truncation = t;
    rec.privacy_metric = cfg.privacy;
    auto& u = utility_vals[t];
    rec.utility_median = median(u);
    rec.utility_q25 = quantile_of(u, 0.25);
    rec.utility_q75 = quantile_of(u, 0.75);
    auto& p = privacy_vals[t];
    rec.privacy_median = median(p);
    rec.privacy_q25 = quantile_of(p, 0.25);
    rec.privacy_q75 = quantile_of(p, 0.75);
    records.push_back(rec);
  }
  return records;
}

std::string sweep_records_to_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "truncation,utility_median,utility_q25,utility_q75,privacy_metric,privacy_median,privacy_q25,privacy_q75\n";
  out.setf(std::ios::fmtflags(0), std::ios::floatfield);
  out.precision(17);
  for (const auto& r : records) {
    out << r.truncation << ',' << r.utility_median << ',' << r.utility_q25 << ',' << r.utility_q75 << ','
        << r.privacy_metric << ',' << r.privacy_median << ',' << r.privacy_q25 << ',' << r.privacy_q75 << '\n';
  }
  return out.str();
}

}  // namespace tvs

#include "tvs/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "tvs/common.hpp"
#include "tvs/cvine.hpp"
#include "tvs/forest.hpp"
#include "tvs/stats.hpp"

namespace tvs {

GeneratorFn cvine_generator(std::vector<int> order, int truncation, std::vector<PairCopulaFamily> candidates) {
  return [order = std::move(order), truncation, candidates = std::move(candidates)](
             const Dataset& ref, RngStream&) -> SamplerFn {
    auto model = std::make_shared<CVineModel>(fit_cvine(ref, order, truncation, candidates));
    return [model](int n_rows, RngStream& sample_rng) { return sample(*model, n_rows, sample_rng); };
  };
}

std::vector<int> select_targets(const Dataset& data, int sensitive, TargetMode mode, int count, RngStream& rng) {
  const int n = data.n_rows();
  if (count > n) throw std::invalid_argument("select_targets: count exceeds row count");
  if (sensitive < 0 || sensitive >= data.n_cols())
    throw std::invalid_argument("select_targets: sensitive column out of range");
  if (mode == TargetMode::random) {
    std::vector<int> rows = rng.sample_without_replacement(n, count);
    return rows;
  }
  auto col = data.x.col(sensitive);
  const double lo = empirical_quantile(col, 0.025);
  const double hi = empirical_quantile(col, 0.975);
  std::vector<int> pool;
  for (int i = 0; i < n; ++i)
    if (col[i] < lo || col[i] > hi) pool.push_back(i);
  if (static_cast<int>(pool.size()) < count)
    throw data_error("select_targets: only " + std::to_string(pool.size()) + " outliers available, need " +
                     std::to_string(count));
  std::vector<int> pick = rng.sample_without_replacement(static_cast<int>(pool.size()), count);
  std::vector<int> rows(count);
  for (int i = 0; i < count; ++i) rows[i] = pool[pick[i]];
  return rows;
}

namespace {

// One AIA regression on a standardized data set: sensitive column against
// every other column including the response. Returns false on degenerate
// input (zero variance or collinear regressors).
bool aia_regression(const Matrix& full, int sensitive, std::vector<double>& beta_out, double& intercept_out) {
  const int d1 = full.cols();
  Matrix std_full;
  try {
    std_full = standardize(full);
  } catch (const data_error&) {
    return false;
  }
  Matrix design(full.rows(), d1 - 1);
  int c = 0;
  for (int j = 0; j < d1; ++j) {
    if (j == sensitive) continue;
    for (int i = 0; i < full.rows(); ++i) design(i, c) = std_full(i, j);
    ++c;
  }
  try {
    OlsFit fit = ols_fit(design, std_full.col(sensitive));
    beta_out = fit.coef;
    intercept_out = fit.intercept;
    return true;
  } catch (const data_error&) {
    return false;
  }
}

struct AiaBucket {
  std::vector<double> beta;         // d_reg per recorded set
  std::vector<double> per_set_mab;
  std::vector<double> se_synth;     // per target, accumulated squared error
  std::vector<double> se_real;
  int n_sets_synth = 0;
  int n_sets_real = 0;
  int skipped = 0;
};

// Standardized target rows (full real-data statistics, per the game:
// the data holder standardizes the targets).
struct TargetView {
  std::vector<std::vector<double>> rows_std;  // covariates + response per target
  int sensitive;
};

TargetView make_target_view(const Dataset& real, std::span<const int> targets, int sensitive) {
  Matrix full = real.with_response();
  Standardizer st = Standardizer::fit(full);
  TargetView tv;
  tv.sensitive = sensitive;
  for (int t : targets) tv.rows_std.push_back(st.apply_row(full.row(t)));
  return tv;
}

void record_regression(AiaBucket& bucket, const TargetView& tv, std::span<const double> beta, double intercept,
                       bool synth_side) {
  const int d_reg = static_cast<int>(beta.size());
  if (synth_side) {
    bucket.beta.insert(bucket.beta.end(), beta.begin(), beta.end());
    double s = 0.0;
    for (double b : beta) s += std::fabs(b);
    bucket.per_set_mab.push_back(s / d_reg);
    ++bucket.n_sets_synth;
  } else {
    ++bucket.n_sets_real;
  }
  auto& se = synth_side ? bucket.se_synth : bucket.se_real;
  for (size_t t = 0; t < tv.rows_std.size(); ++t) {
    const auto& row = tv.rows_std[t];
    double guess = intercept;
    int c = 0;
    for (size_t j = 0; j < row.size(); ++j) {
      if (static_cast<int>(j) == tv.sensitive) continue;
      guess += beta[c++] * row[j];
    }
    const double err = guess - row[tv.sensitive];
    se[t] += err * err;
  }
}

AIAReport merge_buckets(std::vector<AiaBucket>& buckets, int d_reg, int n_iter, int n_synth, int n_targets) {
  AIAReport rep;
  rep.d = d_reg;
  rep.n_iter = n_iter;
  rep.n_synth = n_synth;
  rep.mse_synth.assign(n_targets, 0.0);
  rep.mse_real.assign(n_targets, 0.0);
  int sets_synth = 0, sets_real = 0;
  for (auto& b : buckets) {
    rep.beta.insert(rep.beta.end(), b.beta.begin(), b.beta.end());
    rep.per_set_mab.insert(rep.per_set_mab.end(), b.per_set_mab.begin(), b.per_set_mab.end());
    rep.skipped += b.skipped;
    sets_synth += b.n_sets_synth;
    sets_real += b.n_sets_real;
    for (int t = 0; t < n_targets; ++t) {
      rep.mse_synth[t] += t < static_cast<int>(b.se_synth.size()) ? b.se_synth[t] : 0.0;
      rep.mse_real[t] += t < static_cast<int>(b.se_real.size()) ? b.se_real[t] : 0.0;
    }
  }
  for (int t = 0; t < n_targets; ++t) {
    if (sets_synth > 0) rep.mse_synth[t] /= sets_synth;
    if (sets_real > 0) rep.mse_real[t] /= sets_real;
  }
  double acc = 0.0;
  rep.wcab = 0.0;
  for (double b : rep.beta) {
    acc += std::fabs(b);
    rep.wcab = std::max(rep.wcab, std::fabs(b));
  }
  rep.mab = rep.beta.empty() ? 0.0 : acc / static_cast<double>(rep.beta.size());
  return rep;
}

Dataset bootstrap_sample(const Dataset& real, int size, RngStream& rng) {
  std::vector<int> rows(size);
  for (int i = 0; i < size; ++i) rows[i] = static_cast<int>(rng.next_below(real.n_rows()));
  return real.select_rows(rows);
}

}  // namespace

AIAReport run_aia(const Dataset& real, const GeneratorFn& generator, int sensitive, std::span<const int> targets,
                  const AIAConfig& cfg, RngStream& rng) {
  if (sensitive < 0 || sensitive >= real.n_cols()) throw std::invalid_argument("run_aia: sensitive out of range");
  if (cfg.size_raw_t > real.n_rows()) throw std::invalid_argument("run_aia: size_raw_t exceeds data");
  const int d_reg = real.n_cols();  // other covariates + response
  TargetView tv = make_target_view(real, targets, sensitive);

  std::vector<AiaBucket> buckets(cfg.n_iter);
  parallel_for(cfg.n_iter, [&](int m) {
    RngStream rng_m = rng.substream(1000 + m);
    AiaBucket& bucket = buckets[m];
    bucket.se_synth.assign(targets.size(), 0.0);
    bucket.se_real.assign(targets.size(), 0.0);

    std::vector<int> ref_rows = rng_m.substream(0).sample_without_replacement(real.n_rows(), cfg.size_raw_t);
    Dataset ref = real.select_rows(ref_rows);
    RngStream fit_rng = rng_m.substream(1);
    SamplerFn sampler = generator(ref, fit_rng);

    std::vector<double> beta;
    double intercept;
    for (int l = 0; l < cfg.n_synth; ++l) {
      RngStream srng = rng_m.substream(2 + l);
      Dataset syn = sampler(cfg.size_syn_t, srng);
      if (aia_regression(syn.with_response(), sensitive, beta, intercept))
        record_regression(bucket, tv, beta, intercept, true);
      else
        ++bucket.skipped;

      RngStream brng = rng_m.substream(100000 + l);
      Dataset boot = bootstrap_sample(real, cfg.bootstrap_size, brng);
      if (aia_regression(boot.with_response(), sensitive, beta, intercept))
        record_regression(bucket, tv, beta, intercept, false);
    }
  });
  return merge_buckets(buckets, d_reg, cfg.n_iter, cfg.n_synth, static_cast<int>(targets.size()));
}

std::map<int, AIAReport> run_aia_by_truncation(const Dataset& real, const std::vector<int>& order,
                                               std::span<const int> truncations, int sensitive,
                                               std::span<const int> targets, const AIAConfig& cfg,
                                               std::vector<PairCopulaFamily> candidates, RngStream& rng) {
  if (truncations.empty()) throw std::invalid_argument("run_aia_by_truncation: empty truncation set");
  const int t_fit = *std::max_element(truncations.begin(), truncations.end());
  const int d_reg = real.n_cols();
  TargetView tv = make_target_view(real, targets, sensitive);

  std::vector<int> truncs(truncations.begin(), truncations.end());
  std::vector<std::vector<AiaBucket>> buckets(truncs.size(), std::vector<AiaBucket>(cfg.n_iter));

  parallel_for(cfg.n_iter, [&](int m) {
    RngStream rng_m = rng.substream(1000 + m);
    std::vector<int> ref_rows = rng_m.substream(0).sample_without_replacement(real.n_rows(), cfg.size_raw_t);
    Dataset ref = real.select_rows(ref_rows);
    CVineModel full = fit_cvine(ref, order, t_fit, candidates);

    std::vector<double> beta;
    double intercept;
    for (size_t ti = 0; ti < truncs.size(); ++ti) {
      CVineModel model = truncate(full, truncs[ti]);
      AiaBucket& bucket = buckets[ti][m];
      bucket.se_synth.assign(targets.size(), 0.0);
      bucket.se_real.assign(targets.size(), 0.0);
      for (int l = 0; l < cfg.n_synth; ++l) {
        RngStream srng = rng_m.substream(2 + static_cast<std::uint64_t>(ti) * cfg.n_synth + l);
        Dataset syn = sample(model, cfg.size_syn_t, srng);
        if (aia_regression(syn.with_response(), sensitive, beta, intercept))
          record_regression(bucket, tv, beta, intercept, true);
        else
          ++bucket.skipped;

        RngStream brng = rng_m.substream(100000 + l);
        Dataset boot = bootstrap_sample(real, cfg.bootstrap_size, brng);
        if (aia_regression(boot.with_response(), sensitive, beta, intercept))
          record_regression(bucket, tv, beta, intercept, false);
      }
    }
  });

  std::map<int, AIAReport> out;
  for (size_t ti = 0; ti < truncs.size(); ++ti)
    out[truncs[ti]] = merge_buckets(buckets[ti], d_reg, cfg.n_iter, cfg.n_synth, static_cast<int>(targets.size()));
  return out;
}

namespace {

// Summary features of one synthetic set: five order statistics per column
// plus the lower triangle of the Pearson correlation matrix.
std::vector<double> mia_features(const Dataset& syn) {
  Matrix full = syn.with_response();
  const int d1 = full.cols();
  const int n = full.rows();
  std::vector<double> feat;
  feat.reserve(5 * d1 + d1 * (d1 - 1) / 2);
  std::vector<double> mean(d1), sd(d1);
  for (int j = 0; j < d1; ++j) {
    auto c = full.col(j);
    double mu = std::accumulate(c.begin(), c.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    mean[j] = mu;
    sd[j] = std::sqrt(ss / std::max(1, n - 1));
    std::vector<double> sorted(c.begin(), c.end());
    std::sort(sorted.begin(), sorted.end());
    feat.push_back(mu);
    feat.push_back(sd[j]);
    feat.push_back(empirical_quantile(sorted, 0.5));
    feat.push_back(sorted.front());
    feat.push_back(sorted.back());
  }
  for (int j = 0; j < d1; ++j) {
    for (int k = j + 1; k < d1; ++k) {
      if (sd[j] == 0.0 || sd[k] == 0.0) {
        feat.push_back(0.0);
        continue;
      }
      double s = 0.0;
      auto cj = full.col(j), ck = full.col(k);
      for (int i = 0; i < n; ++i) s += (cj[i] - mean[j]) * (ck[i] - mean[k]);
      feat.push_back(s / ((n - 1) * sd[j] * sd[k]));
    }
  }
  return feat;
}

// Training rows for one shadow or challenge model: a subsample of the
// pool (bootstrap when the pool is too small), with the target swapped in
// for one row when present.
Dataset membership_training_set(const Dataset& real, const std::vector<int>& pool, int size, int target_row,
                                bool with_target, RngStream& rng) {
  const int take = with_target ? size - 1 : size;
  std::vector<int> rows;
  if (take <= static_cast<int>(pool.size())) {
    std::vector<int> pick = rng.sample_without_replacement(static_cast<int>(pool.size()), take);
    rows.reserve(size);
    for (int p : pick) rows.push_back(pool[p]);
  } else {
    rows.resize(take);
    for (int i = 0; i < take; ++i) rows[i] = pool[rng.next_below(pool.size())];
  }
  if (with_target) rows.push_back(target_row);
  return real.select_rows(rows);
}

}  // namespace

MIAReport run_mia(const Dataset& real, const GeneratorFn& generator, int target_row, const MIAConfig& cfg,
                  RngStream& rng) {
  const int n = real.n_rows();
  if (target_row < 0 || target_row >= n) throw std::invalid_argument("run_mia: target row out of range");

  // Attacker and challenger work on disjoint halves of the non-target rows.
  std::vector<int> rest;
  rest.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != target_row) rest.push_back(i);
  RngStream split_rng = rng.substream(7);
  split_rng.shuffle(rest);
  const int half = static_cast<int>(rest.size()) / 2;
  std::vector<int> attacker_pool(rest.begin(), rest.begin() + half);
  std::vector<int> challenger_pool(rest.begin() + half, rest.end());

  const int n_shadow_sets = cfg.n_shadows * cfg.n_syn_a;
  Matrix shadow_x;
  std::vector<double> shadow_y(n_shadow_sets);
  std::vector<std::vector<double>> shadow_rows(n_shadow_sets);

  parallel_for(cfg.n_shadows, [&](int s) {
    RngStream rng_s = rng.substream(100 + s);
    const bool with_target = s % 2 == 0;
    RngStream draw = rng_s.substream(0);
    Dataset train = membership_training_set(real, attacker_pool, cfg.size_raw_a, target_row, with_target, draw);
    RngStream fit_rng = rng_s.substream(1);
    SamplerFn sampler = generator(train, fit_rng);
    for (int q = 0; q < cfg.n_syn_a; ++q) {
      RngStream srng = rng_s.substream(2 + q);
      Dataset syn = sampler(cfg.size_syn_t, srng);
      shadow_rows[s * cfg.n_syn_a + q] = mia_features(syn);
      shadow_y[s * cfg.n_syn_a + q] = with_target ? 1.0 : 0.0;
    }
  });

  const int n_feat = static_cast<int>(shadow_rows[0].size());
  shadow_x = Matrix(n_shadow_sets, n_feat);
  for (int i = 0; i < n_shadow_sets; ++i)
    for (int j = 0; j < n_feat; ++j) shadow_x(i, j) = shadow_rows[i][j];

  ForestConfig fc;
  fc.seed = rng.substream(55).next_u64();
  RandomForest classifier = RandomForest::fit(shadow_x, shadow_y, fc);

  std::vector<int> guess_in(cfg.n_iter, 0), guess_out(cfg.n_iter, 0), count_in(cfg.n_iter, 0),
      count_out(cfg.n_iter, 0);
  parallel_for(cfg.n_iter, [&](int it) {
    RngStream rng_e = rng.substream(200 + it);
    const bool member = it % 2 == 0;
    RngStream draw = rng_e.substream(0);
    Dataset train = membership_training_set(real, challenger_pool, cfg.size_raw_t, target_row, member, draw);
    RngStream fit_rng = rng_e.substream(1);
    SamplerFn sampler = generator(train, fit_rng);
    for (int q = 0; q < cfg.n_syn_t; ++q) {
      RngStream srng = rng_e.substream(2 + q);
      Dataset syn = sampler(cfg.size_syn_t, srng);
      std::vector<double> feat = mia_features(syn);
      const bool hat = classifier.predict_proba_row(feat) > 0.5;
      if (member) {
        ++count_in[it];
        guess_in[it] += hat;
      } else {
        ++count_out[it];
        guess_out[it] += hat;
      }
    }
  });

  const double tot_in = std::accumulate(count_in.begin(), count_in.end(), 0.0);
  const double tot_out = std::accumulate(count_out.begin(), count_out.end(), 0.0);
  MIAReport rep;
  rep.p_guess_in = tot_in > 0 ? std::accumulate(guess_in.begin(), guess_in.end(), 0.0) / tot_in : 0.0;
  rep.p_guess_out = tot_out > 0 ? std::accumulate(guess_out.begin(), guess_out.end(), 0.0) / tot_out : 0.0;
  rep.privacy_gain = 1.0 - (rep.p_guess_in - rep.p_guess_out);
  return rep;
}

TheoreticalBeta theoretical_beta(const Matrix& rho, int j_star, int tau) {
  const int d1 = rho.rows();
  const int d = d1 - 1;
  if (rho.cols() != d1 || d < 1) throw std::invalid_argument("theoretical_beta: bad matrix shape");
  for (int i = 0; i < d1; ++i) {
    if (std::fabs(rho(i, i) - 1.0) > 1e-12) throw std::invalid_argument("theoretical_beta: diagonal must be 1");
    for (int j = 0; j < d1; ++j)
      if (std::fabs(rho(i, j) - rho(j, i)) > 1e-12)
        throw std::invalid_argument("theoretical_beta: matrix must be symmetric");
  }
  cholesky(rho);  // positive definiteness gate
  if (j_star < 0 || j_star >= d) throw std::invalid_argument("theoretical_beta: j_star must be a covariate column");
  if (tau < 1 || tau > d - j_star)
    throw std::invalid_argument("theoretical_beta: tau must satisfy 1 <= tau <= d + 1 - j* (got " +
                                std::to_string(tau) + ")");

  // Trailing block of columns d+1-tau .. d (0-based), response included.
  std::vector<int> idx(tau);
  for (int i = 0; i < tau; ++i) idx[i] = d1 - tau + i;
  Matrix sub(tau, tau);
  std::vector<double> rhs(tau);
  for (int i = 0; i < tau; ++i) {
    rhs[i] = rho(idx[i], j_star);
    for (int j = 0; j < tau; ++j) sub(i, j) = rho(idx[i], idx[j]);
  }
  std::vector<double> sol = solve_spd(sub, rhs);

  TheoreticalBeta out;
  out.beta.assign(d, 0.0);
  for (int i = 0; i < tau; ++i) out.beta[d - tau + i] = sol[i];
  out.sigma2 = 1.0;
  for (int i = 0; i < tau; ++i) out.sigma2 -= rhs[i] * sol[i];
  return out;
}

BlockZeroCheck block_zero_beta_check(const Matrix& rho, std::span<const int> k_set, std::span<const int> s_set, int tau) {
  const int d = rho.rows() - 1;
  std::set<int> seen;
  for (int v : k_set) seen.insert(v);
  for (int v : s_set) {
    if (seen.count(v)) throw std::invalid_argument("block_zero_beta_check: K and S must be disjoint");
    seen.insert(v);
  }
  const int bound = d + 1 - static_cast<int>(k_set.size()) - static_cast<int>(s_set.size());
  if (tau > bound)
    throw std::invalid_argument("block_zero_beta_check: tau exceeds d + 1 - |K| - |S| = " + std::to_string(bound));
  BlockZeroCheck out;
  out.holds = true;
  for (int j_star : s_set) {
    TheoreticalBeta tb = theoretical_beta(rho, j_star, tau);
    for (double b : tb.beta) out.max_abs_beta = std::max(out.max_abs_beta, std::fabs(b));
  }
  out.holds = out.max_abs_beta <= 1e-12;
  return out;
}

}  // namespace tvs

#include "tvs/cvine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tvs/common.hpp"
#include "tvs/stats.hpp"

namespace tvs {

using nlohmann::json;

// ---- marginal table -----------------------------------------------------

double MarginalTable::quantile(double p) const {
  const auto& s = sorted_values;
  const double n = static_cast<double>(s.size());
  const double t = p * (n + 1.0);
  if (t <= 1.0) return s.front();
  if (t >= n) return s.back();
  const size_t i = static_cast<size_t>(t);
  const double frac = t - static_cast<double>(i);
  return s[i - 1] + frac * (s[i] - s[i - 1]);
}

double MarginalTable::pit(double x) const {
  const auto& s = sorted_values;
  const double n = static_cast<double>(s.size());
  const double lo_clamp = 0.5 / (n + 1.0), hi_clamp = 1.0 - 0.5 / (n + 1.0);
  auto it = std::lower_bound(s.begin(), s.end(), x);
  if (it == s.begin()) return lo_clamp;
  if (it == s.end()) return hi_clamp;
  const size_t i = static_cast<size_t>(it - s.begin());  // x in (s[i-1], s[i]]
  const double lo = s[i - 1], hi = s[i];
  const double frac = hi > lo ? (x - lo) / (hi - lo) : 0.0;
  return std::clamp((static_cast<double>(i) + frac) / (n + 1.0), lo_clamp, hi_clamp);
}

double MarginalTable::log_density(double x) const {
  const auto& s = sorted_values;
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = empirical_quantile(s, 0.75) - empirical_quantile(s, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1.0;
  const double bw = 0.9 * spread * std::pow(n, -0.2);
  // log of (1/(n bw)) sum phi((x - v)/bw), max-shifted for stability.
  double zmax = -std::numeric_limits<double>::infinity();
  std::vector<double> z(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    double t = (x - s[i]) / bw;
    z[i] = -0.5 * t * t;
    zmax = std::max(zmax, z[i]);
  }
  double acc = 0.0;
  for (double zi : z) acc += std::exp(zi - zmax);
  return zmax + std::log(acc) - std::log(n * bw * std::sqrt(2.0 * M_PI));
}

// ---- copula core ----------------------------------------------------------

CVineCopula::CVineCopula(int dim) : dim_(dim) {
  trees_.resize(dim - 1);
  for (int t0 = 0; t0 < dim - 1; ++t0) trees_[t0].assign(dim - 1 - t0, PairCopula());
}

void CVineCopula::truncate_above(int t) {
  for (int tree = t + 1; tree <= n_trees(); ++tree)
    trees_[tree - 1].assign(trees_[tree - 1].size(), PairCopula());
}

void CVineCopula::sample_row(RngStream& rng, std::span<double> u_out) const {
  // w[k] stays F(x_{k+1} | x_1..x_k), which the later h-inversions
  // condition on; u_out receives the realized uniforms.
  double stack_buf[64];
  std::vector<double> heap_buf;
  double* w = stack_buf;
  if (dim_ > 64) {
    heap_buf.resize(dim_);
    w = heap_buf.data();
  }
  for (int i = 0; i < dim_; ++i) w[i] = rng.next_double();
  u_out[0] = w[0];
  for (int i = 2; i <= dim_; ++i) {
    double u = w[i - 1];
    for (int k = i - 1; k >= 1; --k) {
      const PairCopula& pc = edge(k, i);
      if (!pc.is_independence()) u = pc_h_inverse(pc, u, w[k - 1]);
    }
    u_out[i - 1] = u;
  }
}

double CVineCopula::log_density(std::span<const double> u, int t_max) const {
  std::vector<double> a(u.begin(), u.end());
  for (double& v : a) v = clamp_unit(v);
  double ll = 0.0;
  const int top = std::min(t_max, n_trees());
  for (int t = 1; t <= top; ++t) {
    for (int m = t + 1; m <= dim_; ++m) {
      const PairCopula& pc = edge(t, m);
      ll += pc_log_density(pc, a[m - 1], a[t - 1]);
      a[m - 1] = clamp_unit(pc_h(pc, a[m - 1], a[t - 1]));
    }
  }
  return ll;
}

CVineCopula gaussian_cvine_from_correlation(const Matrix& rho) {
  const int D = rho.rows();
  if (rho.cols() != D) throw std::invalid_argument("correlation matrix must be square");
  cholesky(rho);  // positive definiteness gate
  CVineCopula vine(D);
  // Partial correlation of (a,b) given the index set cond, via the
  // inverse of the submatrix restricted to {a,b} + cond.
  auto pcor = [&](int a, int b, const std::vector<int>& cond) {
    std::vector<int> idx = {a, b};
    idx.insert(idx.end(), cond.begin(), cond.end());
    const int m = static_cast<int>(idx.size());
    Matrix sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = rho(idx[i], idx[j]);
    // Invert by solving against unit vectors; only need the 2x2 corner.
    Matrix l = cholesky(sub);
    auto solve_col = [&](int col) {
      std::vector<double> e(m, 0.0);
      e[col] = 1.0;
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k < i; ++k) e[i] -= l(i, k) * e[k];
        e[i] /= l(i, i);
      }
      for (int i = m - 1; i >= 0; --i) {
        for (int k = i + 1; k < m; ++k) e[i] -= l(k, i) * e[k];
        e[i] /= l(i, i);
      }
      return e;
    };
    std::vector<double> c0 = solve_col(0), c1 = solve_col(1);
    return -c0[1] / std::sqrt(c0[0] * c1[1]);
  };
  for (int t = 1; t <= D - 1; ++t) {
    const int root = D - t;  // 0-based matrix index of the tree-t root
    std::vector<int> cond;
    for (int s = 1; s < t; ++s) cond.push_back(D - s);
    for (int m = t + 1; m <= D; ++m) {
      const int partner = D - m;
      double r = std::clamp(pcor(partner, root, cond), -0.9999, 0.9999);
      vine.edge(t, m) = PairCopula(PairCopulaFamily(FamilyKind::gaussian), r);
    }
  }
  return vine;
}

// ---- model fitting --------------------------------------------------------

namespace {

void validate_order(const std::vector<int>& order, int d) {
  if (static_cast<int>(order.size()) != d) throw std::invalid_argument("order size does not match covariate count");
  std::vector<bool> seen(d, false);
  for (int v : order) {
    if (v < 0 || v >= d || seen[v]) throw std::invalid_argument("order is not a permutation of the covariates");
    seen[v] = true;
  }
}

}  // namespace

CVineModel fit_cvine(const Dataset& data, const std::vector<int>& order, int t_max,
                     std::span<const PairCopulaFamily> candidates) {
  const int n = data.n_rows();
  const int d = data.n_cols();
  if (n < 30) throw data_error("fit_cvine: need at least 30 rows");
  validate_order(order, d);
  if (t_max < 1 || t_max > d) throw std::invalid_argument("fit_cvine: t_max must be in [1, d]");

  double pi_hat = 0.0;
  for (double yi : data.y) {
    if (yi != 0.0 && yi != 1.0) throw data_error("fit_cvine: response must be binary 0/1");
    pi_hat += yi;
  }
  pi_hat /= n;
  if (pi_hat <= 0.0 || pi_hat >= 1.0) throw data_error("fit_cvine: response has a single class");

  for (int j = 0; j < d; ++j) {
    auto c = data.x.col(j);
    auto [mn, mx] = std::minmax_element(c.begin(), c.end());
    if (*mn == *mx) throw data_error("fit_cvine: column '" + data.names[j] + "' is constant");
  }

  std::vector<PairCopulaFamily> default_cands;
  if (candidates.empty()) {
    default_cands = default_candidates();
    candidates = default_cands;
  }

  const int D = d + 1;

  // Pseudo-observation cache in natural order; column 0 (the response
  // slot) stays unused, tree 1 conditions on the class labels directly.
  Matrix cache(n, D);
  for (int n0 = 1; n0 < D; ++n0) {
    const int col = order[D - 1 - n0];
    std::vector<double> u = empirical_pit(data.x.col(col));
    for (int i = 0; i < n; ++i) cache(i, n0) = u[i];
  }

  CVineModel model;
  model.order = order;
  model.response_prevalence = pi_hat;
  model.truncation_level = t_max;
  model.n_train = n;
  model.response_name = data.response_name;
  model.copula = CVineCopula(D);
  model.marginals.resize(d);
  for (int j = 0; j < d; ++j) {
    auto c = data.x.col(j);
    model.marginals[j].name = data.names[j];
    model.marginals[j].sorted_values.assign(c.begin(), c.end());
    std::sort(model.marginals[j].sorted_values.begin(), model.marginals[j].sorted_values.end());
  }

  // Tree 1: every covariate against the binary response.
  {
    std::vector<PairCopulaFit> fits(D - 1);
    parallel_for(D - 1, [&](int e) {
      fits[e] = select_aic_binary_root(cache.col(1 + e), data.y, pi_hat, candidates);
    });
    for (int e = 0; e < D - 1; ++e) {
      const int n0 = 1 + e;
      model.copula.edge(1, n0 + 1) = fits[e].copula;
      if (t_max > 1 && !fits[e].copula.is_independence()) {
        auto colv = cache.col(n0);
        for (int i = 0; i < n; ++i) {
          const int y = data.y[i] == 1.0 ? 1 : 0;
          colv[i] = clamp_unit(pc_class_conditional_cdf(fits[e].copula, colv[i], y, pi_hat));
        }
      }
    }
  }

  for (int t = 2; t <= t_max; ++t) {
    const int t0 = t - 1;
    const int n_edges = D - 1 - t0;
    std::vector<PairCopulaFit> fits(n_edges);
    parallel_for(n_edges, [&](int e) {
      const int n0 = t0 + 1 + e;
      fits[e] = select_aic(cache.col(n0), cache.col(t0), candidates);
    });
    for (int e = 0; e < n_edges; ++e) {
      const int n0 = t0 + 1 + e;
      model.copula.edge(t, n0 + 1) = fits[e].copula;
      if (t < t_max) {
        auto colv = cache.col(n0);
        auto root = cache.col(t0);
        const PairCopula& pc = fits[e].copula;
        if (!pc.is_independence()) {
          for (int i = 0; i < n; ++i) colv[i] = clamp_unit(pc_h(pc, colv[i], root[i]));
        }
      }
    }
  }
  return model;
}

CVineModel truncate(const CVineModel& model, int t) {
  if (t < 1 || t > model.truncation_level)
    throw std::invalid_argument("truncate: level " + std::to_string(t) + " exceeds fitted level " +
                                std::to_string(model.truncation_level));
  CVineModel out = model;
  out.copula.truncate_above(t);
  out.truncation_level = t;
  return out;
}

Dataset sample(const CVineModel& model, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be positive");
  const int d = model.dim();
  const int D = d + 1;
  Dataset out;
  out.names.resize(d);
  for (int j = 0; j < d; ++j) out.names[j] = model.marginals[j].name;
  out.response_name = model.response_name;
  out.x = Matrix(n, d);
  out.y.resize(n);
  const double pi = model.response_prevalence;
  const double cut = 1.0 - pi;
  std::vector<double> w(D);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < D; ++k) w[k] = rng.next_double();
    const int y = w[0] > cut ? 1 : 0;
    out.y[i] = y;
    // Inverse Rosenblatt: trees down to 2 condition on the stored
    // uniforms, tree 1 applies the class-conditional inverse.
    for (int i0 = 1; i0 < D; ++i0) {
      double u = w[i0];
      for (int k0 = i0 - 1; k0 >= 1; --k0) {
        const PairCopula& pc = model.copula.edge(k0 + 1, i0 + 1);
        if (!pc.is_independence()) u = pc_h_inverse(pc, u, w[k0]);
      }
      u = pc_class_conditional_inverse(model.copula.edge(1, i0 + 1), u, y, pi);
      const int col = model.order[D - 1 - i0];
      out.x(i, col) = model.marginals[col].quantile(u);
    }
  }
  return out;
}

double copula_log_density(const CVineModel& model, std::span<const double> u_natural) {
  if (static_cast<int>(u_natural.size()) != model.dim() + 1)
    throw std::invalid_argument("copula_log_density: expected d+1 coordinates");
  return model.copula.log_density(u_natural, model.truncation_level);
}

namespace {

// Per-tree log factors of f(x | Y=y) on the copula scale, conditioning on
// the discrete response by integrating its latent uniform over the class
// interval. Index 0 holds the tree-1 marginal-ratio terms, index t-1 the
// tree-t pair copula terms.
std::vector<double> discrete_tree_log_terms(const CVineModel& model, std::span<const double> u_pos, int y) {
  const int d = model.dim();
  const int D = d + 1;
  const double pi = model.response_prevalence;
  const double cut = 1.0 - pi;
  std::vector<double> terms(d, 0.0);
  std::vector<double> b(D, 0.0);  // b[n0] = F(x_n0 | y, earlier roots)

  for (int n0 = 1; n0 < D; ++n0) {
    const int p0 = D - 1 - n0;
    const double u = clamp_unit(u_pos[p0]);
    const PairCopula& pc = model.copula.edge(1, n0 + 1);
    const double hy = std::clamp(pc_h2(pc, cut, u), 1e-12, 1.0 - 1e-12);
    const double cdf = pc_cdf(pc, u, cut);
    if (y == 0) {
      terms[0] += std::log(hy / cut);
      b[n0] = clamp_unit(cdf / cut);
    } else {
      terms[0] += std::log((1.0 - hy) / pi);
      b[n0] = clamp_unit((u - cdf) / pi);
    }
  }

  const int top = std::min(model.truncation_level, d);
  for (int t = 2; t <= top; ++t) {
    const int root = t - 1;
    for (int n0 = t; n0 < D; ++n0) {
      const PairCopula& pc = model.copula.edge(t, n0 + 1);
      terms[t - 1] += pc_log_density(pc, b[n0], b[root]);
      b[n0] = clamp_unit(pc_h(pc, b[n0], b[root]));
    }
  }
  return terms;
}

std::vector<double> position_pit(const CVineModel& model, std::span<const double> x_row) {
  const int d = model.dim();
  if (static_cast<int>(x_row.size()) != d) throw std::invalid_argument("expected one value per covariate");
  std::vector<double> u_pos(d);
  for (int p0 = 0; p0 < d; ++p0) {
    const int col = model.order[p0];
    u_pos[p0] = model.marginals[col].pit(x_row[col]);
  }
  return u_pos;
}

}  // namespace

double log_density(const CVineModel& model, std::span<const double> x_row, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("log_density: response must be 0 or 1");
  const int d = model.dim();
  std::vector<double> u_pos = position_pit(model, x_row);
  std::vector<double> terms = discrete_tree_log_terms(model, u_pos, y);
  double ll = y == 1 ? std::log(model.response_prevalence) : std::log(1.0 - model.response_prevalence);
  for (int j = 0; j < d; ++j) ll += model.marginals[j].log_density(x_row[j]);
  const int top = std::min(model.truncation_level, d);
  for (int t = 1; t <= top; ++t) ll += terms[t - 1];
  return ll;
}

double PsiDecomposition::truncated(int tau) const {
  double s = 0.0;
  for (int t = 0; t < tau && t < static_cast<int>(psi_t.size()); ++t) s += psi_t[t];
  return s;
}

PsiDecomposition psi_decomposition(const CVineModel& model, std::span<const double> x_row) {
  const int d = model.dim();
  std::vector<double> u_pos = position_pit(model, x_row);
  std::vector<double> t1 = discrete_tree_log_terms(model, u_pos, 1);
  std::vector<double> t0 = discrete_tree_log_terms(model, u_pos, 0);
  PsiDecomposition out;
  out.psi_t.resize(d, 0.0);
  const double pi = model.response_prevalence;
  out.psi_t[0] = std::log(pi / (1.0 - pi)) + t1[0] - t0[0];
  for (int t = 2; t <= d; ++t) out.psi_t[t - 1] = t1[t - 1] - t0[t - 1];
  out.total = 0.0;
  for (double v : out.psi_t) out.total += v;
  return out;
}

// ---- serialization ----------------------------------------------------------

std::string model_to_json(const CVineModel& model) {
  json j;
  j["version"] = 1;
  json order = json::array();
  for (int p : model.order) order.push_back(model.marginals[p].name);
  j["order"] = order;
  j["n_train"] = model.n_train;
  j["response_prevalence"] = model.response_prevalence;
  j["response_name"] = model.response_name;
  j["truncation_level"] = model.truncation_level;
  json margs = json::array();
  for (const auto& m : model.marginals) margs.push_back({{"name", m.name}, {"quantile_table", m.sorted_values}});
  j["marginals"] = margs;
  json trees = json::array();
  for (const auto& tree : model.copula.trees()) {
    json row = json::array();
    for (const auto& pc : tree)
      row.push_back(
          {{"family", family_name(pc.family.kind)}, {"rotation", pc.family.rotation}, {"theta", pc.theta}});
    trees.push_back(row);
  }
  j["trees"] = trees;
  return j.dump(2);
}

CVineModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw data_error(std::string("model json: malformed document: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) throw data_error("model json: unsupported schema version");
    CVineModel model;
    model.n_train = j.at("n_train").get<int>();
    model.response_prevalence = j.at("response_prevalence").get<double>();
    model.response_name = j.value("response_name", "y");
    model.truncation_level = j.at("truncation_level").get<int>();
    const auto& margs = j.at("marginals");
    const int d = static_cast<int>(margs.size());
    model.marginals.resize(d);
    for (int k = 0; k < d; ++k) {
      model.marginals[k].name = margs[k].at("name").get<std::string>();
      model.marginals[k].sorted_values = margs[k].at("quantile_table").get<std::vector<double>>();
      if (model.marginals[k].sorted_values.empty()) throw data_error("model json: empty quantile table");
      if (!std::is_sorted(model.marginals[k].sorted_values.begin(), model.marginals[k].sorted_values.end()))
        throw data_error("model json: quantile table not sorted");
    }
    if (model.truncation_level < 1 || model.truncation_level > d)
      throw data_error("model json: truncation_level out of range for dimension " + std::to_string(d));
    if (!(model.response_prevalence > 0.0 && model.response_prevalence < 1.0))
      throw data_error("model json: response_prevalence must be in (0,1)");
    const auto& order_names = j.at("order");
    if (static_cast<int>(order_names.size()) != d) throw data_error("model json: order size mismatch");
    model.order.resize(d);
    for (int p = 0; p < d; ++p) {
      const std::string name = order_names[p].get<std::string>();
      int found = -1;
      for (int k = 0; k < d; ++k)
        if (model.marginals[k].name == name) found = k;
      if (found < 0) throw data_error("model json: order names unknown column '" + name + "'");
      model.order[p] = found;
    }
    const auto& trees = j.at("trees");
    if (static_cast<int>(trees.size()) != d) throw data_error("model json: tree count must equal dimension");
    model.copula = CVineCopula(d + 1);
    for (int t0 = 0; t0 < d; ++t0) {
      if (static_cast<int>(trees[t0].size()) != d - t0) throw data_error("model json: tree grid shape mismatch");
      for (int j0 = 0; j0 < d - t0; ++j0) {
        const auto& e = trees[t0][j0];
        PairCopulaFamily fam(family_from_name(e.at("family").get<std::string>()), e.value("rotation", 0));
        model.copula.trees()[t0][j0] = PairCopula(fam, e.value("theta", 0.0));
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw data_error(std::string("model json: schema mismatch: ") + e.what());
  }
}

void save_model(const CVineModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw data_error("cannot open '" + path + "' for writing");
  f << model_to_json(model) << "\n";
}

CVineModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace tvs

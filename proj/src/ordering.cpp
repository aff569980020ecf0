#include "tvs/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "tvs/common.hpp"
#include "tvs/stats.hpp"

namespace tvs {

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw data_error("pearson: constant input column");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Matrix association_matrix(const Dataset& data, AssociationMeasure measure) {
  const int d = data.n_cols();
  if (d < 2) throw std::invalid_argument("association_matrix: need at least two covariates");
  Matrix m(d, d);
  for (int j = 0; j < d; ++j) m(j, j) = 1.0;
  struct Pair {
    int j, k;
  };
  std::vector<Pair> pairs;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) pairs.push_back({j, k});
  std::vector<double> vals(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    auto cj = data.x.col(pairs[i].j);
    auto ck = data.x.col(pairs[i].k);
    try {
      vals[i] = measure == AssociationMeasure::kendall ? kendall_tau(cj, ck) : pearson(cj, ck);
    } catch (const data_error&) {
      throw data_error("association_matrix: column '" + data.names[pairs[i].j] + "' or '" +
                       data.names[pairs[i].k] + "' is constant");
    }
  });
  for (size_t i = 0; i < pairs.size(); ++i) {
    m(pairs[i].j, pairs[i].k) = vals[i];
    m(pairs[i].k, pairs[i].j) = vals[i];
  }
  return m;
}

OrderResult find_order(const Dataset& data, const OrderSpec& spec) {
  const int d = data.n_cols();
  if (spec.threshold <= 0.0) throw std::invalid_argument("find_order: threshold must be positive");
  std::set<int> s_set(spec.sensitive.begin(), spec.sensitive.end());
  for (int j : s_set)
    if (j < 0 || j >= d) throw std::invalid_argument("find_order: sensitive index out of range");

  OrderResult out;
  out.association = association_matrix(data, spec.measure);

  if (s_set.empty()) {
    out.order.resize(d);
    std::iota(out.order.begin(), out.order.end(), 0);
    return out;
  }

  // K: columns whose association with some sensitive column clears the
  // threshold; the sort key is the worst case over the sensitive set.
  std::vector<double> key(d, 0.0);
  for (int k = 0; k < d; ++k) {
    if (s_set.count(k)) continue;
    for (int js : s_set) key[k] = std::max(key[k], std::fabs(out.association(js, k)));
  }
  std::vector<int> k_cols;
  for (int k = 0; k < d; ++k)
    if (!s_set.count(k) && key[k] > spec.threshold) k_cols.push_back(k);
  std::sort(k_cols.begin(), k_cols.end(), [&](int a, int b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return a < b;
  });
  out.k_set = k_cols;

  out.order.assign(s_set.begin(), s_set.end());  // sensitive block, index order
  out.order.insert(out.order.end(), k_cols.begin(), k_cols.end());
  std::set<int> placed(out.order.begin(), out.order.end());
  for (int j = 0; j < d; ++j)
    if (!placed.count(j)) out.order.push_back(j);
  return out;
}

OrderDiagnostics validate_order(const std::vector<int>& order, const std::vector<int>& sensitive,
                                const std::vector<int>& k_set, int d) {
  if (static_cast<int>(order.size()) != d) throw std::invalid_argument("validate_order: order size mismatch");
  std::vector<bool> seen(d, false);
  for (int v : order) {
    if (v < 0 || v >= d || seen[v]) throw std::invalid_argument("validate_order: not a permutation");
    seen[v] = true;
  }
  std::set<int> s_set(sensitive.begin(), sensitive.end());
  std::set<int> k_only(k_set.begin(), k_set.end());

  OrderDiagnostics diag;
  const int ns = static_cast<int>(s_set.size());
  const int nk = static_cast<int>(k_only.size());
  diag.safe_truncation_bound = d + 1 - nk - ns;

  diag.sensitive_block_ok = true;
  for (int p = 0; p < ns; ++p)
    if (!s_set.count(order[p])) diag.sensitive_block_ok = false;
  diag.k_block_ok = true;
  for (int p = ns; p < ns + nk; ++p)
    if (!k_only.count(order[p])) diag.k_block_ok = false;
  diag.rest_ok = true;
  for (int p = ns + nk; p < d; ++p)
    if (s_set.count(order[p]) || k_only.count(order[p])) diag.rest_ok = false;
  return diag;
}

}  // namespace tvs

#include "tvs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tvs/common.hpp"

namespace tvs {

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("std_normal_cdf: x must be finite");
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Wichura's PPND16 rational approximations (Applied Statistics 241).
double ppnd16(double p) {
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                 4.5921953931549871457e4) *
                    r +
                1.3731693765509461125e4) *
                   r +
               1.9715909503065514427e3) *
                  r +
              1.3314166789178437745e2) *
                 r +
             3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                 2.1213794301586595867e4) *
                    r +
                5.3941960214247511077e3) *
                   r +
               6.8718700749205790830e2) *
                  r +
              4.2313330701600911252e1) *
                 r +
             1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p must be in (0,1)");
  double x = ppnd16(p);
  // One guarded Newton step against the CDF tightens the tail digits.
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 1e-300) x += (p - std_normal_cdf(x)) / pdf;
  return x;
}

namespace {

// Gauss-Legendre nodes/weights used by Genz's bivariate normal routine.
const double kGx6[] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969};
const double kGw6[] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};
const double kGx12[] = {-0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
                        -0.5873179542866175, -0.3678314989981802, -0.1252334085114689};
const double kGw12[] = {0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
                        0.2031674267230659,  0.2334925365383548, 0.2491470458134028};
const double kGx20[] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
                        -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154195,
                        -0.2277858511416451, -0.07652652113349734};
const double kGw20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410907, 0.08327674157670475,
                        0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183820,
                        0.1491729864726037,  0.1527533871307258};

double phid(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(X > dh, Y > dk) for standard bivariate normal, following Genz (2004).
double bvnu(double dh, double dk, double r) {
  if (dh == std::numeric_limits<double>::infinity() || dk == std::numeric_limits<double>::infinity()) return 0.0;
  const double twopi = 2.0 * M_PI;
  const double* x;
  const double* w;
  int ng;
  if (std::fabs(r) < 0.3) {
    ng = 3, x = kGx6, w = kGw6;
  } else if (std::fabs(r) < 0.75) {
    ng = 6, x = kGx12, w = kGw12;
  } else {
    ng = 10, x = kGx20, w = kGw20;
  }
  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    if (std::fabs(r) > 0) {
      double hs = (h * h + k * k) / 2, asr = std::asin(r);
      for (int i = 0; i < ng; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          double sn = std::sin(asr * (is * x[i] + 1) / 2);
          bvn += w[i] * std::exp((sn * hk - hs) / (1 - sn * sn));
        }
      }
      bvn = bvn * asr / (2 * twopi);
    }
    return bvn + phid(-h) * phid(-k);
  }
  if (r < 0) {
    k = -k;
    hk = -hk;
  }
  if (std::fabs(r) < 1) {
    double as = (1 - r) * (1 + r), a = std::sqrt(as), bs = (h - k) * (h - k);
    double c = (4 - hk) / 8, d = (12 - hk) / 16, asr = -(bs / as + hk) / 2;
    if (asr > -100) bvn = a * std::exp(asr) * (1 - c * (bs - as) * (1 - d * bs / 5) / 3 + c * d * as * as / 5);
    if (-hk < 100) {
      double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2) * std::sqrt(twopi) * phid(-b / a) * b * (1 - c * bs * (1 - d * bs / 5) / 3);
    }
    a /= 2;
    for (int i = 0; i < ng; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        double xs = a * (is * x[i] + 1);
        xs = xs * xs;
        double rs = std::sqrt(1 - xs), asr2 = -(bs / xs + hk) / 2;
        if (asr2 > -100) {
          bvn += a * w[i] * std::exp(asr2) *
                 (std::exp(-hk * (1 - rs) / (2 * (1 + rs))) / rs - (1 + c * xs * (1 + d * xs)));
        }
      }
    }
    bvn = -bvn / twopi;
  }
  if (r > 0) return bvn + phid(-std::max(h, k));
  bvn = -bvn;
  if (k <= h) return bvn;
  if (h < 0) return bvn + phid(k) - phid(h);
  return bvn + phid(-h) - phid(-k);
}

}  // namespace

double bivariate_normal_cdf(double a, double b, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("bivariate_normal_cdf: rho must be in (-1,1)");
  return bvnu(-a, -b, rho);
}

namespace {

// Merge sort counting strict inversions.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  size_t mid = lo + (hi - lo) / 2;
  std::uint64_t cnt = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      cnt += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return cnt;
}

std::uint64_t tie_pairs(const std::vector<double>& sorted) {
  std::uint64_t s = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    std::uint64_t t = j - i;
    s += t * (t - 1) / 2;
    i = j;
  }
  return s;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  const size_t n = x.size();
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least two observations");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]); });

  // Knight's algorithm: tie counts plus inversion count of y in x-order.
  std::uint64_t n1 = 0, n3 = 0;
  {
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j < n && x[idx[j]] == x[idx[i]]) ++j;
      std::uint64_t t = j - i;
      n1 += t * (t - 1) / 2;
      size_t a = i;
      while (a < j) {
        size_t b = a;
        while (b < j && y[idx[b]] == y[idx[a]]) ++b;
        std::uint64_t u = b - a;
        n3 += u * (u - 1) / 2;
        a = b;
      }
      i = j;
    }
  }
  std::vector<double> ys(n), buf(n);
  for (size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  std::uint64_t swaps = count_inversions(ys, buf, 0, n);
  std::uint64_t n2 = tie_pairs(ys);  // ys is sorted now

  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double num = n0 - static_cast<double>(n1) - static_cast<double>(n2) + static_cast<double>(n3) -
                     2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt((n0 - static_cast<double>(n1)) * (n0 - static_cast<double>(n2)));
  if (denom == 0.0) throw data_error("kendall_tau: constant input column");
  return num / denom;
}

std::vector<double> average_ranks(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

std::vector<double> empirical_pit(std::span<const double> column) {
  if (column.size() < 2) throw std::invalid_argument("empirical_pit: need at least two observations");
  std::vector<double> u = average_ranks(column);
  const double denom = static_cast<double>(column.size()) + 1.0;
  for (double& v : u) v /= denom;
  return u;
}

double empirical_quantile(std::span<const double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: p must be in [0,1]");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  const double t = p * (n + 1.0);
  if (t <= 1.0) return s.front();
  if (t >= n) return s.back();
  const size_t i = static_cast<size_t>(t);
  const double frac = t - static_cast<double>(i);
  return s[i - 1] + frac * (s[i] - s[i - 1]);
}

Standardizer Standardizer::fit(const Matrix& m) {
  Standardizer s;
  s.mean.resize(m.cols());
  s.sd.resize(m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    auto c = m.col(j);
    double mu = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    double sd = std::sqrt(ss / (static_cast<double>(c.size()) - 1.0));
    if (sd == 0.0) throw data_error("standardize: column " + std::to_string(j) + " has zero variance");
    s.mean[j] = mu;
    s.sd[j] = sd;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& m) const {
  Matrix out(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) out(i, j) = (m(i, j) - mean[j]) / sd[j];
  return out;
}

std::vector<double> Standardizer::apply_row(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / sd[j];
  return out;
}

Matrix standardize(const Matrix& m) { return Standardizer::fit(m).apply(m); }

OlsFit ols_fit(const Matrix& design, std::span<const double> response) {
  const int n = design.rows();
  const int p = design.cols();
  if (static_cast<int>(response.size()) != n) throw std::invalid_argument("ols_fit: response length mismatch");
  if (n <= p + 1) throw std::invalid_argument("ols_fit: need rows > cols + 1");

  // Householder QR on [1 | design].
  const int pc = p + 1;
  Matrix a(n, pc);
  for (int i = 0; i < n; ++i) a(i, 0) = 1.0;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) a(i, j + 1) = design(i, j);
  std::vector<double> qty(response.begin(), response.end());

  std::vector<double> rdiag(pc, 0.0);
  for (int j = 0; j < pc; ++j) {
    double norm = 0.0;
    for (int i = j; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      rdiag[j] = 0.0;
      continue;
    }
    if (a(j, j) < 0) norm = -norm;
    for (int i = j; i < n; ++i) a(i, j) /= norm;
    a(j, j) += 1.0;
    for (int k = j + 1; k < pc; ++k) {
      double s = 0.0;
      for (int i = j; i < n; ++i) s += a(i, j) * a(i, k);
      s = -s / a(j, j);
      for (int i = j; i < n; ++i) a(i, k) += s * a(i, j);
    }
    double s = 0.0;
    for (int i = j; i < n; ++i) s += a(i, j) * qty[i];
    s = -s / a(j, j);
    for (int i = j; i < n; ++i) qty[i] += s * a(i, j);
    rdiag[j] = -norm;
  }

  double maxdiag = 0.0;
  for (int j = 0; j < pc; ++j) maxdiag = std::max(maxdiag, std::fabs(rdiag[j]));
  std::vector<int> deficient;
  const double tol = 1e-10 * std::max(1.0, maxdiag);
  for (int j = 0; j < pc; ++j)
    if (std::fabs(rdiag[j]) < tol) deficient.push_back(j - 1);
  if (!deficient.empty()) {
    std::string what = "ols_fit: rank deficient design, collinear columns {";
    for (size_t i = 0; i < deficient.size(); ++i)
      what += (i ? ", " : "") + std::to_string(deficient[i]);
    throw data_error(what + "}");
  }

  std::vector<double> beta(pc, 0.0);
  for (int j = pc - 1; j >= 0; --j) {
    double s = qty[j];
    for (int k = j + 1; k < pc; ++k) s -= a(j, k) * beta[k];
    beta[j] = s / rdiag[j];
  }

  OlsFit fit;
  fit.intercept = beta[0];
  fit.coef.assign(beta.begin() + 1, beta.end());
  fit.fitted.resize(n);
  fit.residual_sum_squares = 0.0;
  for (int i = 0; i < n; ++i) {
    double f = fit.intercept;
    for (int j = 0; j < p; ++j) f += design(i, j) * fit.coef[j];
    fit.fitted[i] = f;
    double r = response[i] - f;
    fit.residual_sum_squares += r * r;
  }
  return fit;
}

double auc(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  std::uint64_t npos = 0, nneg = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      ++npos;
      rank_sum_pos += ranks[i];
    } else if (labels[i] == 0.0) {
      ++nneg;
    } else {
      throw std::invalid_argument("auc: labels must be 0 or 1");
    }
  }
  if (npos == 0 || nneg == 0) throw data_error("auc: both classes must be present");
  const double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Matrix cholesky(const Matrix& a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("cholesky: matrix must be square");
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw numeric_error("cholesky: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b) {
  Matrix l = cholesky(a);
  const int n = a.rows();
  std::vector<double> y(b.begin(), b.end());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) y[i] -= l(k, i) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

double quantile_of(std::vector<double> v, double p) { return empirical_quantile(v, p); }

double median(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

}  // namespace tvs

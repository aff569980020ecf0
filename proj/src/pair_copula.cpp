#include "tvs/pair_copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvs/common.hpp"
#include "tvs/stats.hpp"

namespace tvs {

namespace {

constexpr double kFrankIndepBand = 1e-4;

struct ThetaRange {
  double lo, hi;
};

ThetaRange admissible_range(FamilyKind k) {
  switch (k) {
    case FamilyKind::gaussian: return {-0.9999, 0.9999};
    case FamilyKind::clayton: return {1e-10, 28.0};
    case FamilyKind::gumbel: return {1.0, 17.0};
    case FamilyKind::frank: return {-35.0, 35.0};
    case FamilyKind::joe: return {1.0 + 1e-10, 30.0};
    case FamilyKind::independence: return {0.0, 0.0};
  }
  throw std::logic_error("unreachable");
}

void validate_theta(const PairCopulaFamily& fam, double theta) {
  if (fam.kind == FamilyKind::independence) return;
  if (!std::isfinite(theta)) throw std::invalid_argument("pair copula theta must be finite");
  ThetaRange r = admissible_range(fam.kind);
  if (theta < r.lo || theta > r.hi)
    throw std::invalid_argument("theta " + std::to_string(theta) + " outside admissible range for " +
                                family_name(fam.kind));
}

// ---- base-family (rotation 0) operations -------------------------------

double gauss_log_density(double rho, double u, double v) {
  double a = std_normal_quantile(u), b = std_normal_quantile(v);
  double r2 = 1.0 - rho * rho;
  return -0.5 * std::log(r2) - (rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * r2);
}

double gauss_h(double rho, double u, double v) {
  double a = std_normal_quantile(u), b = std_normal_quantile(v);
  return std_normal_cdf((a - rho * b) / std::sqrt(1.0 - rho * rho));
}

double gauss_h_inverse(double rho, double w, double v) {
  double b = std_normal_quantile(v);
  return std_normal_cdf(std::sqrt(1.0 - rho * rho) * std_normal_quantile(w) + rho * b);
}

double gauss_cdf(double rho, double u, double v) {
  return bivariate_normal_cdf(std_normal_quantile(u), std_normal_quantile(v), rho);
}

// S = u^-t + v^-t - 1 in log space.
double clayton_log_s(double t, double lu, double lv) {
  double a = -t * lu, b = -t * lv;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

double clayton_log_density(double t, double u, double v) {
  double lu = std::log(u), lv = std::log(v);
  return std::log1p(t) - (t + 1.0) * (lu + lv) - (2.0 + 1.0 / t) * clayton_log_s(t, lu, lv);
}

double clayton_h(double t, double u, double v) {
  double lu = std::log(u), lv = std::log(v);
  return std::exp(-(t + 1.0) * lv - (1.0 / t + 1.0) * clayton_log_s(t, lu, lv));
}

double clayton_h_inverse(double t, double w, double v) {
  double lv = std::log(v), lw = std::log(w);
  double la = -t / (t + 1.0) * lw - t * lv;  // log[(w v^(t+1))^(-t/(t+1))]
  double lb = -t * lv;                       // log[v^-t]
  double d = std::exp(lb) * std::expm1(la - lb);
  return std::exp(-std::log1p(d) / t);
}

double clayton_cdf(double t, double u, double v) {
  return std::exp(-clayton_log_s(t, std::log(u), std::log(v)) / t);
}

double gumbel_log_s(double t, double x, double y) {
  double a = t * std::log(x), b = t * std::log(y);
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double gumbel_log_density(double t, double u, double v) {
  double x = -std::log(u), y = -std::log(v);
  double ls = gumbel_log_s(t, x, y);
  double s_pow = std::exp(ls / t);  // S^(1/t)
  return -s_pow + (t - 1.0) * (std::log(x) + std::log(y)) + (1.0 / t - 2.0) * ls + std::log(s_pow + t - 1.0) + x + y;
}

double gumbel_h(double t, double u, double v) {
  double x = -std::log(u), y = -std::log(v);
  double ls = gumbel_log_s(t, x, y);
  double s_pow = std::exp(ls / t);
  return std::exp(-s_pow + (t - 1.0) * std::log(y) + (1.0 / t - 1.0) * ls + y);
}

double gumbel_cdf(double t, double u, double v) {
  return std::exp(-std::exp(gumbel_log_s(t, -std::log(u), -std::log(v)) / t));
}

double frank_log_density(double t, double u, double v) {
  if (std::fabs(t) < kFrankIndepBand) return 0.0;
  double den = (1.0 - std::exp(-t)) - (-std::expm1(-t * u)) * (-std::expm1(-t * v));
  return std::log(std::fabs(t)) + std::log1p(-std::exp(-std::fabs(t))) - t * (u + v) +
         (t > 0 ? 0.0 : std::fabs(t)) - 2.0 * std::log(std::fabs(den));
}

double frank_h(double t, double u, double v) {
  if (std::fabs(t) < kFrankIndepBand) return u;
  double gu = std::expm1(-t * u), gv = std::expm1(-t * v), g1 = std::expm1(-t);
  return gu * (gv + 1.0) / (g1 + gu * gv);
}

double frank_h_inverse(double t, double w, double v) {
  if (std::fabs(t) < kFrankIndepBand) return w;
  double gv = std::expm1(-t * v), g1 = std::expm1(-t);
  double gu = w * g1 / (std::exp(-t * v) - w * gv);
  return -std::log1p(gu) / t;
}

double frank_cdf(double t, double u, double v) {
  if (std::fabs(t) < kFrankIndepBand) return u * v;
  double gu = std::expm1(-t * u), gv = std::expm1(-t * v), g1 = std::expm1(-t);
  return -std::log1p(gu * gv / g1) / t;
}

// S = x + y - x y with x = (1-u)^t, y = (1-v)^t.
double joe_log_s(double t, double l1u, double l1v) {
  double a = t * l1u, b = t * l1v;  // both <= 0
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(a + b - m));
}

double joe_log_density(double t, double u, double v) {
  double l1u = std::log1p(-u), l1v = std::log1p(-v);
  double ls = joe_log_s(t, l1u, l1v);
  return (1.0 / t - 2.0) * ls + (t - 1.0) * (l1u + l1v) + std::log(t - 1.0 + std::exp(ls));
}

double joe_h(double t, double u, double v) {
  double l1u = std::log1p(-u), l1v = std::log1p(-v);
  double ls = joe_log_s(t, l1u, l1v);
  double x = std::exp(t * l1u);
  return std::exp((1.0 / t - 1.0) * ls + (t - 1.0) * l1v) * (1.0 - x);
}

double joe_cdf(double t, double u, double v) {
  return 1.0 - std::exp(joe_log_s(t, std::log1p(-u), std::log1p(-v)) / t);
}

double frank_debye1(double t) {
  // D1(t) = (1/t) * Integral_0^t s/(e^s - 1) ds by composite Simpson.
  const int n = 2000;
  double h = t / n, sum = 1.0;  // integrand -> 1 at s = 0
  for (int i = 1; i < n; ++i) {
    double s = i * h;
    sum += (i % 2 ? 4.0 : 2.0) * (s / std::expm1(s));
  }
  sum += t / std::expm1(t);
  return (h / 3.0) * sum / t;
}

double frank_tau_from_theta(double t) {
  if (std::fabs(t) < kFrankIndepBand) return t / 9.0;
  double a = std::fabs(t);
  double tau = 1.0 - 4.0 / a * (1.0 - frank_debye1(a));
  return t > 0 ? tau : -tau;
}

double joe_tau_from_theta(double t) {
  double s = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    double term = 1.0 / (k * (t * k + 2.0) * (t * (k - 1) + 2.0));
    s += term;
    if (term < 1e-16 * std::max(s, 1e-300)) break;
  }
  return 1.0 - 4.0 * s;
}

double base_tau_from_theta(FamilyKind k, double theta) {
  switch (k) {
    case FamilyKind::independence: return 0.0;
    case FamilyKind::gaussian: return 2.0 * std::asin(theta) / M_PI;
    case FamilyKind::clayton: return theta / (theta + 2.0);
    case FamilyKind::gumbel: return 1.0 - 1.0 / theta;
    case FamilyKind::frank: return frank_tau_from_theta(theta);
    case FamilyKind::joe: return joe_tau_from_theta(theta);
  }
  throw std::logic_error("unreachable");
}

// Monotone inversion of tau(theta) by bisection on the admissible range.
double invert_tau_numeric(FamilyKind k, double tau) {
  ThetaRange r = admissible_range(k);
  double lo = r.lo, hi = r.hi;
  if (k == FamilyKind::frank) lo = tau > 0 ? kFrankIndepBand : -35.0, hi = tau > 0 ? 35.0 : -kFrankIndepBand;
  double flo = base_tau_from_theta(k, lo) - tau, fhi = base_tau_from_theta(k, hi) - tau;
  if (flo * fhi > 0) throw data_error("tau " + std::to_string(tau) + " not attainable for " + family_name(k));
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = base_tau_from_theta(k, mid) - tau;
    if (fm == 0.0 || hi - lo < 1e-12 * std::max(1.0, std::fabs(mid))) return mid;
    if (flo * fm <= 0)
      hi = mid;
    else
      lo = mid, flo = fm;
  }
  return 0.5 * (lo + hi);
}

double base_theta_from_tau(FamilyKind k, double tau) {
  ThetaRange r = admissible_range(k);
  double theta = 0.0;
  switch (k) {
    case FamilyKind::independence: return 0.0;
    case FamilyKind::gaussian: theta = std::sin(M_PI * tau / 2.0); break;
    case FamilyKind::clayton: theta = 2.0 * tau / (1.0 - tau); break;
    case FamilyKind::gumbel: theta = 1.0 / (1.0 - tau); break;
    case FamilyKind::frank:
    case FamilyKind::joe: return invert_tau_numeric(k, tau);
  }
  if (theta < r.lo || theta > r.hi)
    throw data_error("tau " + std::to_string(tau) + " not attainable for " + family_name(k));
  return theta;
}

double base_log_density(FamilyKind k, double t, double u, double v) {
  switch (k) {
    case FamilyKind::independence: return 0.0;
    case FamilyKind::gaussian: return gauss_log_density(t, u, v);
    case FamilyKind::clayton: return clayton_log_density(t, u, v);
    case FamilyKind::gumbel: return gumbel_log_density(t, u, v);
    case FamilyKind::frank: return frank_log_density(t, u, v);
    case FamilyKind::joe: return joe_log_density(t, u, v);
  }
  throw std::logic_error("unreachable");
}

double base_h(FamilyKind k, double t, double u, double v) {
  switch (k) {
    case FamilyKind::independence: return u;
    case FamilyKind::gaussian: return gauss_h(t, u, v);
    case FamilyKind::clayton: return clayton_h(t, u, v);
    case FamilyKind::gumbel: return gumbel_h(t, u, v);
    case FamilyKind::frank: return frank_h(t, u, v);
    case FamilyKind::joe: return joe_h(t, u, v);
  }
  throw std::logic_error("unreachable");
}

double base_cdf(FamilyKind k, double t, double u, double v) {
  switch (k) {
    case FamilyKind::independence: return u * v;
    case FamilyKind::gaussian: return gauss_cdf(t, u, v);
    case FamilyKind::clayton: return clayton_cdf(t, u, v);
    case FamilyKind::gumbel: return gumbel_cdf(t, u, v);
    case FamilyKind::frank: return frank_cdf(t, u, v);
    case FamilyKind::joe: return joe_cdf(t, u, v);
  }
  throw std::logic_error("unreachable");
}

// Safeguarded Newton for families without a closed-form h inverse;
// dh/du is the copula density.
double base_h_inverse_numeric(FamilyKind k, double t, double w, double v) {
  const double eps = 1e-12;
  double lo = eps, hi = 1.0 - eps;
  double u = std::clamp(w, lo, hi);
  for (int it = 0; it < 100; ++it) {
    double f = base_h(k, t, u, v) - w;
    if (std::fabs(f) < 1e-13) return u;
    if (f > 0)
      hi = u;
    else
      lo = u;
    double dens = std::exp(base_log_density(k, t, u, v));
    double step = dens > 1e-100 ? f / dens : 0.0;
    double next = u - step;
    if (!(next > lo && next < hi) || step == 0.0) next = 0.5 * (lo + hi);
    if (std::fabs(next - u) < 1e-15) return next;
    u = next;
  }
  return u;
}

double base_h_inverse(FamilyKind k, double t, double w, double v) {
  switch (k) {
    case FamilyKind::independence: return w;
    case FamilyKind::gaussian: return gauss_h_inverse(t, w, v);
    case FamilyKind::clayton: return clayton_h_inverse(t, w, v);
    case FamilyKind::frank: return frank_h_inverse(t, w, v);
    case FamilyKind::gumbel:
    case FamilyKind::joe: return base_h_inverse_numeric(k, t, w, v);
  }
  throw std::logic_error("unreachable");
}

bool frank_like_independence(const PairCopula& pc) {
  return pc.family.kind == FamilyKind::frank && std::fabs(pc.theta) < kFrankIndepBand;
}

}  // namespace

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::independence: return "independence";
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::clayton: return "clayton";
    case FamilyKind::gumbel: return "gumbel";
    case FamilyKind::frank: return "frank";
    case FamilyKind::joe: return "joe";
  }
  throw std::logic_error("unreachable");
}

FamilyKind family_from_name(const std::string& name) {
  if (name == "independence") return FamilyKind::independence;
  if (name == "gaussian") return FamilyKind::gaussian;
  if (name == "clayton") return FamilyKind::clayton;
  if (name == "gumbel") return FamilyKind::gumbel;
  if (name == "frank") return FamilyKind::frank;
  if (name == "joe") return FamilyKind::joe;
  throw data_error("unknown pair copula family '" + name + "'");
}

PairCopulaFamily::PairCopulaFamily(FamilyKind k, int rot) : kind(k), rotation(rot) {
  if (rot != 0 && rot != 90 && rot != 180 && rot != 270)
    throw std::invalid_argument("rotation must be one of 0, 90, 180, 270");
  if (k == FamilyKind::independence || k == FamilyKind::gaussian || k == FamilyKind::frank) rotation = 0;
}

bool PairCopula::is_independence() const {
  return family.kind == FamilyKind::independence || frank_like_independence(*this);
}

double pc_log_density(const PairCopula& pc, double u, double v) {
  validate_theta(pc.family, pc.theta);
  u = clamp_unit(u);
  v = clamp_unit(v);
  FamilyKind k = pc.family.kind;
  switch (pc.family.rotation) {
    case 0: return base_log_density(k, pc.theta, u, v);
    case 90: return base_log_density(k, pc.theta, v, 1.0 - u);
    case 180: return base_log_density(k, pc.theta, 1.0 - u, 1.0 - v);
    case 270: return base_log_density(k, pc.theta, 1.0 - v, u);
  }
  throw std::logic_error("unreachable");
}

double pc_density(const PairCopula& pc, double u, double v) { return std::exp(pc_log_density(pc, u, v)); }

double pc_h(const PairCopula& pc, double u, double v) {
  validate_theta(pc.family, pc.theta);
  u = clamp_unit(u);
  v = clamp_unit(v);
  FamilyKind k = pc.family.kind;
  double r;
  switch (pc.family.rotation) {
    case 0: r = base_h(k, pc.theta, u, v); break;
    case 90: r = 1.0 - base_h(k, pc.theta, 1.0 - u, v); break;
    case 180: r = 1.0 - base_h(k, pc.theta, 1.0 - u, 1.0 - v); break;
    case 270: r = base_h(k, pc.theta, u, 1.0 - v); break;
    default: throw std::logic_error("unreachable");
  }
  return std::clamp(r, 0.0, 1.0);
}

double pc_h2(const PairCopula& pc, double v, double u) {
  validate_theta(pc.family, pc.theta);
  u = clamp_unit(u);
  v = clamp_unit(v);
  FamilyKind k = pc.family.kind;
  double r;
  switch (pc.family.rotation) {
    case 0: r = base_h(k, pc.theta, v, u); break;
    case 90: r = base_h(k, pc.theta, v, 1.0 - u); break;
    case 180: r = 1.0 - base_h(k, pc.theta, 1.0 - v, 1.0 - u); break;
    case 270: r = 1.0 - base_h(k, pc.theta, 1.0 - v, u); break;
    default: throw std::logic_error("unreachable");
  }
  return std::clamp(r, 0.0, 1.0);
}

double pc_h_inverse(const PairCopula& pc, double w, double v) {
  validate_theta(pc.family, pc.theta);
  w = clamp_unit(w);
  v = clamp_unit(v);
  FamilyKind k = pc.family.kind;
  double r;
  switch (pc.family.rotation) {
    case 0: r = base_h_inverse(k, pc.theta, w, v); break;
    case 90: r = 1.0 - base_h_inverse(k, pc.theta, 1.0 - w, v); break;
    case 180: r = 1.0 - base_h_inverse(k, pc.theta, 1.0 - w, 1.0 - v); break;
    case 270: r = base_h_inverse(k, pc.theta, w, 1.0 - v); break;
    default: throw std::logic_error("unreachable");
  }
  return std::clamp(r, 0.0, 1.0);
}

double pc_cdf(const PairCopula& pc, double u, double v) {
  validate_theta(pc.family, pc.theta);
  u = clamp_unit(u);
  v = clamp_unit(v);
  FamilyKind k = pc.family.kind;
  switch (pc.family.rotation) {
    case 0: return base_cdf(k, pc.theta, u, v);
    case 90: return v - base_cdf(k, pc.theta, v, 1.0 - u);
    case 180: return u + v - 1.0 + base_cdf(k, pc.theta, 1.0 - u, 1.0 - v);
    case 270: return u - base_cdf(k, pc.theta, 1.0 - v, u);
  }
  throw std::logic_error("unreachable");
}

double theta_to_tau(PairCopulaFamily family, double theta) {
  validate_theta(family, theta);
  double tau = base_tau_from_theta(family.kind, theta);
  return (family.rotation == 90 || family.rotation == 270) ? -tau : tau;
}

double tau_to_theta(PairCopulaFamily family, double tau) {
  double base_tau = (family.rotation == 90 || family.rotation == 270) ? -tau : tau;
  return base_theta_from_tau(family.kind, base_tau);
}

double PairCopulaFit::aic() const {
  int k = copula.family.kind == FamilyKind::independence ? 0 : 1;
  return 2.0 * k - 2.0 * loglik;
}

namespace {

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  bool converged = false;
};

// Brent minimization on [lo, hi].
template <typename F>
BrentResult brent_minimize(F&& f, double lo, double hi, double tol, int maxit) {
  const double gold = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + gold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < maxit; ++it) {
    double m = 0.5 * (a + b);
    double tol1 = tol * std::fabs(x) + 1e-12, tol2 = 2.0 * tol1;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) return {x, fx, true};
    double p = 0.0, q = 0.0, r = 0.0;
    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      r = (x - w) * (fx - fv);
      q = (x - v) * (fx - fw);
      p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0) p = -p;
      q = std::fabs(q);
      if (std::fabs(p) < std::fabs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x)) {
        e = d;
        d = p / q;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m ? b : a) - x;
      d = gold * e;
    }
    double u = x + (std::fabs(d) >= tol1 ? d : (d > 0 ? tol1 : -tol1));
    double fu = f(u);
    if (fu <= fx) {
      if (u < x)
        b = x;
      else
        a = x;
      v = w, fv = fw, w = x, fw = fx, x = u, fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw, w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  return {x, fx, false};
}

// Negative log-likelihood over the sample, with per-family precomputed
// transforms so one evaluation is cheap inside the optimizer.
struct NegLoglik {
  FamilyKind kind;
  // gaussian sufficient statistics
  double s_ab = 0.0, s_a2b2 = 0.0;
  int n = 0;
  std::vector<double> t1, t2;  // per-family transforms of (u,v)

  static NegLoglik prepare(FamilyKind k, std::span<const double> u, std::span<const double> v) {
    NegLoglik f;
    f.kind = k;
    f.n = static_cast<int>(u.size());
    switch (k) {
      case FamilyKind::gaussian:
        for (size_t i = 0; i < u.size(); ++i) {
          double a = std_normal_quantile(clamp_unit(u[i]));
          double b = std_normal_quantile(clamp_unit(v[i]));
          f.s_ab += a * b;
          f.s_a2b2 += a * a + b * b;
        }
        break;
      case FamilyKind::clayton:
        f.t1.resize(u.size());
        f.t2.resize(u.size());
        for (size_t i = 0; i < u.size(); ++i) f.t1[i] = std::log(clamp_unit(u[i])), f.t2[i] = std::log(clamp_unit(v[i]));
        break;
      case FamilyKind::gumbel:
        f.t1.resize(u.size());
        f.t2.resize(u.size());
        for (size_t i = 0; i < u.size(); ++i)
          f.t1[i] = -std::log(clamp_unit(u[i])), f.t2[i] = -std::log(clamp_unit(v[i]));
        break;
      case FamilyKind::joe:
        f.t1.resize(u.size());
        f.t2.resize(u.size());
        for (size_t i = 0; i < u.size(); ++i)
          f.t1[i] = std::log1p(-clamp_unit(u[i])), f.t2[i] = std::log1p(-clamp_unit(v[i]));
        break;
      case FamilyKind::frank:
        f.t1.assign(u.begin(), u.end());
        f.t2.assign(v.begin(), v.end());
        for (auto& x : f.t1) x = clamp_unit(x);
        for (auto& x : f.t2) x = clamp_unit(x);
        break;
      case FamilyKind::independence: break;
    }
    return f;
  }

  double operator()(double theta) const {
    double ll = 0.0;
    switch (kind) {
      case FamilyKind::gaussian: {
        double r2 = 1.0 - theta * theta;
        ll = -0.5 * n * std::log(r2) - (theta * theta * s_a2b2 - 2.0 * theta * s_ab) / (2.0 * r2);
        break;
      }
      case FamilyKind::clayton:
        for (int i = 0; i < n; ++i) {
          double ls = clayton_log_s(theta, t1[i], t2[i]);
          ll += std::log1p(theta) - (theta + 1.0) * (t1[i] + t2[i]) - (2.0 + 1.0 / theta) * ls;
        }
        break;
      case FamilyKind::gumbel:
        for (int i = 0; i < n; ++i) {
          double ls = gumbel_log_s(theta, t1[i], t2[i]);
          double sp = std::exp(ls / theta);
          ll += -sp + (theta - 1.0) * (std::log(t1[i]) + std::log(t2[i])) + (1.0 / theta - 2.0) * ls +
                std::log(sp + theta - 1.0) + t1[i] + t2[i];
        }
        break;
      case FamilyKind::joe:
        for (int i = 0; i < n; ++i) {
          double ls = joe_log_s(theta, t1[i], t2[i]);
          ll += (1.0 / theta - 2.0) * ls + (theta - 1.0) * (t1[i] + t2[i]) +
                std::log(theta - 1.0 + std::exp(ls));
        }
        break;
      case FamilyKind::frank:
        for (int i = 0; i < n; ++i) ll += frank_log_density(theta, t1[i], t2[i]);
        break;
      case FamilyKind::independence: break;
    }
    if (!std::isfinite(ll)) return std::numeric_limits<double>::max();
    return -ll;
  }
};

PairCopulaFit fit_mle_with_tau(PairCopulaFamily family, std::span<const double> u, std::span<const double> v,
                               double tau_uv) {
  const int n = static_cast<int>(u.size());
  if (n < 10) throw std::invalid_argument("fit_mle: need at least 10 observations");
  if (u.size() != v.size()) throw std::invalid_argument("fit_mle: length mismatch");

  if (family.kind == FamilyKind::independence) {
    return {PairCopula(family, 0.0), 0.0, n};
  }

  // Rotations are fit as the base family on rotated pseudo-observations.
  std::vector<double> bu(n), bv(n);
  for (int i = 0; i < n; ++i) {
    double uu = clamp_unit(u[i]), vv = clamp_unit(v[i]);
    switch (family.rotation) {
      case 0: bu[i] = uu, bv[i] = vv; break;
      case 90: bu[i] = vv, bv[i] = 1.0 - uu; break;
      case 180: bu[i] = 1.0 - uu, bv[i] = 1.0 - vv; break;
      case 270: bu[i] = 1.0 - vv, bv[i] = uu; break;
    }
  }
  double base_tau = (family.rotation == 90 || family.rotation == 270) ? -tau_uv : tau_uv;

  ThetaRange range = admissible_range(family.kind);
  double lo = range.lo, hi = range.hi;
  if (family.kind == FamilyKind::gaussian) lo += 1e-6, hi -= 1e-6;
  if (family.kind == FamilyKind::clayton) lo = 1e-6;

  // Initializer: tau inversion clamped into the admissible range; a weak
  // parameter near the lower end when the tau is unattainable.
  double init;
  try {
    init = std::clamp(base_theta_from_tau(family.kind, base_tau), lo, hi);
  } catch (const data_error&) {
    init = lo + 0.01 * (hi - lo);
  }

  NegLoglik nll = NegLoglik::prepare(family.kind, bu, bv);

  // Coarse grid plus the initializer picks the bracket for Brent.
  std::vector<double> probes;
  for (int i = 0; i <= 7; ++i) probes.push_back(lo + (hi - lo) * i / 7.0);
  probes.push_back(init);
  std::sort(probes.begin(), probes.end());
  size_t best = 0;
  double fbest = std::numeric_limits<double>::max();
  std::vector<double> fvals(probes.size());
  for (size_t i = 0; i < probes.size(); ++i) {
    fvals[i] = nll(probes[i]);
    if (fvals[i] < fbest) fbest = fvals[i], best = i;
  }
  double blo = best == 0 ? probes[0] : probes[best - 1];
  double bhi = best + 1 >= probes.size() ? probes.back() : probes[best + 1];
  if (blo == bhi) blo = lo, bhi = hi;

  BrentResult res = brent_minimize(nll, blo, bhi, 1e-8, 200);
  if (!res.converged) throw numeric_error("fit_mle: optimizer did not converge for " + family_name(family.kind));

  double theta = res.x;
  if (nll(init) < res.fx) theta = init;  // never worse than the initializer

  PairCopula pc(family, theta);
  double ll = 0.0;
  for (int i = 0; i < n; ++i) ll += pc_log_density(pc, u[i], v[i]);
  if (!std::isfinite(ll)) throw numeric_error("fit_mle: non-finite log-likelihood for " + family_name(family.kind));
  return {pc, ll, n};
}

}  // namespace

PairCopulaFit fit_mle(PairCopulaFamily family, std::span<const double> u, std::span<const double> v) {
  double tau = family.kind == FamilyKind::independence ? 0.0 : kendall_tau(u, v);
  return fit_mle_with_tau(family, u, v, tau);
}

double pc_class_conditional_cdf(const PairCopula& pc, double u, int y, double pi) {
  const double cut = 1.0 - pi;
  const double c = pc_cdf(pc, u, cut);
  return y == 0 ? c / cut : (clamp_unit(u) - c) / pi;
}

double pc_class_conditional_density(const PairCopula& pc, double u, int y, double pi) {
  const double cut = 1.0 - pi;
  const double h = std::clamp(pc_h2(pc, cut, u), 1e-14, 1.0 - 1e-14);
  return y == 0 ? h / cut : (1.0 - h) / pi;
}

double pc_class_conditional_inverse(const PairCopula& pc, double w, int y, double pi) {
  if (pc.is_independence()) return clamp_unit(w);
  w = clamp_unit(w);
  const double eps = 1e-12;
  double lo = eps, hi = 1.0 - eps;
  double u = w;
  for (int it = 0; it < 100; ++it) {
    double f = pc_class_conditional_cdf(pc, u, y, pi) - w;
    if (std::fabs(f) < 1e-13) return u;
    if (f > 0)
      hi = u;
    else
      lo = u;
    double dens = pc_class_conditional_density(pc, u, y, pi);
    double next = dens > 1e-100 ? u - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - u) < 1e-15) return next;
    u = next;
  }
  return u;
}

namespace {

PairCopulaFit fit_mle_binary_root_with_tau(PairCopulaFamily family, std::span<const double> u,
                                           std::span<const double> y, double pi, double tau_uy) {
  const int n = static_cast<int>(u.size());
  if (n < 10) throw std::invalid_argument("fit_mle_binary_root: need at least 10 observations");
  if (u.size() != y.size()) throw std::invalid_argument("fit_mle_binary_root: length mismatch");
  if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("fit_mle_binary_root: prevalence must be in (0,1)");

  if (family.kind == FamilyKind::independence) return {PairCopula(family, 0.0), 0.0, n};

  ThetaRange range = admissible_range(family.kind);
  double lo = range.lo, hi = range.hi;
  if (family.kind == FamilyKind::gaussian) lo += 1e-6, hi -= 1e-6;
  if (family.kind == FamilyKind::clayton) lo = 1e-6;

  auto nll = [&](double theta) {
    PairCopula pc(family, theta);
    double ll = 0.0;
    for (int i = 0; i < n; ++i)
      ll += std::log(pc_class_conditional_density(pc, clamp_unit(u[i]), y[i] == 1.0 ? 1 : 0, pi));
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max();
  };

  double init;
  try {
    // tau_b against a binary column understates the latent association;
    // it only seeds the bracket search.
    double base_tau = (family.rotation == 90 || family.rotation == 270) ? -tau_uy : tau_uy;
    init = std::clamp(base_theta_from_tau(family.kind, base_tau), lo, hi);
  } catch (const data_error&) {
    init = lo + 0.01 * (hi - lo);
  }

  std::vector<double> probes;
  for (int i = 0; i <= 7; ++i) probes.push_back(lo + (hi - lo) * i / 7.0);
  probes.push_back(init);
  std::sort(probes.begin(), probes.end());
  size_t best = 0;
  double fbest = std::numeric_limits<double>::max();
  for (size_t i = 0; i < probes.size(); ++i) {
    double f = nll(probes[i]);
    if (f < fbest) fbest = f, best = i;
  }
  double blo = best == 0 ? probes[0] : probes[best - 1];
  double bhi = best + 1 >= probes.size() ? probes.back() : probes[best + 1];
  if (blo == bhi) blo = lo, bhi = hi;

  BrentResult res = brent_minimize(nll, blo, bhi, 1e-8, 200);
  if (!res.converged)
    throw numeric_error("fit_mle_binary_root: optimizer did not converge for " + family_name(family.kind));
  double theta = res.x;
  if (nll(init) < res.fx) theta = init;

  PairCopula pc(family, theta);
  double ll = -nll(theta);
  return {pc, ll, n};
}

}  // namespace

PairCopulaFit fit_mle_binary_root(PairCopulaFamily family, std::span<const double> u, std::span<const double> y,
                                  double pi) {
  double tau = family.kind == FamilyKind::independence ? 0.0 : kendall_tau(u, y);
  return fit_mle_binary_root_with_tau(family, u, y, pi, tau);
}

PairCopulaFit select_aic_binary_root(std::span<const double> u, std::span<const double> y, double pi,
                                     std::span<const PairCopulaFamily> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_aic_binary_root: empty candidate set");
  bool has_indep = false;
  for (const auto& c : candidates)
    if (c.kind == FamilyKind::independence) has_indep = true;
  if (!has_indep) throw std::invalid_argument("select_aic_binary_root: candidate set must contain independence");

  const int n = static_cast<int>(u.size());
  double tau = kendall_tau(u, y);
  double z = tau * std::sqrt(9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)));
  if (std::fabs(z) <= 1.959964) {
    return {PairCopula(PairCopulaFamily(FamilyKind::independence), 0.0), 0.0, n};
  }

  PairCopulaFit best;
  bool have_best = false;
  std::exception_ptr first_error;
  for (const auto& cand : candidates) {
    PairCopulaFit fit;
    try {
      fit = fit_mle_binary_root_with_tau(cand, u, y, pi, tau);
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
      continue;
    }
    if (!have_best) {
      best = fit;
      have_best = true;
      continue;
    }
    double a = fit.aic(), b = best.aic();
    int ka = fit.copula.family.kind == FamilyKind::independence ? 0 : 1;
    int kb = best.copula.family.kind == FamilyKind::independence ? 0 : 1;
    auto key = [](double aic, int k, const PairCopulaFamily& f) {
      return std::make_tuple(aic, k, family_name(f.kind), f.rotation);
    };
    if (key(a, ka, fit.copula.family) < key(b, kb, best.copula.family)) best = fit;
  }
  if (!have_best) std::rethrow_exception(first_error);
  return best;
}

std::vector<PairCopulaFamily> default_candidates() {
  std::vector<PairCopulaFamily> c;
  c.emplace_back(FamilyKind::independence);
  c.emplace_back(FamilyKind::gaussian);
  c.emplace_back(FamilyKind::frank);
  for (FamilyKind k : {FamilyKind::clayton, FamilyKind::gumbel, FamilyKind::joe})
    for (int rot : {0, 90, 180, 270}) c.emplace_back(k, rot);
  return c;
}

PairCopulaFit select_aic(std::span<const double> u, std::span<const double> v,
                         std::span<const PairCopulaFamily> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_aic: empty candidate set");
  bool has_indep = false;
  for (const auto& c : candidates)
    if (c.kind == FamilyKind::independence) has_indep = true;
  if (!has_indep) throw std::invalid_argument("select_aic: candidate set must contain independence");

  const int n = static_cast<int>(u.size());
  double tau = kendall_tau(u, v);

  // Kendall independence pretest at the 5% level; spurious families on
  // null edges would otherwise slip through the bare AIC comparison.
  double z = tau * std::sqrt(9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)));
  if (std::fabs(z) <= 1.959964) {
    return {PairCopula(PairCopulaFamily(FamilyKind::independence), 0.0), 0.0, n};
  }

  PairCopulaFit best;
  bool have_best = false;
  std::exception_ptr first_error;
  for (const auto& cand : candidates) {
    PairCopulaFit fit;
    try {
      fit = fit_mle_with_tau(cand, u, v, tau);
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
      continue;
    }
    if (!have_best) {
      best = fit;
      have_best = true;
      continue;
    }
    double a = fit.aic(), b = best.aic();
    int ka = fit.copula.family.kind == FamilyKind::independence ? 0 : 1;
    int kb = best.copula.family.kind == FamilyKind::independence ? 0 : 1;
    auto key = [](double aic, int k, const PairCopulaFamily& f) {
      return std::make_tuple(aic, k, family_name(f.kind), f.rotation);
    };
    if (key(a, ka, fit.copula.family) < key(b, kb, best.copula.family)) best = fit;
  }
  if (!have_best) std::rethrow_exception(first_error);
  return best;
}

}  // namespace tvs

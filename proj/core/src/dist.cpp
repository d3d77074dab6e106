#include "soe/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "soe/error.hpp"
#include "soe/random.hpp"

namespace soe::dist {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;
// Poisson mass left out of a truncated noncentral mixture.
constexpr double kMixtureTolerance = 1e-12;

[[noreturn]] void parameter_error(const std::string& what) {
  throw Error(ErrorKind::Parameter, what);
}

// Continued fraction for Q(a, x), modified Lentz; valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Series for P(a, x); valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for I_x(a, b) without the front factor, modified Lentz.
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double log_poisson(double lambda, double j) {
  return -lambda + j * std::log(lambda) - std::lgamma(j + 1.0);
}

// Sums w_j * term(j) over Poisson(lambda) weights, starting at the mode and
// walking outwards until the omitted mass is below kMixtureTolerance.
template <class Term>
double poisson_mixture(double lambda, Term term) {
  if (lambda <= 0.0) return term(0);
  const double mode = std::floor(lambda);
  double total_weight = 0.0;
  double sum = 0.0;
  for (double j = mode; j >= 0.0; j -= 1.0) {
    const double w = std::exp(log_poisson(lambda, j));
    total_weight += w;
    sum += w * term(static_cast<int>(j));
    // Below the mode the pmf decays at least geometrically with ratio j/lambda.
    const double ratio = j / lambda;
    if (ratio < 1.0 && w / (1.0 - ratio) < kMixtureTolerance * 1e-2) break;
  }
  for (double j = mode + 1.0; j < mode + kMaxIter; j += 1.0) {
    if (1.0 - total_weight < kMixtureTolerance) break;
    const double w = std::exp(log_poisson(lambda, j));
    total_weight += w;
    sum += w * term(static_cast<int>(j));
    if (w == 0.0 && j > lambda) break;
  }
  return sum;
}

// ---- central kernels -------------------------------------------------------

double t_cdf_central(double df, double t) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * beta_inc(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double f_cdf_central(double d1, double d2, double x) {
  if (x <= 0.0) return 0.0;
  return beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

double f_sf_central(double d1, double d2, double x) {
  if (x <= 0.0) return 1.0;
  return beta_inc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
}

// ---- noncentral kernels ----------------------------------------------------

double chi2_cdf_mixture(double k, double lambda, double x) {
  if (x <= 0.0) return 0.0;
  return clamp01(poisson_mixture(0.5 * lambda, [&](int j) { return gamma_p(0.5 * k + j, 0.5 * x); }));
}

double chi2_sf_mixture(double k, double lambda, double x) {
  if (x <= 0.0) return 1.0;
  return clamp01(poisson_mixture(0.5 * lambda, [&](int j) { return gamma_q(0.5 * k + j, 0.5 * x); }));
}

double f_cdf_mixture(double d1, double d2, double lambda, double x) {
  if (x <= 0.0) return 0.0;
  const double y = d1 * x / (d1 * x + d2);
  return clamp01(poisson_mixture(0.5 * lambda, [&](int j) { return beta_inc(0.5 * d1 + j, 0.5 * d2, y); }));
}

double f_sf_mixture(double d1, double d2, double lambda, double x) {
  if (x <= 0.0) return 1.0;
  const double y = d2 / (d2 + d1 * x);
  return clamp01(poisson_mixture(0.5 * lambda, [&](int j) { return beta_inc(0.5 * d2, 0.5 * d1 + j, y); }));
}

// Noncentral t for t >= 0 as a mixture of incomplete beta functions:
// F = Phi(-delta) + 1/2 sum_j [p_j I_y(j + 1/2, nu/2) + q_j I_y(j + 1, nu/2)].
double t_cdf_mixture_nonneg(double nu, double delta, double t) {
  const double base = normal_cdf(-delta);
  if (t == 0.0) return base;
  const double y = t * t / (t * t + nu);
  const double lambda = 0.5 * delta * delta;
  if (lambda == 0.0) return clamp01(base + 0.5 * beta_inc(0.5, 0.5 * nu, y));
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  const double log_lambda = std::log(lambda);
  // p_j carries the Poisson weight; q_j / p_j = sign * sqrt(lambda) * j! / Gamma(j + 3/2).
  const double sum = poisson_mixture(lambda, [&](int j) {
    const double q_over_p =
        sign * std::exp(0.5 * log_lambda + std::lgamma(j + 1.0) - std::lgamma(j + 1.5));
    return beta_inc(j + 0.5, 0.5 * nu, y) + q_over_p * beta_inc(j + 1.0, 0.5 * nu, y);
  });
  return clamp01(base + 0.5 * sum);
}

// Upper tail for t >= 0 from the same mixture with complemented betas,
// 1 - F = 1/2 sum_j [p_j I_{1-y}(nu/2, j + 1/2) + q_j I_{1-y}(nu/2, j + 1)],
// so far tails keep their relative precision.
double t_sf_mixture_nonneg(double nu, double delta, double t) {
  if (t == 0.0) return normal_cdf(delta);
  const double w = nu / (t * t + nu);
  const double lambda = 0.5 * delta * delta;
  if (lambda == 0.0) return clamp01(0.5 * beta_inc(0.5 * nu, 0.5, w));
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  const double log_lambda = std::log(lambda);
  const double sum = poisson_mixture(lambda, [&](int j) {
    const double q_over_p =
        sign * std::exp(0.5 * log_lambda + std::lgamma(j + 1.0) - std::lgamma(j + 1.5));
    return beta_inc(0.5 * nu, j + 0.5, w) + q_over_p * beta_inc(0.5 * nu, j + 1.0, w);
  });
  return clamp01(0.5 * sum);
}

double t_cdf_mixture(double nu, double delta, double t) {
  if (t >= 0.0) return t_cdf_mixture_nonneg(nu, delta, t);
  return t_sf_mixture_nonneg(nu, -delta, -t);
}

double t_sf_mixture(double nu, double delta, double t) {
  if (t >= 0.0) return t_sf_mixture_nonneg(nu, delta, t);
  return t_cdf_mixture_nonneg(nu, -delta, -t);
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) parameter_error("gamma_p: requires a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return clamp01(gamma_p_series(a, x));
  return clamp01(1.0 - gamma_q_cf(a, x));
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) parameter_error("gamma_q: requires a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return clamp01(1.0 - gamma_p_series(a, x));
  return clamp01(gamma_q_cf(a, x));
}

double beta_inc(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    parameter_error("beta_inc: requires a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return clamp01(std::exp(log_front) * beta_cf(a, b, x) / a);
  }
  return clamp01(1.0 - std::exp(log_front) * beta_cf(b, a, 1.0 - x) / b);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) parameter_error("normal_quantile: q must lie in (0, 1)");
  // Acklam's rational approximation, refined by Halley steps on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (q < p_low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else if (q <= 1.0 - p_low) {
    const double s = q - 0.5;
    const double r = s * s;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double r = std::sqrt(-2.0 * std::log1p(-q));
    x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    // Upper half: Phi(x) - q == (1 - q) - Phi(-x), and 1 - q is exact there.
    const double e = (q < 0.5) ? normal_cdf(x) - q : (1.0 - q) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

void DistSpec::validate() const {
  auto positive = [](const std::optional<double>& v) { return v && *v > 0.0 && std::isfinite(*v); };
  if (!std::isfinite(ncp)) parameter_error("noncentrality must be finite");
  switch (kind) {
    case Kind::Normal:
      if (df1 || df2) parameter_error("Normal takes no degrees of freedom");
      break;
    case Kind::StudentT:
      if (!positive(df1) || df2) parameter_error("StudentT requires df1 > 0 only");
      break;
    case Kind::ChiSquare:
      if (!positive(df1) || df2) parameter_error("ChiSquare requires df1 > 0 only");
      if (ncp < 0.0) parameter_error("ChiSquare noncentrality must be >= 0");
      break;
    case Kind::FisherF:
      if (!positive(df1) || !positive(df2)) parameter_error("FisherF requires df1 > 0 and df2 > 0");
      if (ncp < 0.0) parameter_error("FisherF noncentrality must be >= 0");
      break;
  }
}

double cdf(const DistSpec& spec, double x) {
  spec.validate();
  if (std::isnan(x)) parameter_error("cdf: x is NaN");
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  switch (spec.kind) {
    case Kind::Normal:
      return normal_cdf(x - spec.ncp);
    case Kind::StudentT:
      return spec.ncp == 0.0 ? t_cdf_central(*spec.df1, x) : t_cdf_mixture(*spec.df1, spec.ncp, x);
    case Kind::ChiSquare:
      if (x <= 0.0) return 0.0;
      return spec.ncp == 0.0 ? gamma_p(0.5 * *spec.df1, 0.5 * x) : chi2_cdf_mixture(*spec.df1, spec.ncp, x);
    case Kind::FisherF:
      return spec.ncp == 0.0 ? f_cdf_central(*spec.df1, *spec.df2, x)
                             : f_cdf_mixture(*spec.df1, *spec.df2, spec.ncp, x);
  }
  return 0.0;
}

double sf(const DistSpec& spec, double x) {
  spec.validate();
  if (std::isnan(x)) parameter_error("sf: x is NaN");
  if (x == -std::numeric_limits<double>::infinity()) return 1.0;
  if (x == std::numeric_limits<double>::infinity()) return 0.0;
  switch (spec.kind) {
    case Kind::Normal:
      return normal_cdf(-(x - spec.ncp));
    case Kind::StudentT:
      if (spec.ncp == 0.0) return t_cdf_central(*spec.df1, -x);
      return t_sf_mixture(*spec.df1, spec.ncp, x);
    case Kind::ChiSquare:
      if (x <= 0.0) return 1.0;
      return spec.ncp == 0.0 ? gamma_q(0.5 * *spec.df1, 0.5 * x) : chi2_sf_mixture(*spec.df1, spec.ncp, x);
    case Kind::FisherF:
      return spec.ncp == 0.0 ? f_sf_central(*spec.df1, *spec.df2, x)
                             : f_sf_mixture(*spec.df1, *spec.df2, spec.ncp, x);
  }
  return 0.0;
}

double quantile(const DistSpec& spec, double q) {
  spec.validate();
  if (!(q > 0.0 && q < 1.0)) parameter_error("quantile: q must lie in (0, 1)");
  if (spec.kind == Kind::Normal) return spec.ncp + normal_quantile(q);

  const bool nonnegative = spec.kind == Kind::ChiSquare || spec.kind == Kind::FisherF;
  double lo, hi;
  if (nonnegative) {
    lo = 0.0;
    hi = std::max(1.0, (spec.df1.value_or(1.0) + spec.ncp));
    while (cdf(spec, hi) < q) hi *= 2.0;
  } else {
    lo = spec.ncp - 1.0;
    hi = spec.ncp + 1.0;
    while (cdf(spec, lo) > q) lo = spec.ncp - 2.0 * (spec.ncp - lo);
    while (cdf(spec, hi) < q) hi = spec.ncp + 2.0 * (hi - spec.ncp);
  }
  // Bisection to 1e-10 in probability or until the bracket collapses.
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 400; ++i) {
    mid = 0.5 * (lo + hi);
    const double p = cdf(spec, mid);
    if (std::fabs(p - q) <= 1e-12) break;
    if (p < q) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid))) break;
  }
  return mid;
}

double detail::mixture_cdf(const DistSpec& spec, double x) {
  spec.validate();
  switch (spec.kind) {
    case Kind::Normal:
      return normal_cdf(x - spec.ncp);
    case Kind::StudentT:
      return t_cdf_mixture(*spec.df1, spec.ncp, x);
    case Kind::ChiSquare:
      return chi2_cdf_mixture(*spec.df1, spec.ncp, x);
    case Kind::FisherF:
      return f_cdf_mixture(*spec.df1, *spec.df2, spec.ncp, x);
  }
  return 0.0;
}

double mc_cdf_oracle(const DistSpec& spec, double x, std::int64_t draws, std::uint64_t seed) {
  spec.validate();
  if (draws < 10000) parameter_error("mc_cdf_oracle: draws must be >= 10^4");
  Rng rng(seed);
  // Noncentral chi-square as (Z + sqrt(lambda))^2 plus a central chi-square on df - 1.
  auto chi2 = [&](double df, double lambda) {
    if (lambda == 0.0) return rng.chi_square(df);
    const double z = rng.normal() + std::sqrt(lambda);
    return z * z + (df > 1.0 ? rng.chi_square(df - 1.0) : 0.0);
  };
  std::int64_t below = 0;
  for (std::int64_t i = 0; i < draws; ++i) {
    double v = 0.0;
    switch (spec.kind) {
      case Kind::Normal:
        v = rng.normal() + spec.ncp;
        break;
      case Kind::StudentT:
        v = (rng.normal() + spec.ncp) / std::sqrt(rng.chi_square(*spec.df1) / *spec.df1);
        break;
      case Kind::ChiSquare:
        v = chi2(*spec.df1, spec.ncp);
        break;
      case Kind::FisherF:
        v = (chi2(*spec.df1, spec.ncp) / *spec.df1) / (rng.chi_square(*spec.df2) / *spec.df2);
        break;
    }
    if (v <= x) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(draws);
}

}  // namespace soe::dist

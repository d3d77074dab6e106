#include "soe/effect_power.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "soe/dist.hpp"
#include "soe/error.hpp"

namespace soe {
namespace {

constexpr double kMinP = 1e-300;

[[noreturn]] void insufficient(const std::string& what) { throw Error(ErrorKind::InsufficientData, what); }
[[noreturn]] void too_small(const std::string& what) { throw Error(ErrorKind::InsufficientN, what); }

double require_statistic(const CodedTest& t) {
  if (!t.statistic) insufficient("missing statistic");
  return *t.statistic;
}

double require_df(const std::optional<std::int64_t>& df, const char* name) {
  if (!df || *df <= 0) insufficient(std::string("missing ") + name);
  return static_cast<double>(*df);
}

double clamp_p(double p) { return std::clamp(p, kMinP, 1.0); }

double two_sided_p(const dist::DistSpec& spec, double x) {
  return 2.0 * std::min(dist::cdf(spec, x), dist::sf(spec, x));
}

double symmetric_p(const dist::DistSpec& spec, double x, bool two_sided) {
  return clamp_p(two_sided ? two_sided_p(spec, x) : dist::sf(spec, x));
}

// Power of a test whose statistic is symmetric under H0 and shifted by `ncp`
// under H1 (t or normal).
double shifted_power(const dist::DistSpec& null_spec, dist::DistSpec alt_spec, double alpha, bool two_sided) {
  if (two_sided) {
    const double crit = dist::quantile(null_spec, 1.0 - alpha / 2.0);
    return dist::sf(alt_spec, crit) + dist::cdf(alt_spec, -crit);
  }
  return dist::sf(alt_spec, dist::quantile(null_spec, 1.0 - alpha));
}

}  // namespace

GroupSizes resolve_groups(std::int64_t n_total, std::optional<std::int64_t> n1, std::optional<std::int64_t> n2) {
  if (n1 && n2) return {*n1, *n2};
  if (n1) return {*n1, n_total - *n1};
  if (n2) return {n_total - *n2, *n2};
  return {n_total / 2, n_total - n_total / 2};
}

PowerQuery PowerQuery::for_test(const CodedTest& test, double d_threshold, double alpha, bool two_sided) {
  PowerQuery q;
  q.family = test.family;
  q.n_total = test.n_total;
  q.n1 = test.n1;
  q.n2 = test.n2;
  q.df1 = test.df1;
  q.d_threshold = d_threshold;
  q.alpha = alpha;
  q.two_sided = two_sided;
  return q;
}

double d_to_w(double d) { return d / std::sqrt(d * d + 4.0); }
double w_to_d(double w) { return 2.0 * w / std::sqrt(1.0 - w * w); }
double d_to_f(double d) { return d / 2.0; }

double recompute_p(const CodedTest& t, bool two_sided) {
  switch (t.family) {
    case TestFamily::IndependentT:
    case TestFamily::PairedT: {
      const double stat = require_statistic(t);
      return symmetric_p(dist::DistSpec::student_t(require_df(t.df1, "df")), stat, two_sided);
    }
    case TestFamily::ZTest:
      return symmetric_p(dist::DistSpec::normal(), require_statistic(t), two_sided);
    case TestFamily::ChiSquare1: {
      const double stat = require_statistic(t);
      return clamp_p(dist::sf(dist::DistSpec::chi_square(require_df(t.df1, "df")), stat));
    }
    case TestFamily::CorrelationR: {
      const double r = require_statistic(t);
      const double df = t.df1 ? static_cast<double>(*t.df1) : static_cast<double>(t.n_total - 2);
      if (df < 1.0) insufficient("correlation needs n_total >= 3 or df1");
      if (std::fabs(r) >= 1.0) return kMinP;
      const double stat = r * std::sqrt(df / (1.0 - r * r));
      return symmetric_p(dist::DistSpec::student_t(df), stat, two_sided);
    }
    case TestFamily::OneWayF: {
      const double stat = require_statistic(t);
      const auto spec = dist::DistSpec::fisher_f(require_df(t.df1, "df1"), require_df(t.df2, "df2"));
      return clamp_p(dist::sf(spec, stat));
    }
  }
  insufficient("unknown family");
}

double standardize_effect(const CodedTest& t) {
  switch (t.family) {
    case TestFamily::IndependentT:
      return 2.0 * require_statistic(t) / std::sqrt(require_df(t.df1, "df"));
    case TestFamily::PairedT:
      return require_statistic(t) / std::sqrt(require_df(t.df1, "df"));
    case TestFamily::CorrelationR: {
      const double r = require_statistic(t);
      if (std::fabs(r) >= 1.0) throw Error(ErrorKind::DegenerateEffect, "|r| >= 1");
      return 2.0 * r / std::sqrt(1.0 - r * r);
    }
    case TestFamily::ChiSquare1: {
      const double chi2 = require_statistic(t);
      if (t.n_total <= 0) insufficient("missing n_total");
      const double w = std::sqrt(chi2 / static_cast<double>(t.n_total));
      if (w >= 1.0) throw Error(ErrorKind::DegenerateEffect, "w >= 1");
      return w_to_d(w);
    }
    case TestFamily::OneWayF: {
      const double f2 = require_statistic(t) * require_df(t.df1, "df1") / require_df(t.df2, "df2");
      return 2.0 * std::sqrt(f2);
    }
    case TestFamily::ZTest: {
      const auto g = resolve_groups(t.n_total, t.n1, t.n2);
      if (g.n1 <= 0 || g.n2 <= 0) insufficient("Z conversion needs two nonempty groups");
      return require_statistic(t) * std::sqrt(1.0 / static_cast<double>(g.n1) + 1.0 / static_cast<double>(g.n2));
    }
  }
  insufficient("unknown family");
}

double power_at_threshold(const PowerQuery& q) {
  if (!(q.alpha > 0.0 && q.alpha < 1.0)) throw Error(ErrorKind::Parameter, "alpha must lie in (0, 1)");
  if (!(q.d_threshold > 0.0) || !std::isfinite(q.d_threshold)) {
    throw Error(ErrorKind::Parameter, "d_threshold must be positive");
  }
  const double d = q.d_threshold;
  const double n = static_cast<double>(q.n_total);
  switch (q.family) {
    case TestFamily::IndependentT:
    case TestFamily::ZTest: {
      const auto g = resolve_groups(q.n_total, q.n1, q.n2);
      if (g.n1 < 1 || g.n2 < 1) too_small("two-group test needs both groups nonempty");
      const double ncp = d * std::sqrt(static_cast<double>(g.n1) * static_cast<double>(g.n2) / n);
      if (q.family == TestFamily::ZTest) {
        return shifted_power(dist::DistSpec::normal(), dist::DistSpec::normal(ncp), q.alpha, q.two_sided);
      }
      if (q.n_total < 3) too_small("independent t needs n_total >= 3");
      const double df = n - 2.0;
      return shifted_power(dist::DistSpec::student_t(df), dist::DistSpec::student_t(df, ncp), q.alpha,
                           q.two_sided);
    }
    case TestFamily::PairedT: {
      if (q.n_total < 2) too_small("paired t needs n_total >= 2");
      const double df = n - 1.0;
      return shifted_power(dist::DistSpec::student_t(df), dist::DistSpec::student_t(df, d * std::sqrt(n)),
                           q.alpha, q.two_sided);
    }
    case TestFamily::ChiSquare1: {
      const double w = d_to_w(d);
      const double crit = dist::quantile(dist::DistSpec::chi_square(1.0), 1.0 - q.alpha);
      return dist::sf(dist::DistSpec::chi_square(1.0, n * w * w), crit);
    }
    case TestFamily::OneWayF: {
      const double df1 = static_cast<double>(q.df1.value_or(1));
      if (df1 < 1.0) too_small("one-way F needs df1 >= 1");
      const double df2 = n - (df1 + 1.0);
      if (df2 < 1.0) too_small("one-way F needs n_total > k");
      const double f = d_to_f(d);
      const double crit = dist::quantile(dist::DistSpec::fisher_f(df1, df2), 1.0 - q.alpha);
      return dist::sf(dist::DistSpec::fisher_f(df1, df2, n * f * f), crit);
    }
    case TestFamily::CorrelationR: {
      if (q.n_total <= 3) too_small("correlation needs n_total > 3");
      const double shift = std::atanh(d_to_w(d)) * std::sqrt(n - 3.0);
      if (q.two_sided) {
        const double zc = dist::normal_quantile(1.0 - q.alpha / 2.0);
        return dist::normal_cdf(shift - zc) + dist::normal_cdf(-shift - zc);
      }
      return dist::normal_cdf(shift - dist::normal_quantile(1.0 - q.alpha));
    }
  }
  too_small("unknown family");
}

}  // namespace soe

#pragma once

#include <cstdint>
#include <optional>

namespace soe::dist {

enum class Kind { Normal, StudentT, ChiSquare, FisherF };

/// A central or noncentral distribution. For Normal the noncentrality is a
/// location shift of a unit-variance normal; for StudentT it is the usual
/// noncentral-t delta; for ChiSquare and FisherF it is lambda.
struct DistSpec {
  Kind kind = Kind::Normal;
  std::optional<double> df1;
  std::optional<double> df2;
  double ncp = 0.0;

  static DistSpec normal(double shift = 0.0) { return {Kind::Normal, {}, {}, shift}; }
  static DistSpec student_t(double df, double ncp = 0.0) { return {Kind::StudentT, df, {}, ncp}; }
  static DistSpec chi_square(double df, double ncp = 0.0) { return {Kind::ChiSquare, df, {}, ncp}; }
  static DistSpec fisher_f(double df1, double df2, double ncp = 0.0) {
    return {Kind::FisherF, df1, df2, ncp};
  }

  /// Throws Error(Parameter) when df fields do not match the kind.
  void validate() const;
};

double cdf(const DistSpec& spec, double x);
/// Upper tail 1 - cdf, evaluated without cancellation where possible.
double sf(const DistSpec& spec, double x);
double quantile(const DistSpec& spec, double q);

/// Empirical CDF from `draws` samples. Test oracle only; draws >= 10^4.
double mc_cdf_oracle(const DistSpec& spec, double x, std::int64_t draws, std::uint64_t seed);

// Special functions backing the kernels.

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_cdf(double z);
double normal_quantile(double q);

namespace detail {
/// Always takes the Poisson-mixture route, even for ncp == 0. Exposed so the
/// mixture can be checked against the central kernels.
double mixture_cdf(const DistSpec& spec, double x);
}  // namespace detail

}  // namespace soe::dist

#pragma once

#include <cstdint>
#include <optional>

#include "soe/model.hpp"

namespace soe {

struct PowerQuery {
  TestFamily family = TestFamily::IndependentT;
  std::int64_t n_total = 0;
  std::optional<std::int64_t> n1;
  std::optional<std::int64_t> n2;
  std::optional<std::int64_t> df1;  // numerator df for OneWayF (k - 1)
  double d_threshold = 0.5;
  double alpha = 0.05;
  bool two_sided = true;

  static PowerQuery for_test(const CodedTest& test, double d_threshold, double alpha, bool two_sided);
};

/// Resolved group sizes; an absent size is n_total minus the other, or an
/// equal split (rounded down for n1) when both are absent.
struct GroupSizes {
  std::int64_t n1;
  std::int64_t n2;
};
GroupSizes resolve_groups(std::int64_t n_total, std::optional<std::int64_t> n1, std::optional<std::int64_t> n2);

/// p-value of the coded statistic. Throws Error(InsufficientData) when the
/// statistic or a required df is missing. Clamped to [1e-300, 1].
double recompute_p(const CodedTest& test, bool two_sided = true);

/// Cohen's d implied by the coded statistic. Throws Error(DegenerateEffect)
/// for |r| >= 1 or w >= 1, Error(InsufficientData) for missing fields.
double standardize_effect(const CodedTest& test);

/// P[reject H0 | true effect = d_threshold]. Throws Error(InsufficientN)
/// when n leaves no error degrees of freedom for the family.
double power_at_threshold(const PowerQuery& query);

// Cohen equivalences between d and the other effect metrics.
double d_to_w(double d);  // also the point-biserial r: d / sqrt(d^2 + 4)
double w_to_d(double w);  // 2w / sqrt(1 - w^2)
double d_to_f(double d);  // d / 2

}  // namespace soe

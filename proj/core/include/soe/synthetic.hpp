#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "soe/model.hpp"

namespace soe {

struct SyntheticOptions {
  /// Families drawn uniformly from this list; empty means the default mix.
  std::vector<TestFamily> families;
  /// Fixed per-test sample size; otherwise log-uniform in [n_min, n_max].
  std::optional<std::int64_t> n_total;
  std::int64_t n_min = 20;
  std::int64_t n_max = 300;
};

/// Simulates raw observations for each test and derives statistic, df,
/// p-value and effect size from them, so the coded fields are mutually
/// consistent. A test is drawn under an effect of `effect_d_true` with
/// probability `true_fraction`, otherwise under the null. Deterministic for a
/// given seed on any platform (own sampling on top of mt19937_64).
Dataset generate_synthetic(std::uint64_t seed, int n_studies, int tests_per_study,
                           double true_fraction, double effect_d_true,
                           const SyntheticOptions& options = {});

/// The shipped fixture: 30 studies, 200 tests.
Dataset reference_fixture();

}  // namespace soe

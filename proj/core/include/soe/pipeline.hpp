#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soe/evidence.hpp"
#include "soe/model.hpp"

namespace soe {

struct Scenario {
  double d_threshold = 0.5;
  double bias_u = 0.0;
  double prior = 0.5;
  std::size_t index = 0;  // position in the config's cross-product
  std::string label;

  bool operator==(const Scenario&) const = default;
};

/// Class label such as "medium x weak-rct x intermediate"; off-preset
/// values are spelled out ("d0.35").
std::string scenario_label(double d_threshold, double bias_u, double prior);

/// Cross-product of the grids: thresholds outermost, priors innermost.
std::vector<Scenario> scenarios(const AnalysisConfig& cfg);

/// Builds a one-off scenario; index is its position in `cfg`'s grid or
/// SIZE_MAX when it lies outside it.
Scenario make_scenario(const AnalysisConfig& cfg, double d_threshold, double bias_u, double prior);

struct TestMetricsRow {
  std::string study_id;
  std::string test_id;
  TestFamily family = TestFamily::IndependentT;
  Scenario scenario;
  std::int64_t n_total = 0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  EvidenceMetrics metrics_raw;
  EvidenceMetrics metrics_adjusted;

  bool operator==(const TestMetricsRow&) const = default;
};

struct SkippedTest {
  std::string study_id;
  std::string test_id;
  std::string reason;
};

/// Rows for one scenario, ordered by (study_id, test_id).
std::vector<TestMetricsRow> run_scenario(const Dataset& ds, const AnalysisConfig& cfg, const Scenario& sc,
                                         std::vector<SkippedTest>* skipped = nullptr);

/// Rows for the whole grid in canonical (study_id, test_id, scenario) order.
/// The output does not depend on `threads`.
std::vector<TestMetricsRow> run_grid(const Dataset& ds, const AnalysisConfig& cfg, unsigned threads = 1,
                                     std::vector<SkippedTest>* skipped = nullptr);

std::vector<TestMetricsRow> rows_for(std::span<const TestMetricsRow> rows, const Scenario& sc);

struct ScenarioSummary {
  Scenario scenario;
  std::size_t n_tests = 0;
  std::size_t n_significant_raw = 0;
  std::size_t n_significant_adjusted = 0;
  std::optional<double> median_lr_raw;
  std::optional<double> median_lr_adjusted;
  ExpectedPositives expected_raw;
  ExpectedPositives expected_adjusted;
  std::optional<double> rbp_ge_half_raw;  // fraction of significant rows with rbp >= 0.5
  std::optional<double> rbp_ge_half_adjusted;

  bool operator==(const ScenarioSummary&) const = default;
};

/// Throws Error(Parameter) if a row belongs to another scenario.
ScenarioSummary summarize(std::span<const TestMetricsRow> rows, const Scenario& sc, const AnalysisConfig& cfg);

struct StudySummary {
  std::string study_id;
  std::size_t scenario_index = 0;
  double max_ppv = 0.0;  // over adjusted metrics
  std::size_t n_tests = 0;
  std::size_t n_significant_raw = 0;
  std::size_t n_significant_adjusted = 0;
  std::optional<double> median_lr_adjusted;
  std::optional<double> median_rbp_adjusted;
  double acpa = 0.0;
  int year = 0;
};

/// One summary per study that has rows in scenario `sc`, in dataset order.
std::vector<StudySummary> summarize_studies(std::span<const TestMetricsRow> rows, const Dataset& ds,
                                            const Scenario& sc);

struct Heatmap {
  std::vector<Scenario> scenarios;
  std::vector<std::string> study_ids;  // descending by overall max PPV
  std::vector<double> overall_max;
  std::vector<std::vector<std::optional<double>>> cells;  // [study][scenario]
  std::vector<double> fraction_ge_half;                   // per scenario
};

Heatmap heatmap_max_ppv(std::span<const TestMetricsRow> rows);

struct Association {
  double rho = 0.0;
  double p_perm = 1.0;
  std::size_t n_studies = 0;
};

/// Spearman correlation of per-study median adjusted RBP (significant rows
/// only) against ACPA, with a two-sided permutation p-value.
/// Throws Error(InsufficientData) for fewer than 3 usable studies.
Association citation_association(std::span<const StudySummary> summaries, std::span<const TestMetricsRow> rows,
                                 std::uint64_t seed, std::size_t permutations = 10000);

/// Spearman's rho with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

std::optional<double> median(std::vector<double> values);

}  // namespace soe

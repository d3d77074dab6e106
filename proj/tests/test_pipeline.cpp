#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "soe/effect_power.hpp"
#include "soe/error.hpp"
#include "soe/evidence.hpp"
#include "soe/mcc.hpp"
#include "soe/pipeline.hpp"
#include "soe/report.hpp"
#include "soe/synthetic.hpp"
#include "support.hpp"

using namespace soe;

namespace {

Dataset one_z_test(double p) {
  CodedTest t;
  t.study_id = "S1";
  t.test_id = "T1";
  t.family = TestFamily::ZTest;
  t.n_total = 128;
  t.n1 = 64;
  t.n2 = 64;
  t.p_reported = p;
  return {{{"S1", 2010, 2.0, {t}}}, "one"};
}

TestMetricsRow row(const Scenario& sc, const std::string& study, double ppv, double lr, bool sig, double rbp = 0.3) {
  TestMetricsRow r;
  r.study_id = study;
  r.test_id = "T" + std::to_string(int(lr * 10));
  r.scenario = sc;
  r.metrics_raw.ppv = r.metrics_adjusted.ppv = ppv;
  r.metrics_raw.fpr = r.metrics_adjusted.fpr = 1 - ppv;
  r.metrics_raw.lr = r.metrics_adjusted.lr = lr;
  r.metrics_raw.rbp = r.metrics_adjusted.rbp = rbp;
  r.metrics_raw.significant_raw = r.metrics_adjusted.significant_raw = sig;
  r.metrics_raw.significant_adjusted = r.metrics_adjusted.significant_adjusted = sig;
  return r;
}

}  // namespace

TEST(Pipeline, ScenarioGridShape) {
  AnalysisConfig cfg;
  const auto all = scenarios(cfg);
  ASSERT_EQ(all.size(), 36u);
  EXPECT_EQ(all[0].d_threshold, 0.2);
  EXPECT_EQ(all[0].prior, 0.1);
  EXPECT_EQ(all[1].prior, 0.2);
  EXPECT_EQ(all[35].d_threshold, 0.8);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].index, i);
  const auto ref = make_scenario(cfg, 0.5, 0.3, 0.2);
  EXPECT_EQ(all[ref.index], ref);
  EXPECT_EQ(ref.label, "medium x weak-rct x intermediate");
  EXPECT_EQ(make_scenario(cfg, 0.35, 0.3, 0.2).index, SIZE_MAX);
}

TEST(Pipeline, SingleZTestChain) {
  AnalysisConfig cfg;
  cfg.biases = {0.0};
  cfg.priors = {0.5};
  cfg.thresholds = {0.5};
  const auto rows = run_scenario(one_z_test(0.01), cfg, scenarios(cfg)[0]);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].metrics_adjusted.power, 0.807, 0.005);
  EXPECT_NEAR(rows[0].metrics_adjusted.ppv, 0.9878, 0.001);
  EXPECT_EQ(rows[0].p_raw, 0.01);
  EXPECT_EQ(rows[0].p_adjusted, 0.01);
  EXPECT_TRUE(rows[0].metrics_adjusted.significant_adjusted);
}

TEST(Pipeline, EmptyAndCardinality) {
  AnalysisConfig cfg;
  EXPECT_TRUE(run_scenario(Dataset{}, cfg, scenarios(cfg)[0]).empty());
  EXPECT_TRUE(run_grid(Dataset{}, cfg, 4).empty());
  EXPECT_EQ(run_grid(one_z_test(0.2), cfg).size(), 36u);
}

TEST(Pipeline, SkipsTestsWithoutP) {
  auto ds = one_z_test(0.01);
  CodedTest only_d = ds.studies[0].tests[0];
  only_d.test_id = "T2";
  only_d.p_reported.reset();
  only_d.effect_d = 0.4;
  ds.studies[0].tests.push_back(only_d);
  AnalysisConfig cfg;
  std::vector<SkippedTest> skipped;
  const auto rows = run_scenario(ds, cfg, scenarios(cfg)[0], &skipped);
  EXPECT_EQ(rows.size(), 1u);
  ASSERT_EQ(skipped.size(), 1u);
  EXPECT_EQ(skipped[0].test_id, "T2");
  EXPECT_FALSE(skipped[0].reason.empty());
}

TEST(Pipeline, MccAppliedPerStudy) {
  const auto ds = soe::testing::shipped_fixture();
  AnalysisConfig cfg;
  const auto sc = make_scenario(cfg, 0.5, 0.3, 0.2);
  const auto rows = run_scenario(ds, cfg, sc);
  ASSERT_EQ(rows.size(), ds.test_count());
  std::size_t k = 0;
  for (const auto& s : ds.studies) {
    std::vector<double> raw;
    for (std::size_t i = 0; i < s.tests.size(); ++i) raw.push_back(rows[k + i].p_raw);
    const auto adj = adjust_family(raw, MccMethod::Holm);
    for (std::size_t i = 0; i < s.tests.size(); ++i) {
      const auto& r = rows[k + i];
      EXPECT_EQ(r.study_id, s.study_id);
      EXPECT_EQ(r.p_adjusted, adj[i]);
      EXPECT_GE(r.p_adjusted, r.p_raw);
      const auto expect = evaluate(EvidenceInputs::make(r.p_adjusted, r.metrics_adjusted.power, 0.2, 0.3), 0.05);
      EXPECT_EQ(r.metrics_adjusted.ppv, expect.ppv);
      EXPECT_EQ(r.metrics_adjusted.significant_adjusted, r.p_adjusted < 0.05);
      EXPECT_EQ(r.metrics_raw.significant_raw, r.p_raw < 0.05);
    }
    k += s.tests.size();
  }
}

TEST(Pipeline, GridEqualsScenarioUnionAndIsThreadInvariant) {
  const auto ds = soe::testing::shipped_fixture();
  AnalysisConfig cfg;
  const auto serial = run_grid(ds, cfg, 1);
  ASSERT_EQ(serial.size(), 36u * ds.test_count());
  for (unsigned threads : {2u, 4u, 16u}) EXPECT_EQ(run_grid(ds, cfg, threads), serial);
  for (const auto& sc : scenarios(cfg)) EXPECT_EQ(rows_for(serial, sc), run_scenario(ds, cfg, sc));
  for (std::size_t i = 1; i < serial.size(); ++i) {
    const auto& a = serial[i - 1];
    const auto& b = serial[i];
    EXPECT_LT(std::tie(a.study_id, a.test_id, a.scenario.index), std::tie(b.study_id, b.test_id, b.scenario.index));
  }
}

TEST(Pipeline, GridProperties) {
  const auto ds = generate_synthetic(33, 25, 6, 0.5, 0.5);
  AnalysisConfig cfg;
  cfg.biases = {0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0};
  const auto rows = run_grid(ds, cfg, 2);
  // FPR nondecreasing in u for fixed test, threshold and prior, as long as
  // the evidence favours H1 (power > p). Otherwise bias pulls the PPV up
  // toward the prior and the FPR falls to 1 - prior at u = 1.
  std::map<std::tuple<std::string, std::string, double, double>, std::vector<std::pair<double, double>>> paths;
  std::size_t checked = 0, reversed = 0;
  for (const auto& r : rows) {
    if (r.metrics_adjusted.power > r.p_adjusted) {
      paths[{r.study_id, r.test_id, r.scenario.d_threshold, r.scenario.prior}].push_back(
          {r.scenario.bias_u, r.metrics_adjusted.fpr});
    } else if (r.scenario.bias_u == 1.0) {
      ++reversed;
      EXPECT_NEAR(r.metrics_adjusted.fpr, 1 - r.scenario.prior, 1e-12);
    }
  }
  for (auto& [key, path] : paths) {
    std::sort(path.begin(), path.end());
    for (std::size_t i = 1; i < path.size(); ++i, ++checked) EXPECT_GE(path[i].second, path[i - 1].second - 1e-12);
  }
  EXPECT_GT(checked, 0u);
  EXPECT_GT(reversed, 0u);
  for (const auto& sc : scenarios(cfg)) {
    const auto s = summarize(rows_for(rows, sc), sc, cfg);
    EXPECT_LE(s.n_significant_adjusted, s.n_significant_raw);
  }
  for (const auto& r : rows)
    if (r.scenario.bias_u == 0.3 && r.scenario.prior == 0.2 && r.p_adjusted >= 0.001) EXPECT_GT(r.metrics_adjusted.fpr, 0.5);
}

TEST(Summary, EmptyAndMedian) {
  AnalysisConfig cfg;
  const auto sc = scenarios(cfg)[4];
  const std::vector<TestMetricsRow> none{row(sc, "S1", 0.4, 2, false)};
  const auto s0 = summarize(none, sc, cfg);
  EXPECT_EQ(s0.n_tests, 1u);
  EXPECT_EQ(s0.n_significant_adjusted, 0u);
  EXPECT_FALSE(s0.median_lr_adjusted);
  EXPECT_FALSE(s0.rbp_ge_half_adjusted);
  EXPECT_FALSE(s0.expected_adjusted.fraction_true);

  const std::vector<TestMetricsRow> two{row(sc, "S1", 0.9, 4, true, 0.6), row(sc, "S1", 0.5, 6, true), row(sc, "S2", 0.1, 100, false)};
  const auto s = summarize(two, sc, cfg);
  EXPECT_EQ(*s.median_lr_adjusted, 5.0);
  EXPECT_EQ(*s.median_lr_raw, 5.0);
  EXPECT_NEAR(s.expected_adjusted.expected_true, 1.4, 1e-15);
  EXPECT_EQ(*s.rbp_ge_half_adjusted, 0.5);
  const std::vector<TestMetricsRow> mixed{row(sc, "S1", 0.9, 4, true), row(scenarios(cfg)[5], "S1", 0.9, 4, true)};
  EXPECT_THROW(summarize(mixed, sc, cfg), Error);
}

TEST(Summary, StudySummaries) {
  AnalysisConfig cfg;
  const auto sc = scenarios(cfg)[0];
  Dataset ds;
  ds.studies = {{"S1", 2001, 4.0, {}}, {"S2", 2002, 1.5, {}}};
  const std::vector<TestMetricsRow> rows{row(sc, "S1", 0.3, 2, true), row(sc, "S1", 0.7, 9, true), row(sc, "S2", 0.2, 1, false)};
  const auto out = summarize_studies(rows, ds, sc);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].study_id, "S1");
  EXPECT_EQ(out[0].max_ppv, 0.7);
  EXPECT_EQ(out[0].n_tests, 2u);
  EXPECT_EQ(out[0].n_significant_adjusted, 2u);
  EXPECT_EQ(*out[0].median_lr_adjusted, 5.5);
  EXPECT_EQ(out[0].acpa, 4.0);
  EXPECT_FALSE(out[1].median_lr_adjusted);
}

TEST(Heatmap, SingletonAndOrdering) {
  AnalysisConfig cfg;
  const auto all = scenarios(cfg);
  std::vector<TestMetricsRow> rows;
  for (std::size_t k = 0; k < 3; ++k) rows.push_back(row(all[k], "S1", 0.1 * double(k + 1), 2, true));
  auto h = heatmap_max_ppv(rows);
  ASSERT_EQ(h.study_ids.size(), 1u);
  ASSERT_EQ(h.scenarios.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(*h.cells[0][k], 0.1 * double(k + 1));

  rows = {row(all[0], "A", 0.3, 2, true), row(all[0], "A", 0.7, 3, true), row(all[0], "B", 0.9, 2, true),
          row(all[1], "A", 0.2, 2, true)};
  h = heatmap_max_ppv(rows);
  EXPECT_EQ(h.study_ids, (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(*h.cells[1][0], 0.7);
  EXPECT_FALSE(h.cells[0][1]);
  EXPECT_EQ(h.fraction_ge_half[0], 1.0);
  EXPECT_EQ(h.fraction_ge_half[1], 0.0);
}

TEST(Association, Spearman) {
  const std::vector<double> x{1, 2, 3}, y{3, 1, 2}, up{10, 20, 35};
  EXPECT_NEAR(spearman(x, y), -0.5, 1e-15);
  EXPECT_NEAR(spearman(x, up), 1.0, 1e-15);
  const std::vector<double> tx{1, 1, 2, 3}, ty{4, 3, 2, 1};
  // Average ranks (1.5, 1.5, 3, 4) vs (4, 3, 2, 1): Pearson on ranks.
  EXPECT_NEAR(spearman(tx, ty), -4.5 / std::sqrt(4.5 * 5.0), 1e-12);
}

TEST(Association, NeedsThreeStudies) {
  AnalysisConfig cfg;
  const auto sc = scenarios(cfg)[0];
  const std::vector<TestMetricsRow> rows{row(sc, "S1", 0.3, 2, true), row(sc, "S2", 0.3, 2, true)};
  const std::vector<StudySummary> sums{{"S1", 0, 0.3, 1, 1, 1, 2.0, 0.3, 1.0, 2000}, {"S2", 0, 0.3, 1, 1, 1, 2.0, 0.3, 2.0, 2000}};
  try {
    citation_association(sums, rows, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Association, DeterministicAndDetectsDependence) {
  AnalysisConfig cfg;
  const auto sc = scenarios(cfg)[0];
  std::vector<TestMetricsRow> rows;
  std::vector<StudySummary> sums;
  for (int i = 0; i < 12; ++i) {
    const auto id = "S" + std::to_string(10 + i);
    rows.push_back(row(sc, id, 0.5, 2, true, 0.05 * i));
    sums.push_back({id, 0, 0.5, 1, 1, 1, 2.0, 0.05 * i, 1.0 + i * i, 2000});
  }
  const auto a = citation_association(sums, rows, 3, 2000);
  EXPECT_EQ(a.n_studies, 12u);
  EXPECT_NEAR(a.rho, 1.0, 1e-12);
  EXPECT_LT(a.p_perm, 0.01);
  const auto b = citation_association(sums, rows, 3, 2000);
  EXPECT_EQ(a.p_perm, b.p_perm);
}

TEST(Golden, ReferenceScenarioRowsAndSummary) {
  const auto ds = soe::testing::shipped_fixture();
  AnalysisConfig cfg;
  const auto sc = make_scenario(cfg, 0.5, 0.3, 0.2);
  ExportBundle b;
  b.metadata = make_metadata(cfg, ds.provenance);
  b.rows = run_scenario(ds, cfg, sc);
  EXPECT_TRUE(soe::testing::matches_golden("reference_scenario_rows.jsonl", export_results(b, ExportFormat::JsonLines)));
  ExportBundle s;
  s.metadata = b.metadata;
  s.scenario_summaries.push_back(summarize(b.rows, sc, cfg));
  EXPECT_TRUE(soe::testing::matches_golden("reference_scenario_summary.jsonl", export_results(s, ExportFormat::JsonLines)));
}

TEST(Golden, DefaultGridDigest) {
  const auto ds = soe::testing::shipped_fixture();
  AnalysisConfig cfg;
  ExportBundle b;
  b.metadata = make_metadata(cfg, ds.provenance);
  b.rows = run_grid(ds, cfg, 4);
  EXPECT_TRUE(soe::testing::matches_golden_digest("default_grid.sha256", export_results(b, ExportFormat::JsonLines)));
}

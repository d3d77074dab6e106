#include "soe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "soe/effect_power.hpp"
#include "soe/error.hpp"
#include "soe/mcc.hpp"
#include "soe/random.hpp"
#include "soe/text.hpp"

namespace soe {
namespace {

constexpr double kMinP = 1e-300;

std::string preset(double v, std::initializer_list<std::pair<double, const char*>> names, const char* prefix) {
  for (const auto& [value, name] : names) {
    if (v == value) return name;
  }
  return prefix + text::format_double(v);
}

struct Prepared {
  const StudyRecord* study = nullptr;
  const CodedTest* test = nullptr;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};

std::optional<double> usable_p(const CodedTest& t, bool two_sided, std::string& reason) {
  if (t.statistic) {
    try {
      return recompute_p(t, two_sided);
    } catch (const Error& e) {
      reason = e.what();
    }
  }
  if (t.p_reported) return std::max(*t.p_reported, kMinP);
  if (reason.empty()) reason = "no statistic and no reported p-value";
  return std::nullopt;
}

std::vector<Prepared> prepare(const Dataset& ds, const AnalysisConfig& cfg, std::vector<SkippedTest>* skipped) {
  std::vector<Prepared> out;
  for (const auto& study : ds.studies) {
    std::vector<Prepared> family;
    for (const auto& t : study.tests) {
      std::string reason;
      if (auto p = usable_p(t, cfg.two_sided, reason)) {
        family.push_back({&study, &t, *p, *p});
      } else if (skipped) {
        skipped->push_back({t.study_id, t.test_id, reason});
      }
    }
    std::vector<double> ps;
    ps.reserve(family.size());
    for (const auto& f : family) ps.push_back(f.p_raw);
    const auto adjusted = adjust_family(ps, cfg.mcc_method);
    for (std::size_t i = 0; i < family.size(); ++i) family[i].p_adjusted = adjusted[i];
    out.insert(out.end(), family.begin(), family.end());
  }
  std::sort(out.begin(), out.end(), [](const Prepared& a, const Prepared& b) {
    if (a.test->study_id != b.test->study_id) return a.test->study_id < b.test->study_id;
    return a.test->test_id < b.test->test_id;
  });
  return out;
}

struct PowerCell {
  double power = 0.0;
  std::string error;
};

// power[test * thresholds + k]; each slot is written by exactly one worker.
std::vector<PowerCell> compute_powers(const std::vector<Prepared>& tests, const std::vector<double>& thresholds,
                                      const AnalysisConfig& cfg, unsigned threads) {
  const std::size_t total = tests.size() * thresholds.size();
  std::vector<PowerCell> cells(total);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < total; i += step) {
      const auto& t = *tests[i / thresholds.size()].test;
      try {
        const double power =
            power_at_threshold(PowerQuery::for_test(t, thresholds[i % thresholds.size()], cfg.alpha, cfg.two_sided));
        cells[i].power = std::clamp(power, kMinP, 1.0);
      } catch (const Error& e) {
        cells[i].error = e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }
  return cells;
}

EvidenceMetrics metrics_for(double p, double power, const Scenario& sc, const AnalysisConfig& cfg, bool sig_raw,
                            bool sig_adj) {
  auto m = evaluate(EvidenceInputs::make(p, power, sc.prior, sc.bias_u), cfg.fpr_target);
  m.significant_raw = sig_raw;
  m.significant_adjusted = sig_adj;
  return m;
}

std::vector<TestMetricsRow> evaluate_scenarios(const Dataset& ds, const AnalysisConfig& cfg,
                                               const std::vector<Scenario>& scs, unsigned threads,
                                               std::vector<SkippedTest>* skipped) {
  cfg.validate();
  const auto tests = prepare(ds, cfg, skipped);
  std::vector<double> thresholds;
  for (const auto& sc : scs) {
    if (std::find(thresholds.begin(), thresholds.end(), sc.d_threshold) == thresholds.end()) {
      thresholds.push_back(sc.d_threshold);
    }
  }
  const auto powers = compute_powers(tests, thresholds, cfg, threads);

  std::vector<TestMetricsRow> rows;
  rows.reserve(tests.size() * scs.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto& prep = tests[i];
    const PowerCell* failed = nullptr;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      if (!powers[i * thresholds.size() + k].error.empty()) failed = &powers[i * thresholds.size() + k];
    }
    if (failed) {
      if (skipped) skipped->push_back({prep.test->study_id, prep.test->test_id, failed->error});
      continue;
    }
    const bool sig_raw = prep.p_raw < cfg.alpha;
    const bool sig_adj = prep.p_adjusted < cfg.alpha;
    for (const auto& sc : scs) {
      const auto k = static_cast<std::size_t>(
          std::find(thresholds.begin(), thresholds.end(), sc.d_threshold) - thresholds.begin());
      const double power = powers[i * thresholds.size() + k].power;
      TestMetricsRow row;
      row.study_id = prep.test->study_id;
      row.test_id = prep.test->test_id;
      row.family = prep.test->family;
      row.scenario = sc;
      row.n_total = prep.test->n_total;
      row.p_raw = prep.p_raw;
      row.p_adjusted = prep.p_adjusted;
      row.metrics_raw = metrics_for(prep.p_raw, power, sc, cfg, sig_raw, sig_adj);
      row.metrics_adjusted = metrics_for(prep.p_adjusted, power, sc, cfg, sig_raw, sig_adj);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  return a.d_threshold == b.d_threshold && a.bias_u == b.bias_u && a.prior == b.prior;
}

}  // namespace

std::string scenario_label(double d_threshold, double bias_u, double prior) {
  return preset(d_threshold, {{0.2, "small"}, {0.3, "small"}, {0.5, "medium"}, {0.8, "large"}}, "d") + " x " +
         preset(bias_u, {{0.0, "minimum-bias"}, {0.2, "well-run-rct"}, {0.3, "weak-rct"}, {0.8, "biased-study"}},
                "u") +
         " x " + preset(prior, {{0.1, "exploratory"}, {0.2, "intermediate"}, {0.5, "confirmatory"}}, "prior");
}

std::vector<Scenario> scenarios(const AnalysisConfig& cfg) {
  std::vector<Scenario> out;
  for (double d : cfg.thresholds) {
    for (double u : cfg.biases) {
      for (double p : cfg.priors) {
        out.push_back({d, u, p, out.size(), scenario_label(d, u, p)});
      }
    }
  }
  return out;
}

Scenario make_scenario(const AnalysisConfig& cfg, double d_threshold, double bias_u, double prior) {
  for (const auto& sc : scenarios(cfg)) {
    if (sc.d_threshold == d_threshold && sc.bias_u == bias_u && sc.prior == prior) return sc;
  }
  return {d_threshold, bias_u, prior, std::numeric_limits<std::size_t>::max(),
          scenario_label(d_threshold, bias_u, prior)};
}

std::vector<TestMetricsRow> run_scenario(const Dataset& ds, const AnalysisConfig& cfg, const Scenario& sc,
                                         std::vector<SkippedTest>* skipped) {
  return evaluate_scenarios(ds, cfg, {sc}, 1, skipped);
}

std::vector<TestMetricsRow> run_grid(const Dataset& ds, const AnalysisConfig& cfg, unsigned threads,
                                     std::vector<SkippedTest>* skipped) {
  return evaluate_scenarios(ds, cfg, scenarios(cfg), threads, skipped);
}

std::vector<TestMetricsRow> rows_for(std::span<const TestMetricsRow> rows, const Scenario& sc) {
  std::vector<TestMetricsRow> out;
  for (const auto& r : rows) {
    if (same_scenario(r.scenario, sc)) out.push_back(r);
  }
  return out;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

ScenarioSummary summarize(std::span<const TestMetricsRow> rows, const Scenario& sc, const AnalysisConfig& cfg) {
  (void)cfg;  // significance flags were fixed against cfg.alpha when the rows were built
  ScenarioSummary s;
  s.scenario = sc;
  std::vector<double> lr_raw, lr_adj;
  std::vector<EvidenceMetrics> sig_raw, sig_adj;
  for (const auto& r : rows) {
    if (!same_scenario(r.scenario, sc)) throw Error(ErrorKind::Parameter, "summarize: row from another scenario");
    ++s.n_tests;
    if (r.metrics_raw.significant_raw) {
      sig_raw.push_back(r.metrics_raw);
      lr_raw.push_back(r.metrics_raw.lr);
    }
    if (r.metrics_adjusted.significant_adjusted) {
      sig_adj.push_back(r.metrics_adjusted);
      lr_adj.push_back(r.metrics_adjusted.lr);
    }
  }
  s.n_significant_raw = sig_raw.size();
  s.n_significant_adjusted = sig_adj.size();
  s.median_lr_raw = median(lr_raw);
  s.median_lr_adjusted = median(lr_adj);
  s.expected_raw = expected_true_positives(sig_raw);
  s.expected_adjusted = expected_true_positives(sig_adj);
  auto rbp_fraction = [](const std::vector<EvidenceMetrics>& ms) -> std::optional<double> {
    if (ms.empty()) return std::nullopt;
    const auto hits = std::count_if(ms.begin(), ms.end(), [](const EvidenceMetrics& m) { return m.rbp >= 0.5; });
    return static_cast<double>(hits) / static_cast<double>(ms.size());
  };
  s.rbp_ge_half_raw = rbp_fraction(sig_raw);
  s.rbp_ge_half_adjusted = rbp_fraction(sig_adj);
  return s;
}

std::vector<StudySummary> summarize_studies(std::span<const TestMetricsRow> rows, const Dataset& ds,
                                            const Scenario& sc) {
  std::vector<StudySummary> out;
  for (const auto& study : ds.studies) {
    StudySummary s;
    s.study_id = study.study_id;
    s.scenario_index = sc.index;
    s.acpa = study.acpa;
    s.year = study.year;
    std::vector<double> lr, rbp;
    for (const auto& r : rows) {
      if (r.study_id != study.study_id || !same_scenario(r.scenario, sc)) continue;
      ++s.n_tests;
      s.max_ppv = std::max(s.max_ppv, r.metrics_adjusted.ppv);
      if (r.metrics_raw.significant_raw) ++s.n_significant_raw;
      if (r.metrics_adjusted.significant_adjusted) {
        ++s.n_significant_adjusted;
        lr.push_back(r.metrics_adjusted.lr);
        rbp.push_back(r.metrics_adjusted.rbp);
      }
    }
    if (s.n_tests == 0) continue;
    s.median_lr_adjusted = median(lr);
    s.median_rbp_adjusted = median(rbp);
    out.push_back(std::move(s));
  }
  return out;
}

Heatmap heatmap_max_ppv(std::span<const TestMetricsRow> rows) {
  Heatmap h;
  std::map<std::size_t, Scenario> by_index;
  std::map<std::string, std::map<std::size_t, double>> cell;
  for (const auto& r : rows) {
    by_index.emplace(r.scenario.index, r.scenario);
    auto [it, inserted] = cell[r.study_id].emplace(r.scenario.index, r.metrics_adjusted.ppv);
    if (!inserted) it->second = std::max(it->second, r.metrics_adjusted.ppv);
  }
  for (const auto& [index, sc] : by_index) h.scenarios.push_back(sc);

  std::vector<std::pair<std::string, double>> order;
  for (const auto& [study, values] : cell) {
    double best = 0.0;
    for (const auto& [index, v] : values) best = std::max(best, v);
    order.emplace_back(study, best);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::size_t> hits(h.scenarios.size(), 0), present(h.scenarios.size(), 0);
  for (const auto& [study, best] : order) {
    h.study_ids.push_back(study);
    h.overall_max.push_back(best);
    std::vector<std::optional<double>> line;
    for (std::size_t k = 0; k < h.scenarios.size(); ++k) {
      const auto& values = cell[study];
      auto it = values.find(h.scenarios[k].index);
      if (it == values.end()) {
        line.emplace_back();
        continue;
      }
      line.emplace_back(it->second);
      ++present[k];
      if (it->second >= 0.5) ++hits[k];
    }
    h.cells.push_back(std::move(line));
  }
  for (std::size_t k = 0; k < h.scenarios.size(); ++k) {
    h.fraction_ge_half.push_back(present[k] ? static_cast<double>(hits[k]) / static_cast<double>(present[k]) : 0.0);
  }
  return h;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson_centered(std::span<const double> x, std::span<const double> y, double norm) {
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += x[i] * y[i];
  return sxy / norm;
}

void center(std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

double sum_squares(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InsufficientData, "spearman needs paired samples");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  center(rx);
  center(ry);
  const double norm = std::sqrt(sum_squares(rx) * sum_squares(ry));
  if (norm == 0.0) throw Error(ErrorKind::InsufficientData, "spearman undefined for constant ranks");
  return pearson_centered(rx, ry, norm);
}

Association citation_association(std::span<const StudySummary> summaries, std::span<const TestMetricsRow> rows,
                                 std::uint64_t seed, std::size_t permutations) {
  std::map<std::string, std::vector<double>> rbp_by_study;
  for (const auto& r : rows) {
    if (r.metrics_adjusted.significant_adjusted) rbp_by_study[r.study_id].push_back(r.metrics_adjusted.rbp);
  }
  std::vector<double> strength, acpa;
  for (const auto& s : summaries) {
    auto it = rbp_by_study.find(s.study_id);
    if (it == rbp_by_study.end()) continue;
    strength.push_back(*median(it->second));
    acpa.push_back(s.acpa);
  }
  if (strength.size() < 3) {
    throw Error(ErrorKind::InsufficientData, "citation association needs >= 3 studies with significant reports");
  }

  Association a;
  a.n_studies = strength.size();
  a.rho = spearman(strength, acpa);

  auto rx = average_ranks(strength);
  auto ry = average_ranks(acpa);
  center(rx);
  center(ry);
  const double norm = std::sqrt(sum_squares(rx) * sum_squares(ry));
  Rng rng(seed);
  std::size_t extreme = 0;
  const double observed = std::fabs(a.rho) - 1e-12;
  for (std::size_t b = 0; b < permutations; ++b) {
    rng.shuffle(ry.begin(), ry.end());
    if (std::fabs(pearson_centered(rx, ry, norm)) >= observed) ++extreme;
  }
  a.p_perm = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
  return a;
}

}  // namespace soe

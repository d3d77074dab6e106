#include "json_codec.hpp"

#include "soe/config.hpp"
#include "soe/error.hpp"
#include "soe/report.hpp"
#include "soe/text.hpp"

namespace soe::codec {

void schema(const std::string& what) { throw Error(ErrorKind::Schema, "export: " + what); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json scenario_json(const Scenario& sc) {
  json j;
  j["index"] = sc.index == kOffGrid ? json(nullptr) : json(sc.index);
  j["d_threshold"] = sc.d_threshold;
  j["bias_u"] = sc.bias_u;
  j["prior"] = sc.prior;
  j["label"] = sc.label;
  return j;
}

Scenario scenario_from(const json& j) {
  Scenario sc;
  sc.index = j.at("index").is_null() ? kOffGrid : j.at("index").get<std::size_t>();
  sc.d_threshold = j.at("d_threshold").get<double>();
  sc.bias_u = j.at("bias_u").get<double>();
  sc.prior = j.at("prior").get<double>();
  sc.label = j.at("label").get<std::string>();
  return sc;
}

json metrics_json(const EvidenceMetrics& m) {
  json j;
  j["power"] = m.power;
  j["ppv"] = m.ppv;
  j["fpr"] = m.fpr;
  j["lr"] = m.lr;
  j["rbp"] = m.rbp;
  j["significant_raw"] = m.significant_raw;
  j["significant_adjusted"] = m.significant_adjusted;
  return j;
}

EvidenceMetrics metrics_from(const json& j) {
  EvidenceMetrics m;
  m.power = j.at("power").get<double>();
  m.ppv = j.at("ppv").get<double>();
  m.fpr = j.at("fpr").get<double>();
  m.lr = j.at("lr").get<double>();
  m.rbp = j.at("rbp").get<double>();
  m.significant_raw = j.at("significant_raw").get<bool>();
  m.significant_adjusted = j.at("significant_adjusted").get<bool>();
  return m;
}

json expected_json(const ExpectedPositives& e) {
  json j;
  j["expected_true"] = e.expected_true;
  j["expected_false"] = e.expected_false;
  j["fraction_true"] = opt(e.fraction_true);
  return j;
}

ExpectedPositives expected_from(const json& j) {
  return {j.at("expected_true").get<double>(), j.at("expected_false").get<double>(), opt_from(j.at("fraction_true"))};
}

json metadata_object(const ExportMetadata& m) {
  json j;
  j["record"] = "metadata";
  j["schema_version"] = m.schema_version;
  j["config"] = json::parse(config_to_json(m.config));
  j["config_digest"] = m.config_digest;
  j["mcc_method"] = std::string(mcc_tag(m.config.mcc_method));
  j["provenance"] = m.provenance;
  json notes;
  notes["formula_variant"] =
      "bias-adjusted PPV = ((1-b)R + u b R) / (R + a - b R + u - u a + u b R), b = 1 - power, a = observed "
      "(or MCC-adjusted) p, R = prior odds";
  notes["likelihood_ratio"] = "p-less-than reading: LR = power / p";
  notes["p_clamp"] = "p-values are clamped to >= 1e-300 so LR stays finite";
  notes["mcc"] = "family = all tests of one study; comparisons against published figures are method-sensitive";
  notes["smoothing"] = "loess-like: single-pass local-linear tricube smoother, span " +
                       text::format_double(m.config.smooth_span);
  notes["association"] =
      "Spearman rank correlation of per-study median adjusted RBP vs ACPA with a permutation test, in place of a "
      "hierarchical linear model";
  j["notes"] = notes;
  json skipped = json::array();
  for (const auto& s : m.skipped) skipped.push_back({{"study_id", s.study_id}, {"test_id", s.test_id}, {"reason", s.reason}});
  j["skipped"] = skipped;
  return j;
}

ExportMetadata metadata_from(const json& j) {
  ExportMetadata m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kSchemaVersion) schema("unsupported schema_version " + std::to_string(m.schema_version));
  m.config = config_from_json(j.at("config").dump());
  m.config_digest = j.at("config_digest").get<std::string>();
  m.provenance = j.at("provenance").get<std::string>();
  for (const auto& s : j.at("skipped")) {
    m.skipped.push_back({s.at("study_id").get<std::string>(), s.at("test_id").get<std::string>(),
                         s.at("reason").get<std::string>()});
  }
  return m;
}

json row_json(const TestMetricsRow& r) {
  json j;
  j["record"] = "test";
  j["study_id"] = r.study_id;
  j["test_id"] = r.test_id;
  j["family"] = std::string(family_tag(r.family));
  j["scenario"] = scenario_json(r.scenario);
  j["n_total"] = r.n_total;
  j["p_raw"] = r.p_raw;
  j["p_adjusted"] = r.p_adjusted;
  j["metrics_raw"] = metrics_json(r.metrics_raw);
  j["metrics_adjusted"] = metrics_json(r.metrics_adjusted);
  return j;
}

TestFamily family_from(const std::string& tag) {
  auto f = parse_family_tag(tag);
  if (!f) schema("unknown family '" + tag + "'");
  return *f;
}

TestMetricsRow row_from(const json& j) {
  TestMetricsRow r;
  r.study_id = j.at("study_id").get<std::string>();
  r.test_id = j.at("test_id").get<std::string>();
  r.family = family_from(j.at("family").get<std::string>());
  r.scenario = scenario_from(j.at("scenario"));
  r.n_total = j.at("n_total").get<std::int64_t>();
  r.p_raw = j.at("p_raw").get<double>();
  r.p_adjusted = j.at("p_adjusted").get<double>();
  r.metrics_raw = metrics_from(j.at("metrics_raw"));
  r.metrics_adjusted = metrics_from(j.at("metrics_adjusted"));
  return r;
}

json scenario_summary_json(const ScenarioSummary& s) {
  json j;
  j["record"] = "scenario_summary";
  j["scenario"] = scenario_json(s.scenario);
  j["n_tests"] = s.n_tests;
  j["n_significant_raw"] = s.n_significant_raw;
  j["n_significant_adjusted"] = s.n_significant_adjusted;
  j["median_lr_raw"] = opt(s.median_lr_raw);
  j["median_lr_adjusted"] = opt(s.median_lr_adjusted);
  j["expected_raw"] = expected_json(s.expected_raw);
  j["expected_adjusted"] = expected_json(s.expected_adjusted);
  j["rbp_ge_half_raw"] = opt(s.rbp_ge_half_raw);
  j["rbp_ge_half_adjusted"] = opt(s.rbp_ge_half_adjusted);
  return j;
}

ScenarioSummary scenario_summary_from(const json& j) {
  ScenarioSummary s;
  s.scenario = scenario_from(j.at("scenario"));
  s.n_tests = j.at("n_tests").get<std::size_t>();
  s.n_significant_raw = j.at("n_significant_raw").get<std::size_t>();
  s.n_significant_adjusted = j.at("n_significant_adjusted").get<std::size_t>();
  s.median_lr_raw = opt_from(j.at("median_lr_raw"));
  s.median_lr_adjusted = opt_from(j.at("median_lr_adjusted"));
  s.expected_raw = expected_from(j.at("expected_raw"));
  s.expected_adjusted = expected_from(j.at("expected_adjusted"));
  s.rbp_ge_half_raw = opt_from(j.at("rbp_ge_half_raw"));
  s.rbp_ge_half_adjusted = opt_from(j.at("rbp_ge_half_adjusted"));
  return s;
}

json study_summary_json(const StudySummary& s) {
  json j;
  j["record"] = "study_summary";
  j["study_id"] = s.study_id;
  j["scenario_index"] = s.scenario_index == kOffGrid ? json(nullptr) : json(s.scenario_index);
  j["max_ppv"] = s.max_ppv;
  j["n_tests"] = s.n_tests;
  j["n_significant_raw"] = s.n_significant_raw;
  j["n_significant_adjusted"] = s.n_significant_adjusted;
  j["median_lr_adjusted"] = opt(s.median_lr_adjusted);
  j["median_rbp_adjusted"] = opt(s.median_rbp_adjusted);
  j["acpa"] = s.acpa;
  j["year"] = s.year;
  return j;
}

StudySummary study_summary_from(const json& j) {
  StudySummary s;
  s.study_id = j.at("study_id").get<std::string>();
  s.scenario_index = j.at("scenario_index").is_null() ? kOffGrid : j.at("scenario_index").get<std::size_t>();
  s.max_ppv = j.at("max_ppv").get<double>();
  s.n_tests = j.at("n_tests").get<std::size_t>();
  s.n_significant_raw = j.at("n_significant_raw").get<std::size_t>();
  s.n_significant_adjusted = j.at("n_significant_adjusted").get<std::size_t>();
  s.median_lr_adjusted = opt_from(j.at("median_lr_adjusted"));
  s.median_rbp_adjusted = opt_from(j.at("median_rbp_adjusted"));
  s.acpa = j.at("acpa").get<double>();
  s.year = j.at("year").get<int>();
  return s;
}

}  // namespace soe::codec

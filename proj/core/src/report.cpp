#include "soe/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "json_codec.hpp"
#include "soe/config.hpp"
#include "soe/error.hpp"
#include "soe/text.hpp"

namespace soe {
namespace {

using json = nlohmann::ordered_json;
using namespace codec;

// ---- smoothing -------------------------------------------------------------

double local_linear(const std::vector<const SeriesPoint*>& pts, double x0, std::size_t q) {
  std::vector<double> dist;
  dist.reserve(pts.size());
  for (const auto* p : pts) dist.push_back(std::fabs(p->x - x0));
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  double h = sorted[q - 1];
  for (;;) {
    double sw = 0, swx = 0, swy = 0;
    std::vector<double> w(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (dist[i] < h) {
        const double r = dist[i] / h;
        const double t = 1.0 - r * r * r;
        w[i] = t * t * t;
      } else if (h == 0.0 && dist[i] == 0.0) {
        w[i] = 1.0;
      }
      sw += w[i];
      swx += w[i] * pts[i]->x;
      swy += w[i] * pts[i]->y;
    }
    if (sw > 0.0) {
      const double xbar = swx / sw;
      const double ybar = swy / sw;
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dx = pts[i]->x - xbar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (pts[i]->y - ybar);
      }
      if (sxx > 0.0) return ybar + (sxy / sxx) * (x0 - xbar);
    }
    // Widen to the next larger neighbour distance, or past the farthest.
    auto next = std::upper_bound(sorted.begin(), sorted.end(), h);
    h = next != sorted.end() ? *next : 1.1 * sorted.back();
  }
}

// ---- canonical order -------------------------------------------------------

ExportBundle canonical(const ExportBundle& in) {
  ExportBundle b = in;
  std::stable_sort(b.rows.begin(), b.rows.end(), [](const TestMetricsRow& x, const TestMetricsRow& y) {
    return std::tie(x.study_id, x.test_id, x.scenario.index, x.scenario.d_threshold, x.scenario.bias_u,
                    x.scenario.prior) < std::tie(y.study_id, y.test_id, y.scenario.index, y.scenario.d_threshold,
                                                 y.scenario.bias_u, y.scenario.prior);
  });
  std::stable_sort(b.scenario_summaries.begin(), b.scenario_summaries.end(),
                   [](const ScenarioSummary& x, const ScenarioSummary& y) {
                     return std::tie(x.scenario.index, x.scenario.d_threshold, x.scenario.bias_u, x.scenario.prior) <
                            std::tie(y.scenario.index, y.scenario.d_threshold, y.scenario.bias_u, y.scenario.prior);
                   });
  std::stable_sort(b.study_summaries.begin(), b.study_summaries.end(),
                   [](const StudySummary& x, const StudySummary& y) {
                     return std::tie(x.scenario_index, x.study_id) < std::tie(y.scenario_index, y.study_id);
                   });
  if (!b.smoothed.empty() && b.smoothed.size() != b.series.size()) schema("smoothed series length mismatch");
  std::vector<std::size_t> order(b.series.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::tie(b.series[i].group, b.series[i].x, b.series[i].y) <
           std::tie(b.series[j].group, b.series[j].x, b.series[j].y);
  });
  std::vector<SeriesPoint> series, smoothed;
  for (auto i : order) {
    series.push_back(in.series[i]);
    if (!b.smoothed.empty()) smoothed.push_back(in.smoothed[i]);
  }
  b.series = std::move(series);
  b.smoothed = std::move(smoothed);
  if (b.heatmap && b.heatmap->scenarios.empty()) b.heatmap.reset();
  return b;
}

// ---- JSON lines ------------------------------------------------------------

std::string export_jsonl(const ExportBundle& b) {
  std::string out = metadata_object(b.metadata).dump() + "\n";
  for (const auto& r : b.rows) out += row_json(r).dump() + "\n";
  for (const auto& s : b.scenario_summaries) out += scenario_summary_json(s).dump() + "\n";
  for (const auto& s : b.study_summaries) out += study_summary_json(s).dump() + "\n";
  if (b.heatmap) {
    const auto& h = *b.heatmap;
    for (std::size_t k = 0; k < h.scenarios.size(); ++k) {
      json j;
      j["record"] = "heatmap_scenario";
      j["scenario"] = scenario_json(h.scenarios[k]);
      j["fraction_ge_half"] = h.fraction_ge_half[k];
      out += j.dump() + "\n";
    }
    for (std::size_t i = 0; i < h.study_ids.size(); ++i) {
      json j;
      j["record"] = "heatmap_row";
      j["study_id"] = h.study_ids[i];
      j["overall_max"] = h.overall_max[i];
      json cells = json::array();
      for (const auto& c : h.cells[i]) cells.push_back(opt(c));
      j["cells"] = cells;
      out += j.dump() + "\n";
    }
  }
  for (std::size_t i = 0; i < b.series.size(); ++i) {
    json j;
    j["record"] = "series";
    j["group"] = b.series[i].group;
    j["x"] = b.series[i].x;
    j["y"] = b.series[i].y;
    j["y_smooth"] = b.smoothed.empty() ? json(nullptr) : json(b.smoothed[i].y);
    out += j.dump() + "\n";
  }
  return out;
}

ExportBundle parse_jsonl(std::string_view bytes) {
  ExportBundle b;
  bool have_meta = false;
  bool any_smooth = false;
  std::istringstream in{std::string(bytes)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      schema(std::string("bad JSON line: ") + e.what());
    }
    const auto record = j.value("record", std::string{});
    try {
      if (record == "metadata") {
        b.metadata = metadata_from(j);
        have_meta = true;
      } else if (record == "test") {
        b.rows.push_back(row_from(j));
      } else if (record == "scenario_summary") {
        b.scenario_summaries.push_back(scenario_summary_from(j));
      } else if (record == "study_summary") {
        b.study_summaries.push_back(study_summary_from(j));
      } else if (record == "heatmap_scenario") {
        if (!b.heatmap) b.heatmap.emplace();
        b.heatmap->scenarios.push_back(scenario_from(j.at("scenario")));
        b.heatmap->fraction_ge_half.push_back(j.at("fraction_ge_half").get<double>());
      } else if (record == "heatmap_row") {
        if (!b.heatmap) schema("heatmap_row before heatmap_scenario");
        b.heatmap->study_ids.push_back(j.at("study_id").get<std::string>());
        b.heatmap->overall_max.push_back(j.at("overall_max").get<double>());
        std::vector<std::optional<double>> cells;
        for (const auto& c : j.at("cells")) cells.push_back(opt_from(c));
        b.heatmap->cells.push_back(std::move(cells));
      } else if (record == "series") {
        SeriesPoint p{j.at("x").get<double>(), j.at("y").get<double>(), j.at("group").get<std::string>()};
        b.series.push_back(p);
        if (!j.at("y_smooth").is_null()) {
          any_smooth = true;
          p.y = j.at("y_smooth").get<double>();
        }
        b.smoothed.push_back(p);
      } else {
        schema("unknown record type '" + record + "'");
      }
    } catch (const json::exception& e) {
      schema(std::string("malformed ") + record + " record: " + e.what());
    }
  }
  if (!have_meta) schema("missing metadata record");
  if (!any_smooth) b.smoothed.clear();
  return b;
}

// ---- CSV -------------------------------------------------------------------

const char* const kRowsHeader =
    "study_id,test_id,family,n_total,scenario_index,d_threshold,bias_u,prior,scenario_label,p_raw,p_adjusted,power,"
    "significant_raw,significant_adjusted,ppv_raw,fpr_raw,lr_raw,rbp_raw,ppv_adjusted,fpr_adjusted,lr_adjusted,"
    "rbp_adjusted";
const char* const kScenarioHeader =
    "scenario_index,d_threshold,bias_u,prior,scenario_label,n_tests,n_significant_raw,n_significant_adjusted,"
    "median_lr_raw,median_lr_adjusted,expected_true_raw,expected_false_raw,fraction_true_raw,expected_true_adjusted,"
    "expected_false_adjusted,fraction_true_adjusted,rbp_ge_half_raw,rbp_ge_half_adjusted";
const char* const kStudyHeader =
    "study_id,scenario_index,max_ppv,n_tests,n_significant_raw,n_significant_adjusted,median_lr_adjusted,"
    "median_rbp_adjusted,acpa,year";
const char* const kHeatScenarioHeader = "scenario_index,d_threshold,bias_u,prior,scenario_label,fraction_ge_half";
const char* const kSeriesHeader = "group,x,y,y_smooth";

std::string num(double v) { return text::format_double(v); }
std::string num(const std::optional<double>& v) { return v ? text::format_double(*v) : "NA"; }
std::string index_field(std::size_t i) { return i == kOffGrid ? "NA" : std::to_string(i); }
std::string flag(bool b) { return b ? "true" : "false"; }

std::string scenario_fields(const Scenario& sc) {
  return index_field(sc.index) + "," + num(sc.d_threshold) + "," + num(sc.bias_u) + "," + num(sc.prior) + "," +
         text::csv_field(sc.label);
}

std::string heat_header(std::size_t k) {
  std::string h = "study_id,overall_max";
  for (std::size_t i = 0; i < k; ++i) h += ",cell_" + std::to_string(i);
  return h;
}

std::string export_csv(const ExportBundle& b) {
  std::string out = "# soe export\n# metadata: " + metadata_object(b.metadata).dump() + "\n";
  out += "[tests]\n" + std::string(kRowsHeader) + "\n";
  for (const auto& r : b.rows) {
    out += text::csv_field(r.study_id) + "," + text::csv_field(r.test_id) + "," + std::string(family_tag(r.family)) +
           "," + std::to_string(r.n_total) + "," + scenario_fields(r.scenario) + "," + num(r.p_raw) + "," +
           num(r.p_adjusted) + "," + num(r.metrics_raw.power) + "," + flag(r.metrics_raw.significant_raw) + "," +
           flag(r.metrics_raw.significant_adjusted) + "," + num(r.metrics_raw.ppv) + "," + num(r.metrics_raw.fpr) +
           "," + num(r.metrics_raw.lr) + "," + num(r.metrics_raw.rbp) + "," + num(r.metrics_adjusted.ppv) + "," +
           num(r.metrics_adjusted.fpr) + "," + num(r.metrics_adjusted.lr) + "," + num(r.metrics_adjusted.rbp) + "\n";
  }
  out += "[scenario_summaries]\n" + std::string(kScenarioHeader) + "\n";
  for (const auto& s : b.scenario_summaries) {
    out += scenario_fields(s.scenario) + "," + std::to_string(s.n_tests) + "," + std::to_string(s.n_significant_raw) +
           "," + std::to_string(s.n_significant_adjusted) + "," + num(s.median_lr_raw) + "," +
           num(s.median_lr_adjusted) + "," + num(s.expected_raw.expected_true) + "," +
           num(s.expected_raw.expected_false) + "," + num(s.expected_raw.fraction_true) + "," +
           num(s.expected_adjusted.expected_true) + "," + num(s.expected_adjusted.expected_false) + "," +
           num(s.expected_adjusted.fraction_true) + "," + num(s.rbp_ge_half_raw) + "," +
           num(s.rbp_ge_half_adjusted) + "\n";
  }
  out += "[study_summaries]\n" + std::string(kStudyHeader) + "\n";
  for (const auto& s : b.study_summaries) {
    out += text::csv_field(s.study_id) + "," + index_field(s.scenario_index) + "," + num(s.max_ppv) + "," +
           std::to_string(s.n_tests) + "," + std::to_string(s.n_significant_raw) + "," +
           std::to_string(s.n_significant_adjusted) + "," + num(s.median_lr_adjusted) + "," +
           num(s.median_rbp_adjusted) + "," + num(s.acpa) + "," + std::to_string(s.year) + "\n";
  }
  out += "[heatmap_scenarios]\n" + std::string(kHeatScenarioHeader) + "\n";
  const std::size_t k = b.heatmap ? b.heatmap->scenarios.size() : 0;
  for (std::size_t i = 0; i < k; ++i) {
    out += scenario_fields(b.heatmap->scenarios[i]) + "," + num(b.heatmap->fraction_ge_half[i]) + "\n";
  }
  out += "[heatmap]\n" + heat_header(k) + "\n";
  if (b.heatmap) {
    const auto& h = *b.heatmap;
    for (std::size_t i = 0; i < h.study_ids.size(); ++i) {
      out += text::csv_field(h.study_ids[i]) + "," + num(h.overall_max[i]);
      for (const auto& c : h.cells[i]) out += "," + num(c);
      out += "\n";
    }
  }
  out += "[series]\n" + std::string(kSeriesHeader) + "\n";
  for (std::size_t i = 0; i < b.series.size(); ++i) {
    out += text::csv_field(b.series[i].group) + "," + num(b.series[i].x) + "," + num(b.series[i].y) + "," +
           (b.smoothed.empty() ? std::string("NA") : num(b.smoothed[i].y)) + "\n";
  }
  return out;
}

double field_double(const std::string& s) {
  auto v = text::parse_double(s);
  if (!v) schema("bad number '" + s + "'");
  return *v;
}

std::optional<double> field_opt(const std::string& s) {
  if (s == "NA") return std::nullopt;
  return field_double(s);
}

std::size_t field_size(const std::string& s) {
  if (s == "NA") return kOffGrid;
  auto v = text::parse_int(s);
  if (!v || *v < 0) schema("bad count '" + s + "'");
  return static_cast<std::size_t>(*v);
}

bool field_flag(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  schema("bad flag '" + s + "'");
}

Scenario scenario_at(const std::vector<std::string>& f, std::size_t at) {
  return {field_double(f[at + 1]), field_double(f[at + 2]), field_double(f[at + 3]), field_size(f[at]), f[at + 4]};
}

ExportBundle parse_csv(std::string_view bytes) {
  ExportBundle b;
  std::istringstream in{std::string(bytes)};
  std::string line;
  if (!std::getline(in, line) || line != "# soe export") schema("missing CSV export banner");
  if (!std::getline(in, line) || line.rfind("# metadata: ", 0) != 0) schema("missing metadata line");
  try {
    b.metadata = metadata_from(json::parse(line.substr(12)));
  } catch (const json::exception& e) {
    schema(std::string("bad metadata: ") + e.what());
  }

  std::string section;
  bool expect_header = false;
  bool any_smooth = false;
  std::size_t heat_k = 0;
  auto need = [](const std::vector<std::string>& f, std::size_t n) {
    if (f.size() != n) schema("expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      expect_header = true;
      continue;
    }
    if (expect_header) {
      expect_header = false;
      const std::string expected = section == "tests"              ? kRowsHeader
                                   : section == "scenario_summaries" ? kScenarioHeader
                                   : section == "study_summaries"    ? kStudyHeader
                                   : section == "heatmap_scenarios"  ? kHeatScenarioHeader
                                   : section == "heatmap"            ? heat_header(heat_k)
                                   : section == "series"             ? kSeriesHeader
                                                                     : "";
      if (expected.empty()) schema("unknown section [" + section + "]");
      if (line != expected) schema("unexpected header in [" + section + "]");
      continue;
    }
    const auto f = text::split_csv(line);
    if (section == "tests") {
      need(f, 22);
      TestMetricsRow r;
      r.study_id = f[0];
      r.test_id = f[1];
      r.family = family_from(f[2]);
      r.n_total = static_cast<std::int64_t>(field_size(f[3]));
      r.scenario = scenario_at(f, 4);
      r.p_raw = field_double(f[9]);
      r.p_adjusted = field_double(f[10]);
      const double power = field_double(f[11]);
      const bool sig_raw = field_flag(f[12]);
      const bool sig_adj = field_flag(f[13]);
      r.metrics_raw = {power, field_double(f[14]), field_double(f[15]), field_double(f[16]), field_double(f[17]),
                       sig_raw, sig_adj};
      r.metrics_adjusted = {power, field_double(f[18]), field_double(f[19]), field_double(f[20]),
                            field_double(f[21]), sig_raw, sig_adj};
      b.rows.push_back(std::move(r));
    } else if (section == "scenario_summaries") {
      need(f, 18);
      ScenarioSummary s;
      s.scenario = scenario_at(f, 0);
      s.n_tests = field_size(f[5]);
      s.n_significant_raw = field_size(f[6]);
      s.n_significant_adjusted = field_size(f[7]);
      s.median_lr_raw = field_opt(f[8]);
      s.median_lr_adjusted = field_opt(f[9]);
      s.expected_raw = {field_double(f[10]), field_double(f[11]), field_opt(f[12])};
      s.expected_adjusted = {field_double(f[13]), field_double(f[14]), field_opt(f[15])};
      s.rbp_ge_half_raw = field_opt(f[16]);
      s.rbp_ge_half_adjusted = field_opt(f[17]);
      b.scenario_summaries.push_back(std::move(s));
    } else if (section == "study_summaries") {
      need(f, 10);
      StudySummary s;
      s.study_id = f[0];
      s.scenario_index = field_size(f[1]);
      s.max_ppv = field_double(f[2]);
      s.n_tests = field_size(f[3]);
      s.n_significant_raw = field_size(f[4]);
      s.n_significant_adjusted = field_size(f[5]);
      s.median_lr_adjusted = field_opt(f[6]);
      s.median_rbp_adjusted = field_opt(f[7]);
      s.acpa = field_double(f[8]);
      s.year = static_cast<int>(field_size(f[9]));
      b.study_summaries.push_back(std::move(s));
    } else if (section == "heatmap_scenarios") {
      need(f, 6);
      if (!b.heatmap) b.heatmap.emplace();
      b.heatmap->scenarios.push_back(scenario_at(f, 0));
      b.heatmap->fraction_ge_half.push_back(field_double(f[5]));
      heat_k = b.heatmap->scenarios.size();
    } else if (section == "heatmap") {
      need(f, 2 + heat_k);
      if (!b.heatmap) schema("heatmap rows without scenarios");
      b.heatmap->study_ids.push_back(f[0]);
      b.heatmap->overall_max.push_back(field_double(f[1]));
      std::vector<std::optional<double>> cells;
      for (std::size_t i = 0; i < heat_k; ++i) cells.push_back(field_opt(f[2 + i]));
      b.heatmap->cells.push_back(std::move(cells));
    } else if (section == "series") {
      need(f, 4);
      SeriesPoint p{field_double(f[1]), field_double(f[2]), f[0]};
      b.series.push_back(p);
      if (f[3] != "NA") {
        any_smooth = true;
        p.y = field_double(f[3]);
      }
      b.smoothed.push_back(p);
    } else {
      schema("data outside a section");
    }
  }
  if (!any_smooth) b.smoothed.clear();
  return b;
}

}  // namespace

std::vector<SeriesPoint> smooth_series(std::span<const SeriesPoint> points, double span) {
  if (!(span > 0.0 && span <= 1.0)) throw Error(ErrorKind::Parameter, "span must lie in (0, 1]");
  std::map<std::string, std::vector<const SeriesPoint*>> groups;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorKind::Parameter, "series values must be finite");
    groups[p.group].push_back(&p);
  }
  for (const auto& [name, pts] : groups) {
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->x < b->x; });
    if (pts.empty() || (*lo)->x == (*hi)->x) {
      throw Error(ErrorKind::InsufficientData, "smoothing needs >= 2 distinct x in group '" + name + "'");
    }
  }
  if (points.empty()) throw Error(ErrorKind::InsufficientData, "smoothing needs >= 2 distinct x");
  std::vector<SeriesPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto& pts = groups[p.group];
    const auto q = std::max<std::size_t>(
        2, std::min(pts.size(), static_cast<std::size_t>(std::floor(span * static_cast<double>(pts.size()) + 1e-9))));
    out.push_back({p.x, local_linear(pts, p.x, q), p.group});
  }
  return out;
}

std::vector<SeriesPoint> fpr_series(std::span<const TestMetricsRow> rows, bool adjusted) {
  std::vector<SeriesPoint> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const auto& m = adjusted ? r.metrics_adjusted : r.metrics_raw;
    out.push_back({static_cast<double>(r.n_total), m.fpr, "d=" + text::format_double(r.scenario.d_threshold)});
  }
  return out;
}

ExportMetadata make_metadata(const AnalysisConfig& cfg, std::string provenance, std::vector<SkippedTest> skipped) {
  ExportMetadata m;
  m.config = cfg;
  m.config_digest = config_digest(cfg);
  m.provenance = std::move(provenance);
  m.skipped = std::move(skipped);
  std::stable_sort(m.skipped.begin(), m.skipped.end(), [](const SkippedTest& a, const SkippedTest& b) {
    return std::tie(a.study_id, a.test_id) < std::tie(b.study_id, b.test_id);
  });
  return m;
}

std::string export_results(const ExportBundle& bundle, ExportFormat format) {
  const auto b = canonical(bundle);
  return format == ExportFormat::Csv ? export_csv(b) : export_jsonl(b);
}

ExportBundle parse_export(std::string_view bytes, ExportFormat format) {
  return format == ExportFormat::Csv ? parse_csv(bytes) : parse_jsonl(bytes);
}

std::string metadata_json(const ExportMetadata& meta) { return metadata_object(meta).dump(2) + "\n"; }

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace soe

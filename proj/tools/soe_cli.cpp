#include "soe_cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "soe/config.hpp"
#include "soe/error.hpp"
#include "soe/ingest.hpp"
#include "soe/pipeline.hpp"
#include "soe/report.hpp"
#include "soe/service.hpp"
#include "soe/text.hpp"

namespace soe {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string config;
  std::string out;
  std::string d, bias, prior;
  std::optional<double> alpha;
  std::string mcc;
  std::optional<double> fpr_target;
  std::string two_sided;
  std::optional<double> span;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::uint64_t seed = 1;
  std::string format = "jsonl";
  unsigned threads = 0;
};

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
  std::vector<double> out;
  for (const auto& field : text::split_csv(text)) {
    auto v = text::parse_double(field);
    if (!v) throw UsageError("--" + flag + ": '" + field + "' is not a number");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError("--" + flag + ": empty value list");
  return out;
}

double parse_single(const std::string& flag, const std::string& text) {
  auto list = parse_list(flag, text);
  if (list.size() != 1) throw UsageError("--" + flag + " takes a single value for this command");
  return list.front();
}

// defaults < config file < flags
AnalysisConfig effective_config(const Options& o) {
  AnalysisConfig cfg;
  if (!o.config.empty()) {
    try {
      cfg = load_config_file(o.config, cfg);
    } catch (const Error& e) {
      // An unreadable file is a runtime failure; bad content is a usage mistake.
      if (e.kind() == ErrorKind::Io) throw;
      throw UsageError(e.what());
    }
  }
  if (!o.d.empty()) cfg.thresholds = parse_list("d", o.d);
  if (!o.bias.empty()) cfg.biases = parse_list("bias", o.bias);
  if (!o.prior.empty()) cfg.priors = parse_list("prior", o.prior);
  if (o.alpha) cfg.alpha = *o.alpha;
  if (!o.mcc.empty()) cfg.mcc_method = *parse_mcc_tag(o.mcc);
  if (o.fpr_target) cfg.fpr_target = *o.fpr_target;
  if (!o.two_sided.empty()) cfg.two_sided = o.two_sided == "true";
  if (o.span) cfg.smooth_span = *o.span;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

unsigned thread_count(const Options& o) {
  if (o.threads > 0) return o.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

Dataset load_input(const Options& o, std::ostream& err) {
  auto parsed = parse_dataset_file(o.input);
  if (!parsed.rejected.empty()) {
    err << "note: " << parsed.rejected.size() << " of " << parsed.rows_read << " rows rejected; run `validate` for details\n";
  }
  return std::move(parsed.dataset);
}

// FPR-vs-n points with their smoothed trend; smoothing is dropped when a
// group is too small to fit.
void attach_series(ExportBundle& b, std::span<const TestMetricsRow> rows, double span, std::ostream& err) {
  b.series = fpr_series(rows, true);
  try {
    b.smoothed = smooth_series(b.series, span);
  } catch (const Error& e) {
    err << "note: series not smoothed: " << e.what() << "\n";
    b.smoothed.clear();
  }
}

void emit(const ExportBundle& b, const Options& o, std::ostream& out) {
  const auto format = o.format == "csv" ? ExportFormat::Csv : ExportFormat::JsonLines;
  const auto bytes = export_results(b, format);
  if (o.out.empty()) {
    out << bytes;
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + o.out + ": " + ec.message());
  const std::filesystem::path dir(o.out);
  write_file((dir / (format == ExportFormat::Csv ? "results.csv" : "results.jsonl")).string(), bytes);
  write_file((dir / "metadata.json").string(), metadata_json(b.metadata));
}

int cmd_validate(const Options& o, std::ostream& out) {
  ParseResult parsed;
  try {
    parsed = parse_dataset_file(o.input);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Validation) throw;
    out << "0 records\n" << e.what() << "\n";
    return 1;
  }
  out << parsed.dataset.test_count() << " records\n";
  out << parsed.dataset.studies.size() << " studies\n";
  out << parsed.rejected.size() << " rejected of " << parsed.rows_read << " rows\n";
  for (const auto& r : parsed.rejected) {
    out << "row " << r.row << ":";
    for (const auto& v : r.violations) out << " [" << v.code << "] " << v.detail << ";";
    out << "\n";
  }
  return 0;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.d.empty() || o.bias.empty() || o.prior.empty()) throw UsageError("analyze needs --d, --bias and --prior");
  Options single = o;
  single.d = text::format_double(parse_single("d", o.d));
  single.bias = text::format_double(parse_single("bias", o.bias));
  single.prior = text::format_double(parse_single("prior", o.prior));
  const auto cfg = effective_config(single);
  const auto ds = load_input(o, err);
  std::vector<SkippedTest> skipped;
  const auto sc = scenarios(cfg).front();
  ExportBundle b;
  b.rows = run_scenario(ds, cfg, sc, &skipped);
  b.metadata = make_metadata(cfg, ds.provenance, std::move(skipped));
  b.scenario_summaries.push_back(summarize(b.rows, sc, cfg));
  b.study_summaries = summarize_studies(b.rows, ds, sc);
  attach_series(b, b.rows, cfg.smooth_span, err);
  emit(b, o, out);
  return 0;
}

int cmd_grid(const Options& o, std::ostream& out, std::ostream& err) {
  const auto cfg = effective_config(o);
  const auto ds = load_input(o, err);
  std::vector<SkippedTest> skipped;
  ExportBundle b;
  b.rows = run_grid(ds, cfg, thread_count(o), &skipped);
  b.metadata = make_metadata(cfg, ds.provenance, std::move(skipped));
  for (const auto& sc : scenarios(cfg)) b.scenario_summaries.push_back(summarize(rows_for(b.rows, sc), sc, cfg));
  emit(b, o, out);
  return 0;
}

// The scenario used for per-study figures: (0.5, 0.3, 0.2) when the grid
// holds it, otherwise the first grid point.
Scenario reference_scenario(const AnalysisConfig& cfg) {
  const auto all = scenarios(cfg);
  const auto ref = make_scenario(cfg, 0.5, 0.3, 0.2);
  return ref.index < all.size() ? all[ref.index] : all.front();
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  const auto cfg = effective_config(o);
  const auto ds = load_input(o, err);
  std::vector<SkippedTest> skipped;
  const auto rows = run_grid(ds, cfg, thread_count(o), &skipped);
  ExportBundle b;
  b.metadata = make_metadata(cfg, ds.provenance, std::move(skipped));
  for (const auto& sc : scenarios(cfg)) {
    const auto slice = rows_for(rows, sc);
    b.scenario_summaries.push_back(summarize(slice, sc, cfg));
    auto studies = summarize_studies(slice, ds, sc);
    b.study_summaries.insert(b.study_summaries.end(), studies.begin(), studies.end());
  }
  b.heatmap = heatmap_max_ppv(rows);
  const auto ref = reference_scenario(cfg);
  std::vector<TestMetricsRow> trend;
  for (const auto& r : rows) {
    if (r.scenario.bias_u == ref.bias_u && r.scenario.prior == ref.prior) trend.push_back(r);
  }
  attach_series(b, trend, cfg.smooth_span, err);
  emit(b, o, out);

  const auto slice = rows_for(rows, ref);
  const auto studies = summarize_studies(slice, ds, ref);
  try {
    const auto a = citation_association(studies, slice, o.seed);
    err << "citation association (" << ref.label << "): rho=" << text::format_double(a.rho)
        << " p_perm=" << text::format_double(a.p_perm) << " n_studies=" << a.n_studies << "\n";
  } catch (const Error& e) {
    err << "citation association not computed: " << e.what() << "\n";
  }
  return 0;
}

int cmd_serve(const Options& o, const CliStreams& io) {
  const auto cfg = effective_config(o);
  std::optional<Dataset> ds;
  if (!o.input.empty()) ds = load_input(o, io.err);
  ApiService service(cfg, std::move(ds), thread_count(o));
  ServiceHost host(service);
  const int port = host.bind(o.host, o.port);
  io.err << "listening on http://" << o.host << ":" << port << "/api/"
         << (service.has_dataset() ? "" : " (no dataset)") << "\n";
  if (io.on_listening) io.on_listening(host, port);
  host.listen();
  return 0;
}

void add_analysis_flags(CLI::App& cmd, Options& o, bool lists) {
  cmd.add_option("--input", o.input, "Coded-test CSV")->required();
  cmd.add_option("--config", o.config, "JSON config file (AnalysisConfig field names)");
  cmd.add_option("--out", o.out, "Output directory (results + metadata.json); stdout when absent");
  const char* shape = lists ? "comma-separated list" : "single value";
  cmd.add_option("--d", o.d, std::string("Effect-size threshold(s), ") + shape);
  cmd.add_option("--bias", o.bias, std::string("Bias u, ") + shape);
  cmd.add_option("--prior", o.prior, std::string("Prior P(H1), ") + shape);
  cmd.add_option("--alpha", o.alpha, "Significance level");
  cmd.add_option("--mcc", o.mcc, "Multiple-comparison correction")->check(CLI::IsMember({"none", "bonferroni", "holm"}));
  cmd.add_option("--fpr-target", o.fpr_target, "FPR target for the reverse Bayesian prior");
  cmd.add_option("--two-sided", o.two_sided, "Two-sided tests")->check(CLI::IsMember({"true", "false"}));
  cmd.add_option("--span", o.span, "Smoother span in (0, 1]");
  cmd.add_option("--format", o.format, "Export format")->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
  cmd.add_option("--threads", o.threads, "Worker threads (0 = hardware)")->capture_default_str();
  cmd.add_option("--seed", o.seed, "Seed for permutation tests")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliStreams io) {
  CLI::App app{"Strength-of-evidence toolkit", args.empty() ? "soe" : args.front()};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a coded-test CSV and list rejected rows");
  validate->add_option("--input", o.input, "Coded-test CSV")->required();

  auto* analyze = app.add_subcommand("analyze", "Evidence metrics for one scenario");
  add_analysis_flags(*analyze, o, false);
  auto* grid = app.add_subcommand("grid", "Evidence metrics for the full scenario grid");
  add_analysis_flags(*grid, o, true);
  auto* report = app.add_subcommand("report", "Scenario and study summaries, heatmap and FPR trend");
  add_analysis_flags(*report, o, true);

  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("--input", o.input, "Coded-test CSV; dataset routes answer 503 without it");
  serve->add_option("--config", o.config, "JSON config file");
  serve->add_option("--d", o.d, "Effect-size thresholds");
  serve->add_option("--bias", o.bias, "Bias values");
  serve->add_option("--prior", o.prior, "Priors");
  serve->add_option("--alpha", o.alpha, "Significance level");
  serve->add_option("--mcc", o.mcc, "Multiple-comparison correction")->check(CLI::IsMember({"none", "bonferroni", "holm"}));
  serve->add_option("--fpr-target", o.fpr_target, "FPR target");
  serve->add_option("--two-sided", o.two_sided, "Two-sided tests")->check(CLI::IsMember({"true", "false"}));
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--threads", o.threads, "Worker threads for the startup grid");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const bool help = e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success);
    app.exit(e, io.out, io.err);
    if (!help) io.err << app.help();
    return help ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, io.out);
    if (analyze->parsed()) return cmd_analyze(o, io.out, io.err);
    if (grid->parsed()) return cmd_grid(o, io.out, io.err);
    if (report->parsed()) return cmd_report(o, io.out, io.err);
    if (serve->parsed()) return cmd_serve(o, io);
  } catch (const UsageError& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace soe

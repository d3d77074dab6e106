#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soe/model.hpp"
#include "soe/pipeline.hpp"

namespace soe {

inline constexpr int kSchemaVersion = 1;

struct SeriesPoint {
  double x = 0.0;  // sample size
  double y = 0.0;  // metric value
  std::string group;

  bool operator==(const SeriesPoint&) const = default;
};

/// Local-linear fit with tricube weights over the floor(span * n) nearest
/// neighbours (at least 2) of each point, evaluated at that point's x.
/// Groups are smoothed independently and the input order is preserved.
/// When the neighbourhood holds fewer than two distinct x with positive
/// weight, the bandwidth grows to the next neighbour distance.
/// Throws Error(InsufficientData) when a group has < 2 distinct x.
std::vector<SeriesPoint> smooth_series(std::span<const SeriesPoint> points, double span);

/// FPR against n_total, grouped by effect-size threshold class.
std::vector<SeriesPoint> fpr_series(std::span<const TestMetricsRow> rows, bool adjusted = true);

struct ExportMetadata {
  int schema_version = kSchemaVersion;
  AnalysisConfig config;
  std::string config_digest;
  std::string provenance;
  std::vector<SkippedTest> skipped;
};

/// Everything one export carries; any part may be empty.
struct ExportBundle {
  ExportMetadata metadata;
  std::vector<TestMetricsRow> rows;
  std::vector<ScenarioSummary> scenario_summaries;
  std::vector<StudySummary> study_summaries;
  std::optional<Heatmap> heatmap;
  std::vector<SeriesPoint> series;     // raw points
  std::vector<SeriesPoint> smoothed;   // same order as `series`
};

enum class ExportFormat { Csv, JsonLines };

ExportMetadata make_metadata(const AnalysisConfig& cfg, std::string provenance,
                             std::vector<SkippedTest> skipped = {});

/// Deterministic, schema-versioned serialization. Rows and summaries are
/// written in canonical order whatever order they arrive in.
std::string export_results(const ExportBundle& bundle, ExportFormat format);

/// Inverse of export_results. Throws Error(Schema) on malformed input or a
/// schema_version mismatch.
ExportBundle parse_export(std::string_view bytes, ExportFormat format);

/// Pretty-printed metadata object for the `metadata.json` sidecar.
std::string metadata_json(const ExportMetadata& meta);

/// Writes `bytes` to `path`; throws Error(Io) when the sink is unwritable.
void write_file(const std::string& path, std::string_view bytes);

}  // namespace soe

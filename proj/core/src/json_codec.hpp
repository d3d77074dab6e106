#pragma once

// JSON encoders/decoders shared by the exporters and the HTTP service.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "json.hpp"
#include "soe/pipeline.hpp"
#include "soe/report.hpp"

namespace soe::codec {

using json = nlohmann::ordered_json;
inline constexpr std::size_t kOffGrid = std::numeric_limits<std::size_t>::max();

[[noreturn]] void schema(const std::string& what);

json opt(const std::optional<double>& v);
std::optional<double> opt_from(const json& v);

json scenario_json(const Scenario& sc);
Scenario scenario_from(const json& j);
json metrics_json(const EvidenceMetrics& m);
EvidenceMetrics metrics_from(const json& j);
json expected_json(const ExpectedPositives& e);
ExpectedPositives expected_from(const json& j);
json metadata_object(const ExportMetadata& m);
ExportMetadata metadata_from(const json& j);
json row_json(const TestMetricsRow& r);
TestFamily family_from(const std::string& tag);
TestMetricsRow row_from(const json& j);
json scenario_summary_json(const ScenarioSummary& s);
ScenarioSummary scenario_summary_from(const json& j);
json study_summary_json(const StudySummary& s);
StudySummary study_summary_from(const json& j);

}  // namespace soe::codec

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soe/model.hpp"
#include "soe/pipeline.hpp"

namespace soe {

struct ApiResponse {
  int status = 200;
  std::string body;
};

/// Read-only JSON facade over one analysed dataset. Everything is computed
/// in the constructor; request handling only reads, so one instance can
/// serve any number of threads.
///
/// Routes (all bodies carry `schema_version`):
///   GET  /api/scenarios
///   GET  /api/summary
///   GET  /api/studies?scenario=<index>
///   GET  /api/studies/{id}/tests[?scenario=<index>]
///   POST /api/whatif
/// Dataset routes answer 503 {"error":"no_dataset"} when no dataset was
/// loaded; what-if is always available.
class ApiService {
 public:
  ApiService(AnalysisConfig cfg, std::optional<Dataset> dataset, unsigned threads = 1);

  /// `target` is the request path with an optional query string.
  ApiResponse handle(std::string_view method, std::string_view target, std::string_view body = {}) const;

  ApiResponse whatif(std::string_view body) const;

  const AnalysisConfig& config() const { return cfg_; }
  bool has_dataset() const { return dataset_.has_value(); }

 private:
  ApiResponse scenarios_route() const;
  ApiResponse summary_route() const;
  ApiResponse studies_route(const std::map<std::string, std::string>& query) const;
  ApiResponse study_tests_route(const std::string& study_id, const std::map<std::string, std::string>& query) const;
  std::optional<std::size_t> scenario_param(const std::map<std::string, std::string>& query, ApiResponse& error) const;

  AnalysisConfig cfg_;
  std::optional<Dataset> dataset_;
  std::vector<Scenario> scenarios_;
  std::vector<TestMetricsRow> rows_;
  std::vector<std::vector<TestMetricsRow>> rows_by_scenario_;
  std::vector<ScenarioSummary> summaries_;
  std::vector<std::vector<StudySummary>> studies_by_scenario_;
  std::vector<double> fraction_ge_half_;
};

/// The HTTP/1.1 listener for an ApiService.
class ServiceHost {
 public:
  explicit ServiceHost(const ApiService& service, std::string cors_origin = "*");
  ~ServiceHost();
  ServiceHost(const ServiceHost&) = delete;
  ServiceHost& operator=(const ServiceHost&) = delete;

  /// Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace soe

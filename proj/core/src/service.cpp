#include "soe/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "httplib.h"
#include "json_codec.hpp"
#include "soe/config.hpp"
#include "soe/effect_power.hpp"
#include "soe/error.hpp"
#include "soe/evidence.hpp"
#include "soe/report.hpp"

namespace soe {
namespace {

using codec::json;

ApiResponse respond(int status, const json& body) {
  json out;
  out["schema_version"] = kSchemaVersion;
  for (const auto& [k, v] : body.items()) out[k] = v;
  return {status, out.dump()};
}

ApiResponse invalid(const std::string& field, const std::string& message) {
  return respond(422, {{"error", "validation"}, {"field", field}, {"message", message}});
}

ApiResponse not_found(const std::string& what) { return respond(404, {{"error", "not_found"}, {"message", what}}); }

ApiResponse no_dataset() {
  return respond(503, {{"error", "no_dataset"}, {"message", "service was started without a dataset"}});
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const auto amp = q.find('&');
    const auto pair = q.substr(0, amp);
    const auto eq = pair.find('=');
    if (!pair.empty()) {
      out[percent_decode(pair.substr(0, eq))] =
          eq == std::string_view::npos ? std::string{} : percent_decode(pair.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

// Field readers for the what-if body; each returns false after filling `err`.
bool read_number(const json& body, const char* field, double& out, ApiResponse& err) {
  if (!body.contains(field)) {
    err = invalid(field, "required");
    return false;
  }
  const auto& v = body.at(field);
  if (!v.is_number()) {
    err = invalid(field, "must be a number");
    return false;
  }
  out = v.get<double>();
  if (!std::isfinite(out)) {
    err = invalid(field, "must be finite");
    return false;
  }
  return true;
}

bool read_count(const json& body, const char* field, std::int64_t& out, ApiResponse& err) {
  const auto& v = body.at(field);
  if (!v.is_number_integer()) {
    err = invalid(field, "must be an integer");
    return false;
  }
  out = v.get<std::int64_t>();
  return true;
}

}  // namespace

ApiService::ApiService(AnalysisConfig cfg, std::optional<Dataset> dataset, unsigned threads)
    : cfg_(std::move(cfg)), dataset_(std::move(dataset)) {
  cfg_.validate();
  scenarios_ = scenarios(cfg_);
  if (!dataset_) return;
  rows_ = run_grid(*dataset_, cfg_, threads);
  rows_by_scenario_.resize(scenarios_.size());
  for (const auto& r : rows_) rows_by_scenario_[r.scenario.index].push_back(r);
  const auto heat = heatmap_max_ppv(rows_);
  fraction_ge_half_.assign(scenarios_.size(), 0.0);
  for (std::size_t k = 0; k < heat.scenarios.size(); ++k) {
    fraction_ge_half_[heat.scenarios[k].index] = heat.fraction_ge_half[k];
  }
  for (const auto& sc : scenarios_) {
    summaries_.push_back(summarize(rows_by_scenario_[sc.index], sc, cfg_));
    studies_by_scenario_.push_back(summarize_studies(rows_by_scenario_[sc.index], *dataset_, sc));
  }
}

ApiResponse ApiService::handle(std::string_view method, std::string_view target, std::string_view body) const {
  const auto qpos = target.find('?');
  const std::string path = percent_decode(target.substr(0, qpos));
  const auto query = qpos == std::string_view::npos ? std::map<std::string, std::string>{}
                                                    : parse_query(target.substr(qpos + 1));

  if (path == "/api/whatif") {
    if (method != "POST") return respond(405, {{"error", "method_not_allowed"}});
    return whatif(body);
  }
  if (method != "GET") {
    if (path.rfind("/api/", 0) == 0) return respond(405, {{"error", "method_not_allowed"}});
    return not_found("no route " + path);
  }
  if (path == "/api/scenarios") return scenarios_route();
  if (path == "/api/summary") return summary_route();
  if (path == "/api/studies") return studies_route(query);
  constexpr std::string_view prefix = "/api/studies/";
  constexpr std::string_view suffix = "/tests";
  if (path.size() > prefix.size() + suffix.size() && path.rfind(prefix, 0) == 0 &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return study_tests_route(path.substr(prefix.size(), path.size() - prefix.size() - suffix.size()), query);
  }
  return not_found("no route " + path);
}

ApiResponse ApiService::scenarios_route() const {
  json list = json::array();
  for (const auto& sc : scenarios_) list.push_back(codec::scenario_json(sc));
  return respond(200, {{"count", scenarios_.size()}, {"config", json::parse(config_to_json(cfg_))}, {"scenarios", list}});
}

ApiResponse ApiService::summary_route() const {
  if (!dataset_) return no_dataset();
  json list = json::array();
  for (std::size_t k = 0; k < summaries_.size(); ++k) {
    auto j = codec::scenario_summary_json(summaries_[k]);
    j.erase("record");
    j["fraction_studies_max_ppv_ge_half"] = fraction_ge_half_[k];
    list.push_back(j);
  }
  return respond(200, {{"provenance", dataset_->provenance},
                       {"config_digest", config_digest(cfg_)},
                       {"n_studies", dataset_->studies.size()},
                       {"n_tests", dataset_->test_count()},
                       {"scenarios", list}});
}

std::optional<std::size_t> ApiService::scenario_param(const std::map<std::string, std::string>& query,
                                                      ApiResponse& error) const {
  auto it = query.find("scenario");
  if (it == query.end()) return std::nullopt;
  std::size_t index = 0;
  const auto& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
  if (ec != std::errc{} || end != s.data() + s.size() || index >= scenarios_.size()) {
    error = invalid("scenario", "must be a scenario index in [0, " + std::to_string(scenarios_.size()) + ")");
    return std::nullopt;
  }
  return index;
}

ApiResponse ApiService::studies_route(const std::map<std::string, std::string>& query) const {
  if (!dataset_) return no_dataset();
  ApiResponse error{0, {}};
  auto index = scenario_param(query, error);
  if (error.status) return error;
  // Default: the weak-RCT reference scenario when it is on the grid.
  const auto reference = make_scenario(cfg_, 0.5, 0.3, 0.2).index;
  const std::size_t k = index.value_or(reference < scenarios_.size() ? reference : 0);
  json list = json::array();
  for (const auto& s : studies_by_scenario_[k]) {
    auto j = codec::study_summary_json(s);
    j.erase("record");
    list.push_back(j);
  }
  return respond(200, {{"scenario", codec::scenario_json(scenarios_[k])}, {"count", list.size()}, {"studies", list}});
}

ApiResponse ApiService::study_tests_route(const std::string& study_id,
                                          const std::map<std::string, std::string>& query) const {
  if (!dataset_) return no_dataset();
  if (!dataset_->find_study(study_id)) return not_found("unknown study '" + study_id + "'");
  ApiResponse error{0, {}};
  auto index = scenario_param(query, error);
  if (error.status) return error;
  json list = json::array();
  for (const auto& r : rows_) {
    if (r.study_id != study_id || (index && r.scenario.index != *index)) continue;
    auto j = codec::row_json(r);
    j.erase("record");
    list.push_back(j);
  }
  return respond(200, {{"study_id", study_id}, {"count", list.size()}, {"tests", list}});
}

ApiResponse ApiService::whatif(std::string_view body_text) const {
  json body;
  try {
    body = json::parse(body_text);
  } catch (const json::parse_error&) {
    return invalid("body", "must be a JSON object");
  }
  if (!body.is_object()) return invalid("body", "must be a JSON object");
  static const char* const known[] = {"p_obs", "n_total", "family", "d_threshold", "bias_u", "prior", "fpr_target", "mcc_m"};
  for (const auto& [key, value] : body.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      return invalid(key, "unknown field");
    }
  }

  ApiResponse err;
  double p_obs, d, u, prior, target;
  if (!read_number(body, "p_obs", p_obs, err)) return err;
  if (!(p_obs > 0.0 && p_obs <= 1.0)) return invalid("p_obs", "must lie in (0, 1]");
  if (!body.contains("n_total")) return invalid("n_total", "required");
  std::int64_t n_total = 0;
  if (!read_count(body, "n_total", n_total, err)) return err;
  if (n_total < 1) return invalid("n_total", "must be a positive integer");
  if (!body.contains("family") || !body.at("family").is_string()) return invalid("family", "required string");
  const auto family = parse_family_tag(body.at("family").get<std::string>());
  if (!family) return invalid("family", "must be one of t_ind, t_paired, chi2_1, r, F_oneway, Z");
  if (!read_number(body, "d_threshold", d, err)) return err;
  if (!(d > 0.0)) return invalid("d_threshold", "must be positive");
  if (!read_number(body, "bias_u", u, err)) return err;
  if (!(u >= 0.0 && u <= 1.0)) return invalid("bias_u", "must lie in [0, 1]");
  if (!read_number(body, "prior", prior, err)) return err;
  if (!(prior > 0.0 && prior < 1.0)) return invalid("prior", "must lie in (0, 1)");
  if (!read_number(body, "fpr_target", target, err)) return err;
  if (!(target > 0.0 && target < 1.0)) return invalid("fpr_target", "must lie in (0, 1)");
  std::optional<std::int64_t> mcc_m;
  if (body.contains("mcc_m") && !body.at("mcc_m").is_null()) {
    std::int64_t m = 0;
    if (!read_count(body, "mcc_m", m, err)) return err;
    if (m < 1) return invalid("mcc_m", "must be >= 1");
    mcc_m = m;
  }

  PowerQuery q;
  q.family = *family;
  q.n_total = n_total;
  q.d_threshold = d;
  q.alpha = cfg_.alpha;
  q.two_sided = cfg_.two_sided;
  double power = 0.0;
  try {
    power = std::clamp(power_at_threshold(q), 1e-300, 1.0);
  } catch (const Error& e) {
    return invalid("n_total", e.what());
  }
  const double p_effective = mcc_m ? std::min(1.0, static_cast<double>(*mcc_m) * p_obs) : p_obs;
  const auto m = evaluate(EvidenceInputs::make(p_effective, power, prior, u), target);

  json meta;
  meta["mcc"] = mcc_m ? "bonferroni" : "none";
  meta["family_size"] = mcc_m ? json(*mcc_m) : json(nullptr);
  meta["alpha"] = cfg_.alpha;
  meta["two_sided"] = cfg_.two_sided;
  meta["note"] = "hypothetical single p-value: MCC applies Bonferroni m*p capped at 1";
  return respond(200, {{"power", m.power},
                       {"p_effective", p_effective},
                       {"ppv", m.ppv},
                       {"fpr", m.fpr},
                       {"lr", m.lr},
                       {"rbp", m.rbp},
                       {"metadata", meta}});
}

struct ServiceHost::Impl {
  const ApiService& service;
  std::string origin;
  httplib::Server server;

  Impl(const ApiService& s, std::string o) : service(s), origin(std::move(o)) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      std::string target = req.path;
      if (!req.params.empty()) {
        target += '?';
        bool first = true;
        for (const auto& [k, v] : req.params) {
          if (!first) target += '&';
          first = false;
          target += httplib::detail::encode_query_param(k) + "=" + httplib::detail::encode_query_param(v);
        }
      }
      const auto out = service.handle(req.method, target, req.body);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
};

ServiceHost::ServiceHost(const ApiService& service, std::string cors_origin)
    : impl_(std::make_unique<Impl>(service, std::move(cors_origin))) {}

ServiceHost::~ServiceHost() { stop(); }

int ServiceHost::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ServiceHost::listen() { impl_->server.listen_after_bind(); }

void ServiceHost::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace soe

#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "soe/config.hpp"
#include "soe/service.hpp"
#include "support.hpp"

using namespace soe;
using json = nlohmann::ordered_json;

namespace {

const ApiService& fixture_service() {
  static const ApiService svc(AnalysisConfig{}, soe::testing::shipped_fixture(), 2);
  return svc;
}

json whatif_body(double p, double prior, double u) {
  return {{"p_obs", p}, {"n_total", 128}, {"family", "Z"}, {"d_threshold", 0.5},
          {"bias_u", u}, {"prior", prior}, {"fpr_target", 0.05}};
}

json post_whatif(const ApiService& svc, const json& body, int expect = 200) {
  const auto r = svc.handle("POST", "/api/whatif", body.dump());
  EXPECT_EQ(r.status, expect) << r.body;
  return json::parse(r.body);
}

json get(const ApiService& svc, const std::string& target, int expect = 200) {
  const auto r = svc.handle("GET", target);
  EXPECT_EQ(r.status, expect) << target << ": " << r.body;
  return json::parse(r.body);
}

}  // namespace

TEST(Service, ScenariosDefaultGrid) {
  const auto j = get(fixture_service(), "/api/scenarios");
  EXPECT_EQ(j.begin().key(), "schema_version");
  EXPECT_EQ(j["count"], 36);
  EXPECT_EQ(j["scenarios"].size(), 36u);
}

TEST(Service, WhatIfWeakRctExample) {
  const auto j = post_whatif(fixture_service(), whatif_body(0.05, 0.5, 0.0));
  EXPECT_NEAR(j["power"].get<double>(), 0.807, 0.01);
  EXPECT_NEAR(j["fpr"].get<double>(), 0.0583, 0.001);
  EXPECT_EQ(j["p_effective"], 0.05);
  EXPECT_EQ(j["metadata"]["mcc"], "none");
  EXPECT_NEAR(j["ppv"].get<double>() + j["fpr"].get<double>(), 1.0, 1e-12);
}

TEST(Service, WhatIfFullBiasReturnsPrior) {
  for (double prior : {0.1, 0.2, 0.5, 0.9}) {
    const auto j = post_whatif(fixture_service(), whatif_body(0.01, prior, 1.0));
    EXPECT_NEAR(j["ppv"].get<double>(), prior, 1e-12);
  }
}

TEST(Service, WhatIfBonferroni) {
  auto body = whatif_body(0.02, 0.2, 0.3);
  body["mcc_m"] = 4;
  auto j = post_whatif(fixture_service(), body);
  EXPECT_DOUBLE_EQ(j["p_effective"].get<double>(), 0.08);
  EXPECT_EQ(j["metadata"]["mcc"], "bonferroni");
  EXPECT_EQ(j["metadata"]["family_size"], 4);
  body["mcc_m"] = 100;
  EXPECT_EQ(post_whatif(fixture_service(), body)["p_effective"], 1.0);
}

TEST(Service, WhatIfFprNondecreasingInBias) {
  double last = 0.0;
  for (int k = 0; k <= 80; ++k) {
    const double fpr = post_whatif(fixture_service(), whatif_body(0.05, 0.2, k / 100.0))["fpr"].get<double>();
    EXPECT_GE(fpr, last - 1e-15) << "u=" << k / 100.0;
    last = fpr;
  }
}

TEST(Service, WhatIfValidationNamesField) {
  const auto& svc = fixture_service();
  auto expect_field = [&](json body, const std::string& field) {
    const auto j = post_whatif(svc, body, 422);
    EXPECT_EQ(j["error"], "validation");
    EXPECT_EQ(j["field"], field) << body.dump();
  };
  const auto b = whatif_body(0.05, 0.5, 0.0);
  auto with = [&](const std::string& key, json value) {
    auto c = b;
    c[key] = std::move(value);
    return c;
  };
  expect_field(with("prior", 0.0), "prior");
  expect_field(with("prior", 1.0), "prior");
  expect_field(with("p_obs", 0.0), "p_obs");
  expect_field(with("bias_u", 1.5), "bias_u");
  expect_field(with("n_total", 12.5), "n_total");
  expect_field(with("n_total", 0), "n_total");
  expect_field(with("family", "anova"), "family");
  expect_field(with("d_threshold", -1), "d_threshold");
  expect_field(with("fpr_target", 0), "fpr_target");
  expect_field(with("mcc_m", 0), "mcc_m");
  expect_field(with("extra", 1), "extra");
  auto missing = b;
  missing.erase("d_threshold");
  expect_field(missing, "d_threshold");
  EXPECT_EQ(svc.handle("POST", "/api/whatif", "not json").status, 422);
}

TEST(Service, NotFoundAndMethods) {
  const auto& svc = fixture_service();
  EXPECT_EQ(svc.handle("GET", "/api/studies/NOPE/tests").status, 404);
  EXPECT_EQ(svc.handle("GET", "/api/nothing").status, 404);
  EXPECT_EQ(svc.handle("GET", "/api/whatif").status, 405);
  EXPECT_EQ(svc.handle("POST", "/api/summary").status, 405);
  EXPECT_EQ(svc.handle("GET", "/api/studies?scenario=36").status, 422);
  EXPECT_EQ(svc.handle("GET", "/api/studies?scenario=x").status, 422);
}

TEST(Service, NoDatasetKeepsWhatIf) {
  const ApiService svc(AnalysisConfig{}, std::nullopt);
  EXPECT_FALSE(svc.has_dataset());
  for (const char* route : {"/api/summary", "/api/studies", "/api/studies/S001/tests"}) {
    const auto r = svc.handle("GET", route);
    EXPECT_EQ(r.status, 503) << route;
    EXPECT_EQ(json::parse(r.body)["error"], "no_dataset");
  }
  EXPECT_EQ(svc.handle("GET", "/api/scenarios").status, 200);
  EXPECT_EQ(svc.handle("POST", "/api/whatif", whatif_body(0.05, 0.5, 0.0).dump()).status, 200);
}

TEST(Service, SummaryGoldenDigest) {
  const auto r = fixture_service().handle("GET", "/api/summary");
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(soe::testing::matches_golden_digest("api_summary.sha256", r.body));
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["n_studies"], 30);
  EXPECT_EQ(j["n_tests"], 200);
  EXPECT_EQ(j["provenance"], "fixture.csv");
}

TEST(Service, RepeatedRequestsIdentical) {
  const auto& svc = fixture_service();
  for (const char* route : {"/api/summary", "/api/studies", "/api/studies?scenario=5", "/api/scenarios"}) {
    EXPECT_EQ(svc.handle("GET", route).body, svc.handle("GET", route).body) << route;
  }
  const auto body = whatif_body(0.03, 0.2, 0.3).dump();
  EXPECT_EQ(svc.handle("POST", "/api/whatif", body).body, svc.handle("POST", "/api/whatif", body).body);
}

TEST(Service, OverlayCountsMatchStudyTotals) {
  const auto& svc = fixture_service();
  for (std::size_t k : {std::size_t{0}, std::size_t{17}, std::size_t{35}}) {
    const auto studies = get(svc, "/api/studies?scenario=" + std::to_string(k));
    std::size_t total = 0, points = 0;
    for (const auto& s : studies["studies"]) {
      total += s["n_tests"].get<std::size_t>();
      const auto id = s["study_id"].get<std::string>();
      const auto tests = get(svc, "/api/studies/" + id + "/tests?scenario=" + std::to_string(k));
      points += tests["count"].get<std::size_t>();
      for (const auto& t : tests["tests"]) {
        EXPECT_EQ(t["study_id"], id);
        EXPECT_EQ(t["scenario"]["index"], k);
      }
    }
    EXPECT_EQ(total, 200u);
    EXPECT_EQ(points, total);
  }
  // Default scenario is the weak-RCT reference (d=.5, u=.3, prior=.2).
  const auto def = get(svc, "/api/studies")["scenario"];
  EXPECT_EQ(def["d_threshold"], 0.5);
  EXPECT_EQ(def["bias_u"], 0.3);
  EXPECT_EQ(def["prior"], 0.2);
}

TEST(Service, HttpConcurrentMatchesSerial) {
  const auto& svc = fixture_service();
  ServiceHost host(svc, "http://localhost:5173");
  const int port = host.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread server([&] { host.listen(); });

  struct Req {
    std::string path;
    std::string body;
  };
  std::vector<Req> reqs;
  for (int i = 0; i < 64; ++i) {
    switch (i % 4) {
      case 0: reqs.push_back({"/api/summary", {}}); break;
      case 1: reqs.push_back({"/api/studies?scenario=" + std::to_string(i % 36), {}}); break;
      case 2: reqs.push_back({"/api/studies/S" + std::to_string(10 + i % 20) + "/tests", {}}); break;
      default: reqs.push_back({"/api/whatif", whatif_body(0.001 * (i + 1), 0.2, 0.01 * i).dump()});
    }
  }
  auto serial = [&](const Req& r) {
    return r.body.empty() ? svc.handle("GET", r.path) : svc.handle("POST", r.path, r.body);
  };

  std::vector<std::future<std::pair<int, std::string>>> inflight;
  for (const auto& r : reqs) {
    inflight.push_back(std::async(std::launch::async, [&, r] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(30, 0);
      auto res = r.body.empty() ? cli.Get(r.path) : cli.Post(r.path, r.body, "application/json");
      if (!res) return std::pair<int, std::string>{-1, httplib::to_string(res.error())};
      EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
      return std::pair<int, std::string>{res->status, res->body};
    }));
  }
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const auto [status, body] = inflight[i].get();
    const auto expected = serial(reqs[i]);
    EXPECT_EQ(status, expected.status) << reqs[i].path;
    EXPECT_EQ(body, expected.body) << reqs[i].path;
  }

  httplib::Client cli("127.0.0.1", port);
  auto pre = cli.Options("/api/whatif");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");

  host.stop();
  server.join();
}

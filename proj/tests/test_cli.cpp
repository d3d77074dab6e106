#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "soe/config.hpp"
#include "soe/service.hpp"
#include "soe_cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args, std::function<void(soe::ServiceHost&, int)> on_listening = {}) {
  args.insert(args.begin(), "soe");
  std::ostringstream out, err;
  const int code = soe::run_cli(args, {out, err, std::move(on_listening)});
  return {code, out.str(), err.str()};
}

std::string fixture() { return soe::testing::source_path("data/fixture.csv"); }

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("soe_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST(Cli, ValidateHeaderOnly) {
  TempDir dir;
  write(dir / "empty.csv", "study_id,test_id,family,statistic,df1,df2,n_total,n1,n2,p_reported,effect_d,year,acpa\n");
  const auto r = run({"validate", "--input", (dir / "empty.csv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0 records"), std::string::npos) << r.out;
}

TEST(Cli, ValidateReportsRejectedRows) {
  TempDir dir;
  auto text = soe::testing::read_text(fixture());
  text += "S99,T1,t_ind,2.0,NA,NA,40,20,20,0.2,NA,2010,nope\n";
  write(dir / "mixed.csv", text);
  const auto r = run({"validate", "--input", (dir / "mixed.csv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("200 records"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("30 studies"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1 rejected of 201 rows"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("row 202"), std::string::npos) << r.out;
}

TEST(Cli, AnalyzeGoldenAndDeterministic) {
  const std::vector<std::string> args = {"analyze", "--input", fixture(), "--d", "0.5", "--bias", "0.3", "--prior", "0.2", "--mcc", "holm"};
  const auto a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_TRUE(soe::testing::matches_golden_digest("cli_analyze.sha256", a.out));
  EXPECT_EQ(run(args).out, a.out);
  EXPECT_EQ(json::parse(a.out.substr(0, a.out.find('\n')))["record"], "metadata");
}

TEST(Cli, BadListIsUsageError) {
  const auto r = run({"grid", "--input", fixture(), "--prior", "0.7,,x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--prior"), std::string::npos) << r.err;
  EXPECT_EQ(run({"grid", "--input", fixture(), "--prior", "1.5"}).code, 2);
  EXPECT_EQ(run({"analyze", "--input", fixture(), "--d", "0.2,0.5", "--bias", "0", "--prior", "0.2"}).code, 2);
  EXPECT_EQ(run({"analyze", "--input", fixture(), "--d", "0.5"}).code, 2);
}

TEST(Cli, UnknownFlagPrintsUsage) {
  const auto r = run({"grid", "--input", fixture(), "--colour", "red"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"serve", "--port", "70000"}).code, 2);
}

TEST(Cli, UnreadableInputIsRuntimeError) {
  const auto r = run({"grid", "--input", "/nonexistent/tests.csv"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  TempDir dir;
  write(dir / "bad.csv", "study_id,test_id,family,statistic,df1,df2,n_total,n1,n2,p_reported,effect_d,year,acpa\n"
                         "S1,T1,t_ind,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA\n");
  EXPECT_EQ(run({"validate", "--input", (dir / "bad.csv").string()}).code, 1);
}

TEST(Cli, HelpForEveryCommand) {
  for (const char* cmd : {"validate", "analyze", "grid", "report", "serve"}) {
    const auto r = run({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    EXPECT_NE(r.out.find("--input"), std::string::npos) << cmd << "\n" << r.out;
  }
  const auto top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* cmd : {"validate", "analyze", "grid", "report", "serve"}) EXPECT_NE(top.out.find(cmd), std::string::npos);
  EXPECT_NE(run({"grid", "--help"}).out.find("--threads"), std::string::npos);
  EXPECT_NE(run({"serve", "--help"}).out.find("--port"), std::string::npos);
}

TEST(Cli, ConfigPrecedenceEchoedInMetadata) {
  TempDir dir;
  write(dir / "cfg.json", R"({"alpha":0.01,"priors":[0.3],"mcc_method":"bonferroni"})");
  const auto out = dir / "run";
  const auto r = run({"grid", "--input", fixture(), "--config", (dir / "cfg.json").string(), "--mcc", "none",
                      "--bias", "0,0.5", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  ASSERT_TRUE(fs::exists(out / "results.jsonl"));
  const auto meta = json::parse(soe::testing::read_text((out / "metadata.json").string()));
  EXPECT_EQ(meta["config"]["alpha"], 0.01);                        // file over default
  EXPECT_EQ(meta["config"]["priors"], json::array({0.3}));         // file
  EXPECT_EQ(meta["config"]["mcc_method"], "none");                 // flag over file
  EXPECT_EQ(meta["config"]["biases"], json::array({0.0, 0.5}));    // flag
  EXPECT_EQ(meta["config"]["thresholds"], json::array({0.2, 0.5, 0.8}));
  soe::AnalysisConfig expect;
  expect.alpha = 0.01;
  expect.priors = {0.3};
  expect.biases = {0.0, 0.5};
  expect.mcc_method = soe::MccMethod::None;
  EXPECT_EQ(meta["config_digest"], soe::config_digest(expect));

  write(dir / "typo.json", R"({"alhpa":0.01})");
  EXPECT_EQ(run({"grid", "--input", fixture(), "--config", (dir / "typo.json").string()}).code, 2);
  EXPECT_EQ(run({"grid", "--input", fixture(), "--config", (dir / "missing.json").string()}).code, 1);
}

TEST(Cli, CsvFormat) {
  TempDir dir;
  const auto r = run({"grid", "--input", fixture(), "--format", "csv", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = soe::testing::read_text((dir / "o" / "results.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n') > 36 * 200, true);
  EXPECT_TRUE(fs::exists(dir / "o" / "metadata.json"));
  EXPECT_EQ(run({"grid", "--input", fixture(), "--format", "xml"}).code, 2);
}

TEST(Cli, GridThreadsDoNotChangeOutput) {
  const auto one = run({"grid", "--input", fixture(), "--threads", "1"});
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(run({"grid", "--input", fixture(), "--threads", "4"}).out, one.out);
}

TEST(Cli, ReportPrintsAssociation) {
  const auto r = run({"report", "--input", fixture(), "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("citation association"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("{\"record\":\"heatmap_row\""), std::string::npos);
}

TEST(Cli, ServeAnswersRequests) {
  int status = 0;
  std::string body;
  const auto r = run({"serve", "--input", fixture(), "--port", "0"}, [&](soe::ServiceHost& host, int port) {
    std::thread([&host, port, &status, &body] {
      httplib::Client cli("127.0.0.1", port);
      if (auto res = cli.Get("/api/scenarios")) {
        status = res->status;
        body = res->body;
      }
      host.stop();
    }).detach();
  });
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("listening on http://127.0.0.1:"), std::string::npos);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(json::parse(body)["count"], 36);
}

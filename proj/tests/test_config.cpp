#include <gtest/gtest.h>

#include "soe/config.hpp"
#include "soe/error.hpp"

using namespace soe;

TEST(Config, JsonRoundTrip) {
  AnalysisConfig cfg;
  cfg.alpha = 0.01;
  cfg.thresholds = {0.3};
  cfg.mcc_method = MccMethod::None;
  cfg.two_sided = false;
  const auto text = config_to_json(cfg);
  EXPECT_EQ(config_from_json(text), cfg);
  EXPECT_EQ(config_to_json(AnalysisConfig{}),
            R"({"alpha":0.05,"thresholds":[0.2,0.5,0.8],"biases":[0.0,0.2,0.3,0.8],"priors":[0.1,0.2,0.5],)"
            R"("mcc_method":"holm","fpr_target":0.05,"smooth_span":0.75,"two_sided":true})");
}

TEST(Config, OverlaysOntoBase) {
  AnalysisConfig base;
  base.alpha = 0.01;
  const auto cfg = config_from_json(R"({"priors":[0.7]})", base);
  EXPECT_EQ(cfg.alpha, 0.01);
  EXPECT_EQ(cfg.priors, std::vector<double>{0.7});
}

TEST(Config, RejectsUnknownKeysBadTypesAndRanges) {
  EXPECT_THROW(config_from_json(R"({"alpah":0.05})"), Error);
  EXPECT_THROW(config_from_json(R"({"alpha":"0.05"})"), Error);
  EXPECT_THROW(config_from_json(R"({"alpha":1.5})"), Error);
  EXPECT_THROW(config_from_json(R"({"priors":[0.0]})"), Error);
  EXPECT_THROW(config_from_json(R"({"priors":[]})"), Error);
  EXPECT_THROW(config_from_json(R"({"biases":[1.2]})"), Error);
  EXPECT_THROW(config_from_json(R"({"mcc_method":"fdr"})"), Error);
  EXPECT_THROW(config_from_json(R"({"smooth_span":0})"), Error);
  EXPECT_THROW(config_from_json("[1,2]"), Error);
  EXPECT_THROW(config_from_json("{"), Error);
  EXPECT_THROW(load_config_file("/nonexistent/config.json"), Error);
}

TEST(Config, Keys) {
  for (const char* k : {"alpha", "thresholds", "biases", "priors", "mcc_method", "fpr_target", "smooth_span", "two_sided"})
    EXPECT_TRUE(is_config_key(k)) << k;
  EXPECT_FALSE(is_config_key("port"));
}

TEST(Config, Digest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  AnalysisConfig a, b;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.fpr_target = 0.1;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a), sha256_hex(config_to_json(a)));
}

#include "soe/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "soe/error.hpp"

namespace soe {
namespace {

using json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 8> kKeys{"alpha",       "thresholds", "biases",      "priors",
                                                "mcc_method",  "fpr_target", "smooth_span", "two_sided"};

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::Parameter, what); }

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) bad("config key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(number(e, key));
  return out;
}

}  // namespace

bool is_config_key(std::string_view key) {
  for (auto k : kKeys) {
    if (k == key) return true;
  }
  return false;
}

std::string config_to_json(const AnalysisConfig& cfg) {
  json j;
  j["alpha"] = cfg.alpha;
  j["thresholds"] = cfg.thresholds;
  j["biases"] = cfg.biases;
  j["priors"] = cfg.priors;
  j["mcc_method"] = std::string(mcc_tag(cfg.mcc_method));
  j["fpr_target"] = cfg.fpr_target;
  j["smooth_span"] = cfg.smooth_span;
  j["two_sided"] = cfg.two_sided;
  return j.dump();
}

AnalysisConfig config_from_json(std::string_view text, AnalysisConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") {
      cfg.alpha = number(value, key);
    } else if (key == "thresholds") {
      cfg.thresholds = numbers(value, key);
    } else if (key == "biases") {
      cfg.biases = numbers(value, key);
    } else if (key == "priors") {
      cfg.priors = numbers(value, key);
    } else if (key == "mcc_method") {
      if (!value.is_string()) bad("config key 'mcc_method' must be a string");
      auto m = parse_mcc_tag(value.get<std::string>());
      if (!m) bad("unknown mcc_method '" + value.get<std::string>() + "'");
      cfg.mcc_method = *m;
    } else if (key == "fpr_target") {
      cfg.fpr_target = number(value, key);
    } else if (key == "smooth_span") {
      cfg.smooth_span = number(value, key);
    } else if (key == "two_sided") {
      if (!value.is_boolean()) bad("config key 'two_sided' must be a boolean");
      cfg.two_sided = value.get<bool>();
    } else {
      bad("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

AnalysisConfig load_config_file(const std::string& path, AnalysisConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), std::move(base));
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string config_digest(const AnalysisConfig& cfg) { return sha256_hex(config_to_json(cfg)); }

}  // namespace soe

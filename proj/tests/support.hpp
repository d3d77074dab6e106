#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "soe/config.hpp"
#include "soe/ingest.hpp"

namespace soe::testing {

inline std::string source_path(const std::string& rel) { return std::string(SOE_SOURCE_DIR) + "/" + rel; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ParseResult parse_text(const std::string& csv, std::string provenance = "test") {
  std::istringstream in(csv);
  return parse_dataset(in, std::move(provenance));
}

inline Dataset shipped_fixture() { return parse_dataset_file(source_path("data/fixture.csv")).dataset; }

/// Compares `actual` with tests/golden/<name>. With SOE_UPDATE_GOLDEN set
/// the file is rewritten instead; review the diff before committing it.
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const auto path = source_path("tests/golden/" + name);
  if (std::getenv("SOE_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
    return true;
  }
  return read_text(path) == actual;
}

/// Golden check on the SHA-256 of `bytes`, for outputs too large to keep.
inline bool matches_golden_digest(const std::string& name, const std::string& bytes) {
  return matches_golden(name, sha256_hex(bytes) + "\n");
}

}  // namespace soe::testing

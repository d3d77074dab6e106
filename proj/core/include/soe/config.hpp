#pragma once

#include <string>
#include <string_view>

#include "soe/model.hpp"

namespace soe {

/// Canonical compact JSON of the config, keys in declaration order.
std::string config_to_json(const AnalysisConfig& cfg);

/// Overlays the keys present in `json` onto `base`. Unknown keys and
/// ill-typed values throw Error(Parameter); the result is validated.
AnalysisConfig config_from_json(std::string_view json, AnalysisConfig base = {});
AnalysisConfig load_config_file(const std::string& path, AnalysisConfig base = {});

/// True for the field names accepted by config_from_json.
bool is_config_key(std::string_view key);

std::string sha256_hex(std::string_view bytes);
std::string config_digest(const AnalysisConfig& cfg);

}  // namespace soe

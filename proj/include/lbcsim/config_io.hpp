#pragma once

#include <filesystem>
#include <string>

#include "lbcsim/scenario.hpp"

namespace lbcsim {

/// Parse a scenario config from JSON text. Unknown keys and missing required
/// keys raise ConfigError naming the offending key and its path.
ScenarioConfig parse_config(const std::string& json_text);

ScenarioConfig load_config(const std::filesystem::path& path);

/// Serialize back to JSON (round-trips through parse_config).
std::string config_to_json(const ScenarioConfig& cfg);

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

} // namespace lbcsim

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "labqg/gateway.hpp"
#include "labqg/prompt_forge.hpp"

namespace labqg {

struct AppConfig {
  std::vector<ModelConfig> models;  // generation registry
  std::vector<ModelConfig> judges;  // judge registry
  std::vector<TelerLevel> default_levels{kAllTelerLevels.begin(), kAllTelerLevels.end()};
  std::size_t parallelism = 4;
  std::filesystem::path store_root = "labqg-data";
  std::string bind_address = "127.0.0.1";
  int port = 8080;
};

/// Mock generation models (mock-perfect, mock-prose) and three mock judges.
AppConfig default_config();

/// Replaces every ${NAME} with the value of environment variable NAME.
/// Throws ConfigError for an unset variable.
std::string interpolate_env(std::string_view text);

/// Keys absent from `j` keep their default_config() values. String values
/// are passed through interpolate_env. Throws ConfigError.
AppConfig config_from_json(const json& j);
AppConfig load_config(const std::filesystem::path& path);
json to_json(const AppConfig& cfg);

/// At least one generation model; names unique within each registry; every
/// model config valid. Throws ConfigError.
void validate_app_config(const AppConfig& cfg);

/// Throws NotFound.
const ModelConfig& find_model(const AppConfig& cfg, std::string_view name);
const ModelConfig& find_judge(const AppConfig& cfg, std::string_view name);

}  // namespace labqg

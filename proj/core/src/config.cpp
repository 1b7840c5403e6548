#include "labqg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace labqg {

namespace {

ModelConfig mock_model(std::string name, std::string behavior) {
  ModelConfig m;
  m.name = name;
  m.model_id = std::move(name);
  m.endpoint_url = "mock://" + std::move(behavior);
  return m;
}

void interpolate_all(json& j) {
  if (j.is_string()) {
    j = interpolate_env(j.get<std::string>());
  } else if (j.is_structured()) {
    for (auto& child : j) interpolate_all(child);
  }
}

std::vector<ModelConfig> registry_from_json(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<ModelConfig> out;
  for (const auto& m : j) out.push_back(model_config_from_json(m));
  return out;
}

void check_unique(const std::vector<ModelConfig>& registry, const char* what) {
  std::set<std::string> names;
  for (const auto& m : registry) {
    if (!names.insert(m.name).second) {
      throw ConfigError(std::string("duplicate ") + what + " name '" + m.name + "'");
    }
    validate_config(m);
  }
}

const ModelConfig& find_in(const std::vector<ModelConfig>& registry, std::string_view name,
                           const char* what) {
  for (const auto& m : registry) {
    if (m.name == name) return m;
  }
  throw NotFound(std::string("no ") + what + " named '" + std::string(name) + "'");
}

}  // namespace

AppConfig default_config() {
  AppConfig cfg;
  cfg.models = {mock_model("mock-perfect", "perfect"), mock_model("mock-prose", "prose")};
  cfg.judges = {mock_model("mock-judge-a", "perfect"), mock_model("mock-judge-b", "perfect"),
                mock_model("mock-judge-c", "perfect")};
  return cfg;
}

std::string interpolate_env(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string name(text.substr(open + 2, close - open - 2));
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) throw ConfigError("environment variable " + name + " is not set");
    out += value;
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

AppConfig config_from_json(const json& input) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  json j = input;
  interpolate_all(j);
  AppConfig cfg = default_config();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "models") {
        cfg.models = registry_from_json(value, "models");
      } else if (key == "judges") {
        cfg.judges = registry_from_json(value, "judges");
      } else if (key == "default_levels") {
        cfg.default_levels.clear();
        for (const auto& l : value) {
          const auto level = parse_teler_level(l.is_string() ? l.get<std::string>() : l.dump());
          if (!level) throw ConfigError("unknown level " + l.dump());
          cfg.default_levels.push_back(*level);
        }
      } else if (key == "parallelism") {
        cfg.parallelism = value.get<std::size_t>();
      } else if (key == "store_root") {
        cfg.store_root = value.get<std::string>();
      } else if (key == "bind_address") {
        cfg.bind_address = value.get<std::string>();
      } else if (key == "port") {
        cfg.port = value.get<int>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate_app_config(cfg);
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return config_from_json(j);
}

json to_json(const AppConfig& cfg) {
  json j = json::object();
  j["models"] = json::array();
  for (const auto& m : cfg.models) j["models"].push_back(to_json(m));
  j["judges"] = json::array();
  for (const auto& m : cfg.judges) j["judges"].push_back(to_json(m));
  j["default_levels"] = json::array();
  for (auto l : cfg.default_levels) j["default_levels"].push_back(std::string(to_string(l)));
  j["parallelism"] = cfg.parallelism;
  j["store_root"] = cfg.store_root.string();
  j["bind_address"] = cfg.bind_address;
  j["port"] = cfg.port;
  return j;
}

void validate_app_config(const AppConfig& cfg) {
  if (cfg.models.empty()) throw ConfigError("at least one generation model must be configured");
  check_unique(cfg.models, "model");
  check_unique(cfg.judges, "judge");
  if (cfg.parallelism == 0) throw ConfigError("parallelism must be at least 1");
  if (cfg.default_levels.empty()) throw ConfigError("default_levels must not be empty");
  if (cfg.port < 0 || cfg.port > 65535) throw ConfigError("port out of range");
}

const ModelConfig& find_model(const AppConfig& cfg, std::string_view name) {
  return find_in(cfg.models, name, "model");
}

const ModelConfig& find_judge(const AppConfig& cfg, std::string_view name) {
  return find_in(cfg.judges, name, "judge");
}

}  // namespace labqg

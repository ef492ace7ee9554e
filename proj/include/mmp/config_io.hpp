#pragma once

#include "mmp/controller.hpp"
#include "mmp/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace mmp {

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing keys keep their defaults; unknown keys are rejected so typos surface.
ControllerConfig controller_config_from_json(const nlohmann::json& j, ControllerConfig base = {});
nlohmann::json to_json(const ControllerConfig& config);

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

}  // namespace mmp

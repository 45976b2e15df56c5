#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pedsim/env.hpp"
#include "pedsim/evalrig.hpp"
#include "pedsim/ppo.hpp"

namespace pedsim {

inline constexpr int kConfigVersion = 1;

struct RunConfig {
  int version = kConfigVersion;
  std::string output_dir = "runs/default";
  EnvConfig env;
  PpoConfig ppo;
  EvalSpec eval;

  void validate() const;
};

nlohmann::json to_json(const DrivingParams& p);
nlohmann::json to_json(const EnvConfig& c);
nlohmann::json to_json(const PpoConfig& c);
nlohmann::json to_json(const EvalSpec& c);
nlohmann::json to_json(const RunConfig& c);

// Strict readers: unknown keys and wrong types throw ConfigError. Missing
// keys keep their defaults.
DrivingParams driving_params_from_json(const nlohmann::json& j);
EnvConfig env_config_from_json(const nlohmann::json& j);
PpoConfig ppo_config_from_json(const nlohmann::json& j);
EvalSpec eval_spec_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
// Hex FNV-1a of the canonical JSON form of the config.
std::string config_hash(const EnvConfig& c);
std::string config_hash(const RunConfig& c);

}  // namespace pedsim

#include "pedsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>

#include "pedsim/error.hpp"

namespace pedsim {

using nlohmann::json;

namespace {

void require_object(const json& j, const char* where) {
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + ": expected a JSON object");
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys,
                    const char* where) {
  require_object(j, where);
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) {
      throw ConfigError(std::string(where) + ": unknown field '" + k + "'");
    }
  }
}

// Reads j[key] into out when present; type errors become ConfigError.
template <typename T>
void read(const json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": field '" + key +
                      "' has the wrong type");
  }
}

json hazard_to_json(const HazardRule& r) {
  return {{"horizon", r.horizon},         {"min_length", r.min_length},
          {"length_time", r.length_time}, {"half_width", r.half_width},
          {"speed_cap", r.speed_cap},     {"cap_radius", r.cap_radius}};
}

HazardRule hazard_from_json(const json& j, HazardRule r, const char* where) {
  reject_unknown(j, {"horizon", "min_length", "length_time", "half_width",
                     "speed_cap", "cap_radius"},
                 where);
  read(j, "horizon", r.horizon, where);
  read(j, "min_length", r.min_length, where);
  read(j, "length_time", r.length_time, where);
  read(j, "half_width", r.half_width, where);
  read(j, "speed_cap", r.speed_cap, where);
  read(j, "cap_radius", r.cap_radius, where);
  return r;
}

template <typename F>
auto wrap_name_error(F&& f, const char* where) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (version != kConfigVersion) {
    throw ConfigError("config: unsupported schema version " +
                      std::to_string(version));
  }
  env.validate();
  ppo.validate();
  eval.validate();
}

json to_json(const DrivingParams& p) {
  return {{"cruise_speed", p.cruise_speed},
          {"speed_gain", p.speed_gain},
          {"min_lookahead", p.min_lookahead},
          {"lookahead_time", p.lookahead_time},
          {"brake_accel", p.brake_accel},
          {"baseline", hazard_to_json(p.baseline)},
          {"cautious", hazard_to_json(p.cautious)}};
}

json to_json(const EnvConfig& c) {
  return {{"town", c.town},
          {"driving_policy", policy_name(c.driving_policy)},
          {"reward", reward_name(c.reward)},
          {"spawn",
           {{"angle_min", c.spawn.angle_min},
            {"angle_max", c.spawn.angle_max},
            {"dist_min", c.spawn.dist_min},
            {"dist_max", c.spawn.dist_max}}},
          {"episode_ticks", c.episode_ticks},
          {"ticks_per_second", c.ticks_per_second},
          {"action_repeat", c.action_repeat},
          {"seed", c.seed},
          {"route_length", c.route_length},
          {"driving", to_json(c.driving)}};
}

json to_json(const PpoConfig& c) {
  return {{"total_steps", c.total_steps},
          {"epochs", c.epochs},
          {"steps_per_update", c.steps_per_update},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"init_log_std", c.init_log_std},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every}};
}

json to_json(const EvalSpec& c) {
  json policies = json::array();
  for (auto p : c.policies) policies.push_back(policy_name(p));
  return {{"checkpoint", c.checkpoint},
          {"towns", c.towns},
          {"policies", policies},
          {"episodes_per_cell", c.episodes_per_cell},
          {"base_seed", c.base_seed},
          {"deterministic_policy", c.deterministic_policy},
          {"save_logs", c.save_logs}};
}

json to_json(const RunConfig& c) {
  return {{"version", c.version},
          {"output_dir", c.output_dir},
          {"env", to_json(c.env)},
          {"ppo", to_json(c.ppo)},
          {"eval", to_json(c.eval)}};
}

DrivingParams driving_params_from_json(const json& j) {
  constexpr const char* where = "env.driving";
  reject_unknown(j, {"cruise_speed", "speed_gain", "min_lookahead",
                     "lookahead_time", "brake_accel", "baseline", "cautious"},
                 where);
  DrivingParams p;
  read(j, "cruise_speed", p.cruise_speed, where);
  read(j, "speed_gain", p.speed_gain, where);
  read(j, "min_lookahead", p.min_lookahead, where);
  read(j, "lookahead_time", p.lookahead_time, where);
  read(j, "brake_accel", p.brake_accel, where);
  if (j.contains("baseline")) {
    p.baseline = hazard_from_json(j["baseline"], p.baseline, "env.driving.baseline");
  }
  if (j.contains("cautious")) {
    p.cautious = hazard_from_json(j["cautious"], p.cautious, "env.driving.cautious");
  }
  return p;
}

EnvConfig env_config_from_json(const json& j) {
  constexpr const char* where = "env";
  reject_unknown(j, {"town", "driving_policy", "reward", "spawn",
                     "episode_ticks", "ticks_per_second", "action_repeat",
                     "seed", "route_length", "driving"},
                 where);
  EnvConfig c;
  read(j, "town", c.town, where);
  if (j.contains("driving_policy")) {
    std::string name;
    read(j, "driving_policy", name, where);
    c.driving_policy = wrap_name_error([&] { return policy_from_name(name); }, where);
  }
  if (j.contains("reward")) {
    std::string name;
    read(j, "reward", name, where);
    c.reward = wrap_name_error([&] { return reward_from_name(name); }, where);
  }
  if (j.contains("spawn")) {
    const json& s = j["spawn"];
    reject_unknown(s, {"angle_min", "angle_max", "dist_min", "dist_max"},
                   "env.spawn");
    read(s, "angle_min", c.spawn.angle_min, "env.spawn");
    read(s, "angle_max", c.spawn.angle_max, "env.spawn");
    read(s, "dist_min", c.spawn.dist_min, "env.spawn");
    read(s, "dist_max", c.spawn.dist_max, "env.spawn");
  }
  read(j, "episode_ticks", c.episode_ticks, where);
  read(j, "ticks_per_second", c.ticks_per_second, where);
  read(j, "action_repeat", c.action_repeat, where);
  read(j, "seed", c.seed, where);
  read(j, "route_length", c.route_length, where);
  if (j.contains("driving")) c.driving = driving_params_from_json(j["driving"]);
  return c;
}

PpoConfig ppo_config_from_json(const json& j) {
  constexpr const char* where = "ppo";
  reject_unknown(j, {"total_steps", "epochs", "steps_per_update", "batch_size",
                     "lr", "gamma", "gae_lambda", "clip", "value_coef",
                     "entropy_coef", "max_grad_norm", "init_log_std", "seed", "checkpoint_every"},
                 where);
  PpoConfig c;
  read(j, "total_steps", c.total_steps, where);
  read(j, "epochs", c.epochs, where);
  read(j, "steps_per_update", c.steps_per_update, where);
  read(j, "batch_size", c.batch_size, where);
  read(j, "lr", c.lr, where);
  read(j, "gamma", c.gamma, where);
  read(j, "gae_lambda", c.gae_lambda, where);
  read(j, "clip", c.clip, where);
  read(j, "value_coef", c.value_coef, where);
  read(j, "entropy_coef", c.entropy_coef, where);
  read(j, "seed", c.seed, where);
  read(j, "max_grad_norm", c.max_grad_norm, where);
  read(j, "init_log_std", c.init_log_std, where);
  read(j, "checkpoint_every", c.checkpoint_every, where);
  return c;
}

EvalSpec eval_spec_from_json(const json& j) {
  constexpr const char* where = "eval";
  reject_unknown(j, {"checkpoint", "towns", "policies", "episodes_per_cell",
                     "base_seed", "deterministic_policy", "save_logs"},
                 where);
  EvalSpec c;
  read(j, "checkpoint", c.checkpoint, where);
  read(j, "towns", c.towns, where);
  if (j.contains("policies")) {
    std::vector<std::string> names;
    read(j, "policies", names, where);
    c.policies.clear();
    for (const auto& n : names) {
      c.policies.push_back(
          wrap_name_error([&] { return policy_from_name(n); }, where));
    }
  }
  read(j, "episodes_per_cell", c.episodes_per_cell, where);
  read(j, "base_seed", c.base_seed, where);
  read(j, "deterministic_policy", c.deterministic_policy, where);
  read(j, "save_logs", c.save_logs, where);
  return c;
}

RunConfig run_config_from_json(const json& j) {
  constexpr const char* where = "config";
  reject_unknown(j, {"version", "output_dir", "env", "ppo", "eval"}, where);
  RunConfig c;
  if (!j.contains("version")) throw ConfigError("config: missing 'version'");
  read(j, "version", c.version, where);
  read(j, "output_dir", c.output_dir, where);
  if (j.contains("env")) c.env = env_config_from_json(j["env"]);
  if (j.contains("ppo")) c.ppo = ppo_config_from_json(j["ppo"]);
  if (j.contains("eval")) c.eval = eval_spec_from_json(j["eval"]);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {
std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace

std::string config_hash(const EnvConfig& c) {
  return hex64(fnv1a64(to_json(c).dump()));
}

std::string config_hash(const RunConfig& c) {
  return hex64(fnv1a64(to_json(c).dump()));
}

}  // namespace pedsim

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "pedsim/agents.hpp"
#include "pedsim/geom.hpp"
#include "pedsim/rng.hpp"
#include "pedsim/world.hpp"

namespace pedsim {

enum class RewardId { R1, R2 };

const char* reward_name(RewardId id);
RewardId reward_from_name(std::string_view name);

struct EnvConfig {
  std::string town = "TownA";  // built-in name or path to a town JSON file
  DrivingPolicyId driving_policy = DrivingPolicyId::Baseline;
  RewardId reward = RewardId::R2;
  SpawnSpec spawn;
  int episode_ticks = 600;
  int ticks_per_second = 20;
  int action_repeat = 20;
  std::uint64_t seed = 1;
  double route_length = 400.0;  // m of lane graph sampled per episode
  DrivingParams driving;

  void validate() const;
  double dt() const { return 1.0 / ticks_per_second; }
  int horizon() const { return episode_ticks / action_repeat; }
};

// Pedestrian-relative view of the vehicle.
struct Observation {
  double alpha = 0.0;  // bearing of the vehicle from the pedestrian heading
  double d = 0.0;      // distance, m
  double beta = 0.0;   // direction of the relative velocity, pedestrian frame
  double v = 0.0;      // relative speed, m/s

  static constexpr std::array<double, 4> kScale{kPi, 30.0, kPi, 15.0};

  std::array<double, 4> normalized() const {
    return {alpha / kScale[0], d / kScale[1], beta / kScale[2], v / kScale[3]};
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Walking command in the pedestrian frame; clamped on construction.
struct PedestrianAction {
  double theta = 0.0;  // heading change, [-pi, pi]
  double speed = 0.0;  // m/s, [0, 3.5]

  static PedestrianAction clamped(double theta, double speed);
};

struct CollisionEvent {
  bool occurred = false;
  // The remaining fields are meaningful only when occurred is set.
  Zone zone = Zone::Side;
  double v_c = 0.0;  // vehicle speed at contact
  int tick = -1;

  static CollisionEvent none() { return {}; }
  static CollisionEvent hit(Zone zone, double v_c, int tick) {
    return {true, zone, v_c, tick};
  }
};

struct EnvState {
  VehicleState vehicle;
  PedestrianState pedestrian;
  std::shared_ptr<const Route> route;
  int tick = 0;
  bool done = false;
  CollisionEvent collision;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
  CollisionEvent event;
};

double reward_r1(const CollisionEvent& e);
double reward_r2(const CollisionEvent& e);
double reward_for(RewardId id, const CollisionEvent& e);

Observation observe(const EnvState& s);

// Called with the state after every simulated tick.
using TickSink = std::function<void(const EnvState&)>;

// Pedestrian MDP over one town. Holds only immutable data; all episode state
// lives in EnvState values, so one PedestrianEnv can serve many rollouts.
class PedestrianEnv {
 public:
  explicit PedestrianEnv(EnvConfig cfg);
  PedestrianEnv(EnvConfig cfg, std::shared_ptr<const TownMap> map);

  const EnvConfig& config() const { return cfg_; }
  const TownMap& map() const { return *map_; }
  std::shared_ptr<const TownMap> shared_map() const { return map_; }

  std::pair<EnvState, Observation> reset(Rng& rng) const;
  StepResult step(const EnvState& s, const PedestrianAction& a,
                  const TickSink& sink = {}) const;

 private:
  EnvConfig cfg_;
  std::shared_ptr<const TownMap> map_;
};

// Built-in town by name, or a town JSON file when the name ends in ".json".
std::shared_ptr<const TownMap> load_town(const std::string& name);

}  // namespace pedsim

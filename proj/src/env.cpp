#include "pedsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pedsim/error.hpp"

namespace pedsim {

const char* reward_name(RewardId id) { return id == RewardId::R1 ? "R1" : "R2"; }

RewardId reward_from_name(std::string_view name) {
  if (name == "R1") return RewardId::R1;
  if (name == "R2") return RewardId::R2;
  throw Error("unknown reward: " + std::string(name));
}

void EnvConfig::validate() const {
  spawn.validate();
  if (episode_ticks <= 0 || ticks_per_second <= 0 || action_repeat <= 0) {
    throw ConfigError("env: tick counts must be positive");
  }
  if (episode_ticks % action_repeat != 0) {
    throw ConfigError("env: episode_ticks must be divisible by action_repeat");
  }
  if (!(route_length > 0.0) || route_length > kMaxRouteLength) {
    throw ConfigError("env: route_length must be in (0, 1000]");
  }
  if (!(driving.cruise_speed > 0.0) ||
      driving.cruise_speed > kMaxVehicleSpeed) {
    throw ConfigError("env: cruise_speed must be in (0, 15]");
  }
}

PedestrianAction PedestrianAction::clamped(double theta, double speed) {
  return {std::clamp(theta, -kPi, kPi),
          std::clamp(speed, 0.0, kMaxPedestrianSpeed)};
}

double reward_r1(const CollisionEvent& e) { return e.occurred ? 1.0 : 0.0; }

double reward_r2(const CollisionEvent& e) {
  if (!e.occurred) return 0.0;
  if (e.zone == Zone::Front) return std::max(3.0, 1.5 * e.v_c);
  return std::max(1.0, 0.5 * e.v_c);
}

double reward_for(RewardId id, const CollisionEvent& e) {
  return id == RewardId::R1 ? reward_r1(e) : reward_r2(e);
}

Observation observe(const EnvState& s) {
  const Pose2D frame{s.pedestrian.position.x, s.pedestrian.position.y,
                     s.pedestrian.heading};
  const Vec2 rel = world_to_frame(frame, s.vehicle.pose.position());
  const Vec2 w = s.vehicle.velocity() - s.pedestrian.velocity();

  Observation o;
  o.alpha = wrap_angle(std::atan2(rel.y, rel.x));
  o.d = rel.norm();
  o.v = w.norm();
  if (o.v >= 1e-6) {
    // direction only: rotate into the pedestrian frame
    const double c = std::cos(frame.heading);
    const double sn = std::sin(frame.heading);
    o.beta = wrap_angle(std::atan2(-sn * w.x + c * w.y, c * w.x + sn * w.y));
  }
  return o;
}

std::shared_ptr<const TownMap> load_town(const std::string& name) {
  if (name.size() > 5 && name.ends_with(".json")) {
    std::ifstream in(name);
    if (!in) throw Error("cannot open town file: " + name);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("town file " + name + ": " + e.what());
    }
    return std::make_shared<const TownMap>(town_from_json(j));
  }
  return std::make_shared<const TownMap>(build_town(name));
}

PedestrianEnv::PedestrianEnv(EnvConfig cfg)
    : PedestrianEnv(cfg, load_town(cfg.town)) {}

PedestrianEnv::PedestrianEnv(EnvConfig cfg, std::shared_ptr<const TownMap> map)
    : cfg_(std::move(cfg)), map_(std::move(map)) {
  cfg_.validate();
}

std::pair<EnvState, Observation> PedestrianEnv::reset(Rng& rng) const {
  constexpr int kRetries = 10;
  for (int attempt = 0; attempt <= kRetries; ++attempt) {
    auto route = std::make_shared<const Route>(sample_route(
        *map_, rng, cfg_.route_length, cfg_.driving.cruise_speed));
    const Vec2 start = route->waypoints.front().position;
    const Pose2D pose{start.x, start.y, wrap_angle(route->heading_at(0.0))};
    Pose2D spawn;
    try {
      spawn = sample_spawn(pose, cfg_.spawn, *map_, rng);
    } catch (const Error&) {
      continue;
    }
    EnvState s;
    s.vehicle = VehicleState{pose, 0.0, 0.0};
    s.pedestrian.position = spawn.position();
    s.pedestrian.heading = spawn.heading;
    s.route = std::move(route);
    const Observation o = observe(s);
    return {std::move(s), o};
  }
  throw Error("reset: spawn failed on every sampled route");
}

StepResult PedestrianEnv::step(const EnvState& s, const PedestrianAction& a,
                               const TickSink& sink) const {
  if (s.done) throw Error("step: episode already finished");
  const PedestrianAction act = PedestrianAction::clamped(a.theta, a.speed);

  StepResult r;
  EnvState& n = r.state;
  n = s;
  n.pedestrian.heading = wrap_angle(s.pedestrian.heading + act.theta);
  n.pedestrian.speed = act.speed;

  const double dt = cfg_.dt();
  const Route& route = *n.route;
  for (int k = 0; k < cfg_.action_repeat && n.tick < cfg_.episode_ticks; ++k) {
    const VehicleControl u = drive(cfg_.driving_policy, n.vehicle, route,
                                   n.pedestrian, cfg_.driving);
    n.vehicle = step_vehicle(n.vehicle, u, dt);
    if (!route.empty()) {
      n.vehicle.route_progress =
          route.project(n.vehicle.pose.position(), n.vehicle.route_progress);
    }
    n.pedestrian = step_pedestrian(n.pedestrian, dt, map_->walkable_bounds);
    ++n.tick;

    const ContactReport c = collide_box_circle(
        n.vehicle.footprint(), n.pedestrian.position, n.pedestrian.radius);
    if (c.hit()) {
      n.collision = CollisionEvent::hit(c.contact->zone, n.vehicle.speed, n.tick);
    }
    n.done = n.collision.occurred || n.tick >= cfg_.episode_ticks;
    if (sink) sink(n);
    if (n.collision.occurred) break;
  }

  r.observation = observe(n);
  r.event = n.collision;
  r.reward = reward_for(cfg_.reward, n.collision);
  r.done = n.done;
  return r;
}

}  // namespace pedsim

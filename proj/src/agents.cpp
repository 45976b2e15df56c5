#include "pedsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pedsim/error.hpp"

namespace pedsim {

VehicleControl::VehicleControl(double accel, double steer)
    : accel_(std::clamp(accel, kMinAccel, kMaxAccel)),
      steer_(std::clamp(steer, -kMaxSteer, kMaxSteer)) {}

const char* policy_name(DrivingPolicyId id) {
  switch (id) {
    case DrivingPolicyId::Baseline:
      return "Baseline";
    case DrivingPolicyId::Cautious:
      return "Cautious";
    case DrivingPolicyId::Oblivious:
      return "Oblivious";
  }
  return "Baseline";
}

DrivingPolicyId policy_from_name(std::string_view name) {
  if (name == "Baseline") return DrivingPolicyId::Baseline;
  if (name == "Cautious") return DrivingPolicyId::Cautious;
  if (name == "Oblivious") return DrivingPolicyId::Oblivious;
  throw Error("unknown driving policy: " + std::string(name));
}

VehicleState step_vehicle(const VehicleState& s, const VehicleControl& u,
                          double dt) {
  VehicleState n = s;
  const double yaw = s.speed / kWheelbase * std::tan(u.steer()) * dt;
  const double mid = s.pose.heading + 0.5 * yaw;
  n.pose.x = s.pose.x + s.speed * std::cos(mid) * dt;
  n.pose.y = s.pose.y + s.speed * std::sin(mid) * dt;
  n.pose.heading = wrap_angle(s.pose.heading + yaw);
  n.speed = std::clamp(s.speed + u.accel() * dt, 0.0, kMaxVehicleSpeed);
  return n;
}

PedestrianState step_pedestrian(const PedestrianState& s, double dt,
                                const Rect& bounds) {
  PedestrianState n = s;
  n.position = bounds.clamp(s.position + (s.speed * dt) * heading_vector(s.heading));
  return n;
}

namespace {

// Liang-Barsky clip of segment a->b against an axis-aligned rectangle.
bool segment_hits_rect(Vec2 a, Vec2 b, double x0, double x1, double y0,
                       double y1) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

bool hazard_ahead(const HazardRule& rule, const VehicleState& v,
                  const PedestrianState& ped) {
  const Vec2 now = world_to_frame(v.pose, ped.position);
  const Vec2 later = world_to_frame(
      v.pose, ped.position + rule.horizon * ped.velocity());
  const double length =
      std::max(rule.min_length, rule.length_time * v.speed);
  return segment_hits_rect(now, later, 0.0, kVehicleHalfLength + length,
                           -rule.half_width, rule.half_width);
}

VehicleControl drive(DrivingPolicyId policy, const VehicleState& v,
                     const Route& route, const PedestrianState& ped,
                     const DrivingParams& params) {
  if (route.empty()) return VehicleControl{};

  // Pure pursuit on a lookahead point ahead of the current projection.
  const double lookahead =
      std::max(params.min_lookahead, params.lookahead_time * v.speed);
  const Vec2 target =
      world_to_frame(v.pose, route.point_at(v.route_progress + lookahead));
  const double d2 = target.dot(target);
  const double curvature = d2 > 1e-12 ? 2.0 * target.y / d2 : 0.0;
  const double steer = std::atan(kWheelbase * curvature);

  double target_speed = route.speed_at(v.route_progress);
  if (v.route_progress >= route.total_length - 1e-6) target_speed = 0.0;

  const HazardRule* rule = nullptr;
  if (policy == DrivingPolicyId::Baseline) rule = &params.baseline;
  if (policy == DrivingPolicyId::Cautious) rule = &params.cautious;

  if (rule != nullptr) {
    if (hazard_ahead(*rule, v, ped)) {
      return VehicleControl{params.brake_accel, steer};
    }
    if (rule->speed_cap > 0.0 &&
        distance(v.pose.position(), ped.position) <= rule->cap_radius) {
      target_speed = std::min(target_speed, rule->speed_cap);
    }
  }
  return VehicleControl{params.speed_gain * (target_speed - v.speed), steer};
}

}  // namespace pedsim

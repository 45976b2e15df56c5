#pragma once

#include <string_view>

#include "pedsim/geom.hpp"
#include "pedsim/world.hpp"

namespace pedsim {

inline constexpr double kVehicleHalfLength = 2.25;
inline constexpr double kVehicleHalfWidth = 1.0;
inline constexpr double kWheelbase = 2.7;
inline constexpr double kMaxVehicleSpeed = 15.0;
inline constexpr double kMinAccel = -8.0;
inline constexpr double kMaxAccel = 3.0;
inline constexpr double kMaxSteer = 0.61;
inline constexpr double kPedestrianRadius = 0.35;
inline constexpr double kMaxPedestrianSpeed = 3.5;

struct VehicleState {
  Pose2D pose;
  double speed = 0.0;           // m/s, [0, 15]
  double route_progress = 0.0;  // arc length along the route

  OrientedBox footprint() const {
    return OrientedBox{pose, kVehicleHalfLength, kVehicleHalfWidth};
  }
  Vec2 velocity() const { return speed * heading_vector(pose.heading); }
};

struct PedestrianState {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;  // m/s, [0, 3.5]
  double radius = kPedestrianRadius;

  Vec2 velocity() const { return speed * heading_vector(heading); }
};

// Bounds are enforced by construction.
class VehicleControl {
 public:
  VehicleControl() = default;
  VehicleControl(double accel, double steer);

  double accel() const { return accel_; }
  double steer() const { return steer_; }

 private:
  double accel_ = 0.0;
  double steer_ = 0.0;
};

enum class DrivingPolicyId { Baseline, Cautious, Oblivious };

const char* policy_name(DrivingPolicyId id);
DrivingPolicyId policy_from_name(std::string_view name);

// Hazard-braking rule: brake if the pedestrian's path over the next
// `horizon` seconds enters a corridor ahead of the vehicle.
struct HazardRule {
  double horizon = 1.0;         // s of constant-velocity extrapolation
  double min_length = 6.0;      // m
  double length_time = 1.5;     // s; corridor length = max(min, time * v)
  double half_width = 2.0;      // m
  double speed_cap = 0.0;       // m/s; 0 disables the proximity cap
  double cap_radius = 0.0;      // m

  friend bool operator==(const HazardRule&, const HazardRule&) = default;
};

struct DrivingParams {
  double cruise_speed = kDefaultCruiseSpeed;
  double speed_gain = 1.0;       // 1/s, proportional speed tracking
  double min_lookahead = 4.0;    // m
  double lookahead_time = 1.2;   // s
  double brake_accel = kMinAccel;
  HazardRule baseline{1.0, 6.0, 1.5, 2.0, 0.0, 0.0};
  HazardRule cautious{2.0, 10.0, 2.5, 3.0, 6.0, 20.0};

  friend bool operator==(const DrivingParams&, const DrivingParams&) = default;
};

// Kinematic bicycle step. Position advances along the midpoint heading of
// the step, which keeps constant-steer arcs on their true circle.
VehicleState step_vehicle(const VehicleState& s, const VehicleControl& u,
                          double dt);

PedestrianState step_pedestrian(const PedestrianState& s, double dt,
                                const Rect& bounds);

// True if the segment from the pedestrian's position to its extrapolation
// over `rule.horizon` intersects the corridor ahead of the vehicle.
bool hazard_ahead(const HazardRule& rule, const VehicleState& v,
                  const PedestrianState& ped);

VehicleControl drive(DrivingPolicyId policy, const VehicleState& v,
                     const Route& route, const PedestrianState& ped,
                     const DrivingParams& params = {});

}  // namespace pedsim

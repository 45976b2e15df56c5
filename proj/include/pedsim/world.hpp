#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pedsim/geom.hpp"
#include "pedsim/rng.hpp"

namespace pedsim {

inline constexpr double kLaneWidth = 3.5;
inline constexpr double kJunctionRadius = 10.0;   // lanes are trimmed here
inline constexpr double kSlowdownMargin = 10.0;   // beyond the junction area
inline constexpr double kSlowdownFactor = 0.6;
inline constexpr double kMaxRouteSpacing = 2.0;
inline constexpr double kMaxRouteLength = 1000.0;
inline constexpr double kDefaultCruiseSpeed = 8.5;

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  Vec2 clamp(Vec2 p) const;
};

// Directed lane centerline. Connector lanes are the short paths through a
// junction or around a dead-end loop.
struct Lane {
  std::vector<Vec2> points;
  double width = kLaneWidth;
  bool connector = false;

  double length() const;
};

struct LaneLink {
  std::size_t from = 0;
  std::size_t to = 0;
};

struct TownMap {
  std::string name;
  std::vector<Lane> lanes;
  std::vector<LaneLink> adjacency;
  std::vector<Vec2> junctions;  // T-junction centers
  std::vector<Vec2> dead_ends;  // loop centers at road ends
  Rect walkable_bounds;
  std::vector<OrientedBox> static_obstacles;

  std::vector<std::size_t> successors(std::size_t lane) const;
  bool blocked(Vec2 p) const;  // inside any static obstacle
};

struct RoutePoint {
  Vec2 position;
  double target_speed = 0.0;
};

struct Route {
  std::vector<RoutePoint> waypoints;
  std::vector<double> arc;  // cumulative arc length at each waypoint
  double total_length = 0.0;

  bool empty() const { return waypoints.size() < 2; }
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  double speed_at(double s) const;
  // Arc length of the closest route point to `p`, searched within
  // [hint - behind, hint + ahead].
  double project(Vec2 p, double hint, double behind = 2.0,
                 double ahead = 20.0) const;
  double distance_to(Vec2 p, double hint, double behind = 2.0,
                     double ahead = 20.0) const;

  // Builds a route from raw points, resampling to <= kMaxRouteSpacing.
  static Route from_points(const std::vector<RoutePoint>& raw);

 private:
  std::size_t segment_at(double s) const;
};

struct SpawnSpec {
  double angle_min = -kPi / 3.0;
  double angle_max = kPi / 3.0;
  double dist_min = 7.0;
  double dist_max = 30.0;

  void validate() const;
};

// Throws on an unknown name. Names: "TownA" (training), "TownB" (testing).
TownMap build_town(std::string_view name);

// Checks polyline and link invariants; throws Error with the first problem.
void validate_town(const TownMap& map);

Route sample_route(const TownMap& map, Rng& rng, double min_length,
                   double cruise_speed = kDefaultCruiseSpeed);

// Point at `dist` along bearing `bearing` from the vehicle's forward axis.
Vec2 sector_point(const Pose2D& vehicle, double bearing, double dist);

Pose2D sample_spawn(const Pose2D& vehicle, const SpawnSpec& spec,
                    const TownMap& map, Rng& rng);

nlohmann::json town_to_json(const TownMap& map);
TownMap town_from_json(const nlohmann::json& j);

}  // namespace pedsim

#include "pedsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pedsim/error.hpp"

namespace pedsim {

namespace {

constexpr double kDeadEndTrim = 20.0;    // lane end before a dead-end node
constexpr double kLoopRadius = 6.0;      // turnaround circle at a dead end
constexpr double kLoopApproach = 14.0;   // S-curve length into the loop
constexpr double kArcSampleSpacing = 1.0;
constexpr int kBezierSamples = 16;

Vec2 unit(Vec2 v) {
  const double n = v.norm();
  return {v.x / n, v.y / n};
}

Vec2 right_normal(Vec2 d) { return {d.y, -d.x}; }

double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

// Replaces interior corners with circular arcs of the given radii.
std::vector<Vec2> fillet(const std::vector<Vec2>& v,
                         const std::vector<double>& radii) {
  std::vector<Vec2> out{v.front()};
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const Vec2 d1 = unit(v[i] - v[i - 1]);
    const Vec2 d2 = unit(v[i + 1] - v[i]);
    const double turn =
        std::atan2(d1.x * d2.y - d1.y * d2.x, d1.dot(d2));
    const double r = radii.at(i - 1);
    const double t = r * std::tan(std::abs(turn) / 2.0);
    const Vec2 a = v[i] - t * d1;
    const Vec2 left{-d1.y, d1.x};
    const Vec2 center = a + (turn > 0 ? r : -r) * left;
    const double a0 = std::atan2(a.y - center.y, a.x - center.x);
    const int m = std::max(2, static_cast<int>(std::ceil(
                                  r * std::abs(turn) / kArcSampleSpacing)));
    for (int k = 0; k <= m; ++k) {
      const double ang = a0 + turn * k / m;
      out.push_back(center + r * Vec2{std::cos(ang), std::sin(ang)});
    }
  }
  out.push_back(v.back());
  return out;
}

// Point at arc length s along a polyline (clamped).
Vec2 polyline_point(const std::vector<Vec2>& pts, double s) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    if (acc + seg >= s) {
      const double f = seg > 0 ? (s - acc) / seg : 0.0;
      return pts[i - 1] + f * (pts[i] - pts[i - 1]);
    }
    acc += seg;
  }
  return pts.back();
}

std::vector<Vec2> trim(const std::vector<Vec2>& pts, double head, double tail) {
  const double len = polyline_length(pts);
  const double end = len - tail;
  std::vector<Vec2> out{polyline_point(pts, head)};
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    acc += distance(pts[i - 1], pts[i]);
    if (acc > head + 1e-9 && acc < end - 1e-9) out.push_back(pts[i]);
  }
  out.push_back(polyline_point(pts, end));
  return out;
}

std::vector<Vec2> offset_right(const std::vector<Vec2>& pts, double off) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 prev = pts[i == 0 ? 0 : i - 1];
    const Vec2 next = pts[i + 1 < pts.size() ? i + 1 : i];
    out.push_back(pts[i] + off * right_normal(unit(next - prev)));
  }
  return out;
}

std::vector<Vec2> bezier(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3) {
  std::vector<Vec2> out;
  for (int k = 0; k <= kBezierSamples; ++k) {
    const double t = static_cast<double>(k) / kBezierSamples;
    const double u = 1.0 - t;
    out.push_back(u * u * u * p0 + 3 * u * u * t * p1 + 3 * u * t * t * p2 +
                  t * t * t * p3);
  }
  return out;
}

Vec2 end_direction(const Lane& l) {
  return unit(l.points.back() - l.points[l.points.size() - 2]);
}
Vec2 start_direction(const Lane& l) { return unit(l.points[1] - l.points[0]); }

class TownBuilder {
 public:
  enum class NodeKind { Junction, DeadEnd };

  TownBuilder(std::string name, Rect bounds) {
    map_.name = std::move(name);
    map_.walkable_bounds = bounds;
  }

  int node(Vec2 p, NodeKind kind) {
    nodes_.push_back({p, kind, {}, {}});
    if (kind == NodeKind::Junction) {
      map_.junctions.push_back(p);
    } else {
      map_.dead_ends.push_back(p);
    }
    return static_cast<int>(nodes_.size()) - 1;
  }

  void road(int a, int b, std::vector<Vec2> vertices,
            std::vector<double> radii = {}) {
    const int road_id = road_count_++;
    const auto center = fillet(vertices, radii);
    const auto trimmed = trim(center, trim_for(a), trim_for(b));
    const double half = kLaneWidth / 2.0;

    const std::size_t fwd = add_lane(offset_right(trimmed, half), false);
    std::vector<Vec2> reversed(trimmed.rbegin(), trimmed.rend());
    const std::size_t bwd = add_lane(offset_right(reversed, half), false);

    nodes_[a].outgoing.push_back({fwd, road_id});
    nodes_[b].incoming.push_back({fwd, road_id});
    nodes_[b].outgoing.push_back({bwd, road_id});
    nodes_[a].incoming.push_back({bwd, road_id});
  }

  void obstacle(double x, double y, double heading, double half_length,
                double half_width) {
    map_.static_obstacles.push_back(
        OrientedBox{Pose2D{x, y, heading}, half_length, half_width});
  }

  TownMap finish() {
    for (const auto& n : nodes_) {
      if (n.kind == NodeKind::Junction) {
        connect_junction(n);
      } else {
        connect_dead_end(n);
      }
    }
    validate_town(map_);
    return std::move(map_);
  }

 private:
  struct Port {
    std::size_t lane;
    int road;
  };
  struct Node {
    Vec2 pos;
    NodeKind kind;
    std::vector<Port> incoming;
    std::vector<Port> outgoing;
  };

  double trim_for(int n) const {
    return nodes_[n].kind == NodeKind::Junction ? kJunctionRadius
                                                : kDeadEndTrim;
  }

  std::size_t add_lane(std::vector<Vec2> pts, bool connector) {
    map_.lanes.push_back(Lane{std::move(pts), kLaneWidth, connector});
    return map_.lanes.size() - 1;
  }

  void link(std::size_t from, std::size_t via, std::size_t to) {
    map_.adjacency.push_back({from, via});
    map_.adjacency.push_back({via, to});
  }

  void connect_junction(const Node& n) {
    for (const auto& in : n.incoming) {
      for (const auto& out : n.outgoing) {
        if (in.road == out.road) continue;
        const Lane& li = map_.lanes[in.lane];
        const Lane& lo = map_.lanes[out.lane];
        const Vec2 p0 = li.points.back();
        const Vec2 p3 = lo.points.front();
        const double k = 0.39 * distance(p0, p3);
        auto pts = bezier(p0, p0 + k * end_direction(li),
                          p3 - k * start_direction(lo), p3);
        const std::size_t c = add_lane(std::move(pts), true);
        link(in.lane, c, out.lane);
      }
    }
  }

  void connect_dead_end(const Node& n) {
    if (n.incoming.size() != 1 || n.outgoing.size() != 1) {
      throw Error("dead end must terminate exactly one road");
    }
    const Lane& li = map_.lanes[n.incoming[0].lane];
    const Lane& lo = map_.lanes[n.outgoing[0].lane];
    const Vec2 e_in = li.points.back();
    const Vec2 e_out = lo.points.front();
    const Vec2 d = end_direction(li);
    const Vec2 r = right_normal(d);
    const Vec2 o = 0.5 * (e_in + e_out) + kLoopApproach * d;
    const Vec2 a = o + kLoopRadius * r;
    const Vec2 b = o - kLoopRadius * r;
    const double h = kLoopApproach / 2.0;

    std::vector<Vec2> pts = bezier(e_in, e_in + h * d, a - h * d, a);
    const double a0 = std::atan2(r.y, r.x);
    const int m = static_cast<int>(
        std::ceil(kPi * kLoopRadius / kArcSampleSpacing));
    for (int k = 1; k <= m; ++k) {
      const double ang = a0 + kPi * k / m;
      pts.push_back(o + kLoopRadius * Vec2{std::cos(ang), std::sin(ang)});
    }
    pts.back() = b;
    auto tail = bezier(b, b - h * d, e_out + h * d, e_out);
    pts.insert(pts.end(), tail.begin() + 1, tail.end());
    const std::size_t c = add_lane(std::move(pts), true);
    link(n.incoming[0].lane, c, n.outgoing[0].lane);
  }

  TownMap map_;
  std::vector<Node> nodes_;
  int road_count_ = 0;
};

using NodeKind = TownBuilder::NodeKind;

// 200 m x 200 m ring with a central north-south road and a western spur;
// four T-junctions.
TownMap town_a() {
  TownBuilder b("TownA", Rect{-35, -35, 235, 235});
  const int j1 = b.node({100, 0}, NodeKind::Junction);
  const int j2 = b.node({100, 200}, NodeKind::Junction);
  const int j3 = b.node({0, 100}, NodeKind::Junction);
  const int j4 = b.node({100, 100}, NodeKind::Junction);
  b.road(j1, j3, {{100, 0}, {0, 0}, {0, 100}}, {20});
  b.road(j3, j2, {{0, 100}, {0, 200}, {100, 200}}, {20});
  b.road(j2, j1, {{100, 200}, {200, 200}, {200, 0}, {100, 0}}, {20, 20});
  b.road(j1, j4, {{100, 0}, {100, 100}});
  b.road(j4, j2, {{100, 100}, {100, 200}});
  b.road(j3, j4, {{0, 100}, {100, 100}});
  b.obstacle(50, 50, 0, 15, 15);
  b.obstacle(50, 150, 0, 15, 15);
  b.obstacle(150, 100, kPi / 2, 60, 15);
  return b.finish();
}

// 250 m x 150 m: a loop whose north-east corner is a wide curve, a
// north-south connector, and a cul-de-sac spur; three T-junctions.
TownMap town_b() {
  TownBuilder b("TownB", Rect{-35, -35, 285, 185});
  const int k1 = b.node({90, 0}, NodeKind::Junction);
  const int k2 = b.node({90, 150}, NodeKind::Junction);
  const int k3 = b.node({90, 75}, NodeKind::Junction);
  const int d = b.node({170, 75}, NodeKind::DeadEnd);
  b.road(k1, k2, {{90, 0}, {0, 0}, {0, 150}, {90, 150}}, {20, 20});
  b.road(k2, k1, {{90, 150}, {250, 150}, {250, 0}, {90, 0}}, {50, 20});
  b.road(k1, k3, {{90, 0}, {90, 75}});
  b.road(k3, k2, {{90, 75}, {90, 150}});
  b.road(k3, d, {{90, 75}, {170, 75}});
  b.obstacle(45, 75, kPi / 2, 40, 11);
  b.obstacle(213, 50, kPi / 2, 12, 4);
  return b.finish();
}

double slowdown_scale(const TownMap& map, Vec2 p) {
  for (const Vec2& j : map.junctions) {
    if (distance(p, j) <= kJunctionRadius + kSlowdownMargin) {
      return kSlowdownFactor;
    }
  }
  for (const Vec2& d : map.dead_ends) {
    if (distance(p, d) <= kDeadEndTrim + kSlowdownMargin) {
      return kSlowdownFactor;
    }
  }
  return 1.0;
}

}  // namespace

Vec2 Rect::clamp(Vec2 p) const {
  return {std::clamp(p.x, min_x, max_x), std::clamp(p.y, min_y, max_y)};
}

double Lane::length() const { return polyline_length(points); }

std::vector<std::size_t> TownMap::successors(std::size_t lane) const {
  std::vector<std::size_t> out;
  for (const auto& l : adjacency) {
    if (l.from == lane) out.push_back(l.to);
  }
  return out;
}

bool TownMap::blocked(Vec2 p) const {
  for (const auto& box : static_obstacles) {
    const Vec2 local = world_to_frame(box.center, p);
    if (std::abs(local.x) <= box.half_length &&
        std::abs(local.y) <= box.half_width) {
      return true;
    }
  }
  return false;
}

std::size_t Route::segment_at(double s) const {
  auto it = std::upper_bound(arc.begin(), arc.end(), s);
  std::size_t i = static_cast<std::size_t>(it - arc.begin());
  if (i == 0) i = 1;
  if (i >= arc.size()) i = arc.size() - 1;
  return i - 1;
}

Vec2 Route::point_at(double s) const {
  s = std::clamp(s, 0.0, total_length);
  const std::size_t i = segment_at(s);
  const double seg = arc[i + 1] - arc[i];
  const double f = (s - arc[i]) / seg;
  const Vec2 a = waypoints[i].position;
  const Vec2 b = waypoints[i + 1].position;
  return a + f * (b - a);
}

double Route::heading_at(double s) const {
  const std::size_t i = segment_at(std::clamp(s, 0.0, total_length));
  const Vec2 d = waypoints[i + 1].position - waypoints[i].position;
  return std::atan2(d.y, d.x);
}

double Route::speed_at(double s) const {
  s = std::clamp(s, 0.0, total_length);
  const std::size_t i = segment_at(s);
  const double f = (s - arc[i]) / (arc[i + 1] - arc[i]);
  return waypoints[i].target_speed +
         f * (waypoints[i + 1].target_speed - waypoints[i].target_speed);
}

double Route::project(Vec2 p, double hint, double behind, double ahead) const {
  const double lo = std::max(0.0, hint - behind);
  const double hi = std::min(total_length, hint + ahead);
  double best_s = std::clamp(hint, 0.0, total_length);
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = segment_at(lo); i + 1 < waypoints.size(); ++i) {
    if (arc[i] > hi) break;
    const Vec2 a = waypoints[i].position;
    const Vec2 ab = waypoints[i + 1].position - a;
    const double len2 = ab.dot(ab);
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    double s = arc[i] + t * (arc[i + 1] - arc[i]);
    if (s < lo || s > hi) {
      s = std::clamp(s, lo, hi);
      t = (s - arc[i]) / (arc[i + 1] - arc[i]);
    }
    const double d = distance(p, a + t * ab);
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  return best_s;
}

double Route::distance_to(Vec2 p, double hint, double behind,
                          double ahead) const {
  return distance(p, point_at(project(p, hint, behind, ahead)));
}

Route Route::from_points(const std::vector<RoutePoint>& raw) {
  std::vector<RoutePoint> pts;
  for (const auto& p : raw) {
    if (pts.empty() || distance(pts.back().position, p.position) > 1e-9) {
      pts.push_back(p);
    }
  }
  if (pts.size() < 2) throw Error("route needs at least two distinct points");

  Route r;
  r.waypoints.push_back(pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const RoutePoint& a = pts[i - 1];
    const RoutePoint& b = pts[i];
    const int pieces = std::max(
        1, static_cast<int>(std::ceil(distance(a.position, b.position) /
                                      kMaxRouteSpacing)));
    for (int k = 1; k <= pieces; ++k) {
      const double f = static_cast<double>(k) / pieces;
      r.waypoints.push_back(
          {a.position + f * (b.position - a.position),
           a.target_speed + f * (b.target_speed - a.target_speed)});
    }
  }
  r.arc.resize(r.waypoints.size());
  r.arc[0] = 0.0;
  for (std::size_t i = 1; i < r.waypoints.size(); ++i) {
    r.arc[i] = r.arc[i - 1] +
               distance(r.waypoints[i - 1].position, r.waypoints[i].position);
  }
  r.total_length = r.arc.back();
  return r;
}

void SpawnSpec::validate() const {
  if (!(angle_min < angle_max)) throw ConfigError("spawn: angle_min >= angle_max");
  if (!(dist_min > 0.0 && dist_min < dist_max)) {
    throw ConfigError("spawn: need 0 < dist_min < dist_max");
  }
}

TownMap build_town(std::string_view name) {
  if (name == "TownA") return town_a();
  if (name == "TownB") return town_b();
  throw Error("unknown town: " + std::string(name));
}

void validate_town(const TownMap& map) {
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    const auto& pts = map.lanes[i].points;
    if (pts.size() < 2) {
      throw Error("lane " + std::to_string(i) + " has fewer than 2 points");
    }
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (!(distance(pts[k - 1], pts[k]) > 0.0)) {
        throw Error("lane " + std::to_string(i) + " has a zero-length segment");
      }
    }
    if (!(map.lanes[i].width > 0.0)) {
      throw Error("lane " + std::to_string(i) + " has non-positive width");
    }
  }
  for (const auto& l : map.adjacency) {
    if (l.from >= map.lanes.size() || l.to >= map.lanes.size()) {
      throw Error("adjacency references a missing lane");
    }
    if (distance(map.lanes[l.from].points.back(),
                 map.lanes[l.to].points.front()) > 0.1) {
      throw Error("successor link joins endpoints more than 0.1 m apart");
    }
  }
}

Route sample_route(const TownMap& map, Rng& rng, double min_length,
                   double cruise_speed) {
  if (min_length > kMaxRouteLength) {
    throw Error("sample_route: requested length exceeds the route cap");
  }
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    if (!map.lanes[i].connector) starts.push_back(i);
  }
  if (starts.empty()) throw Error("sample_route: map has no lanes");

  std::size_t lane = starts[rng.uniform_index(starts.size())];
  std::vector<RoutePoint> raw;
  double length = 0.0;
  while (true) {
    for (const Vec2& p : map.lanes[lane].points) {
      if (!raw.empty()) length += distance(raw.back().position, p);
      raw.push_back({p, cruise_speed});
    }
    if (length >= min_length) break;
    const auto next = map.successors(lane);
    if (next.empty() || length > kMaxRouteLength) {
      throw Error("sample_route: lane graph exhausted before min_length");
    }
    lane = next[rng.uniform_index(next.size())];
  }

  Route route = Route::from_points(raw);
  for (auto& w : route.waypoints) {
    w.target_speed = cruise_speed * slowdown_scale(map, w.position);
  }
  return route;
}

Vec2 sector_point(const Pose2D& vehicle, double bearing, double dist) {
  return vehicle.position() + dist * heading_vector(vehicle.heading + bearing);
}

Pose2D sample_spawn(const Pose2D& vehicle, const SpawnSpec& spec,
                    const TownMap& map, Rng& rng) {
  spec.validate();
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double bearing = rng.uniform(spec.angle_min, spec.angle_max);
    const double dist = rng.uniform(spec.dist_min, spec.dist_max);
    const double heading = rng.uniform(-kPi, kPi);
    const Vec2 p = sector_point(vehicle, bearing, dist);
    if (map.walkable_bounds.contains(p) && !map.blocked(p)) {
      return Pose2D{p.x, p.y, wrap_angle(heading)};
    }
  }
  throw Error("sample_spawn: no valid spawn point after 100 attempts");
}

namespace {

nlohmann::json point_json(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }

Vec2 point_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error("town json: bad point");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json town_to_json(const TownMap& map) {
  using nlohmann::json;
  json lanes = json::array();
  for (const auto& l : map.lanes) {
    json pts = json::array();
    for (const auto& p : l.points) pts.push_back(point_json(p));
    lanes.push_back({{"points", pts}, {"width", l.width},
                     {"connector", l.connector}});
  }
  json adjacency = json::array();
  for (const auto& a : map.adjacency) adjacency.push_back({a.from, a.to});
  json junctions = json::array();
  for (const auto& p : map.junctions) junctions.push_back(point_json(p));
  json dead_ends = json::array();
  for (const auto& p : map.dead_ends) dead_ends.push_back(point_json(p));
  json obstacles = json::array();
  for (const auto& o : map.static_obstacles) {
    obstacles.push_back({{"x", o.center.x},
                         {"y", o.center.y},
                         {"heading", o.center.heading},
                         {"half_length", o.half_length},
                         {"half_width", o.half_width}});
  }
  const Rect& b = map.walkable_bounds;
  return {{"name", map.name},
          {"lanes", lanes},
          {"adjacency", adjacency},
          {"junctions", junctions},
          {"dead_ends", dead_ends},
          {"bounds", {{"min", {b.min_x, b.min_y}}, {"max", {b.max_x, b.max_y}}}},
          {"obstacles", obstacles}};
}

TownMap town_from_json(const nlohmann::json& j) {
  TownMap map;
  try {
    map.name = j.at("name").get<std::string>();
    for (const auto& l : j.at("lanes")) {
      Lane lane;
      for (const auto& p : l.at("points")) lane.points.push_back(point_from(p));
      lane.width = l.at("width").get<double>();
      lane.connector = l.value("connector", false);
      map.lanes.push_back(std::move(lane));
    }
    for (const auto& a : j.at("adjacency")) {
      map.adjacency.push_back({a.at(0).get<std::size_t>(),
                               a.at(1).get<std::size_t>()});
    }
    if (j.contains("junctions")) {
      for (const auto& p : j["junctions"]) map.junctions.push_back(point_from(p));
    }
    if (j.contains("dead_ends")) {
      for (const auto& p : j["dead_ends"]) map.dead_ends.push_back(point_from(p));
    }
    const Vec2 lo = point_from(j.at("bounds").at("min"));
    const Vec2 hi = point_from(j.at("bounds").at("max"));
    map.walkable_bounds = Rect{lo.x, lo.y, hi.x, hi.y};
    for (const auto& o : j.at("obstacles")) {
      map.static_obstacles.push_back(OrientedBox{
          Pose2D{o.at("x").get<double>(), o.at("y").get<double>(),
                 o.at("heading").get<double>()},
          o.at("half_length").get<double>(), o.at("half_width").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("town json: ") + e.what());
  }
  validate_town(map);
  return map;
}

}  // namespace pedsim

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

namespace pedsim {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Unit vector at angle `a` (counterclockwise from +x).
inline Vec2 heading_vector(double a) { return {std::cos(a), std::sin(a)}; }

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, [-pi, pi]

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

// Rectangle centered on a pose; the pose heading points along the long axis.
struct OrientedBox {
  Pose2D center;
  double half_length = 0.0;
  double half_width = 0.0;
};

enum class Zone { Front, Side, Rear };

const char* zone_name(Zone z);
Zone zone_from_name(const std::string_view name);

struct Contact {
  Vec2 point;  // world coordinates, closest box point to the circle center
  Zone zone = Zone::Side;
};

struct ContactReport {
  std::optional<Contact> contact;  // engaged iff the shapes touch

  bool hit() const { return contact.has_value(); }
};

// Width of the band at each end of a box whose contacts count as Front/Rear.
inline constexpr double kZoneBand = 0.05;
// Tangent contacts within this distance count as hits.
inline constexpr double kContactTolerance = 1e-9;

// Wraps into [-pi, pi]; exact -pi is reported as +pi. Throws on non-finite.
double wrap_angle(double a);

Vec2 world_to_frame(const Pose2D& frame, Vec2 p);
Vec2 frame_to_world(const Pose2D& frame, Vec2 p);

// Closest-point test between an oriented box and a circle.
ContactReport collide_box_circle(const OrientedBox& box, Vec2 center,
                                 double radius);

// Counterclockwise corners starting at front-left.
std::array<Vec2, 4> box_corners(const OrientedBox& box);

}  // namespace pedsim

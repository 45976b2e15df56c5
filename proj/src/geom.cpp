#include "pedsim/geom.hpp"

#include <algorithm>
#include <string>

#include "pedsim/error.hpp"

namespace pedsim {

const char* zone_name(Zone z) {
  switch (z) {
    case Zone::Front:
      return "front";
    case Zone::Side:
      return "side";
    case Zone::Rear:
      return "rear";
  }
  return "side";
}

Zone zone_from_name(const std::string_view name) {
  if (name == "front") return Zone::Front;
  if (name == "side") return Zone::Side;
  if (name == "rear") return Zone::Rear;
  throw Error("unknown contact zone: " + std::string(name));
}

double wrap_angle(double a) {
  if (!std::isfinite(a)) throw Error("wrap_angle: non-finite angle");
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r = kPi;
  if (r > kPi) r = kPi;
  return r;
}

Vec2 world_to_frame(const Pose2D& frame, Vec2 p) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  const double dx = p.x - frame.x;
  const double dy = p.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Vec2 frame_to_world(const Pose2D& frame, Vec2 p) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.x + c * p.x - s * p.y, frame.y + s * p.x + c * p.y};
}

ContactReport collide_box_circle(const OrientedBox& box, Vec2 center,
                                 double radius) {
  if (!(box.half_length > 0.0) || !(box.half_width > 0.0)) {
    throw Error("collide_box_circle: degenerate box");
  }
  if (!(radius > 0.0)) throw Error("collide_box_circle: radius must be > 0");

  const Vec2 local = world_to_frame(box.center, center);
  const Vec2 closest{std::clamp(local.x, -box.half_length, box.half_length),
                     std::clamp(local.y, -box.half_width, box.half_width)};
  const Vec2 gap = local - closest;
  if (gap.norm() > radius + kContactTolerance) return {};

  Zone zone = Zone::Side;
  if (closest.x >= box.half_length - kZoneBand) {
    zone = Zone::Front;
  } else if (closest.x <= -(box.half_length - kZoneBand)) {
    zone = Zone::Rear;
  }
  return {Contact{frame_to_world(box.center, closest), zone}};
}

std::array<Vec2, 4> box_corners(const OrientedBox& box) {
  const double l = box.half_length;
  const double w = box.half_width;
  return {frame_to_world(box.center, {l, w}),
          frame_to_world(box.center, {-l, w}),
          frame_to_world(box.center, {-l, -w}),
          frame_to_world(box.center, {l, -w})};
}

}  // namespace pedsim

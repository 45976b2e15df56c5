#include <cstdio>
#include <fstream>
#include <string>

#include "pedsim/error.hpp"
#include "pedsim/evalrig.hpp"

namespace pedsim {

namespace {

constexpr double kPixelsPerMeter = 3.0;
constexpr double kArrowLength = 3.0;

class Canvas {
 public:
  explicit Canvas(const Rect& b) : b_(b) {}

  double width() const { return (b_.max_x - b_.min_x) * kPixelsPerMeter; }
  double height() const { return (b_.max_y - b_.min_y) * kPixelsPerMeter; }

  // SVG y grows downward.
  std::string pt(Vec2 p) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f",
                  (p.x - b_.min_x) * kPixelsPerMeter,
                  (b_.max_y - p.y) * kPixelsPerMeter);
    return buf;
  }
  std::string x(double v) const { return num((v - b_.min_x) * kPixelsPerMeter); }
  std::string y(double v) const { return num((b_.max_y - v) * kPixelsPerMeter); }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

 private:
  Rect b_;
};

std::string polygon(const Canvas& c, const OrientedBox& box, const char* cls) {
  std::string s = "<polygon class=\"" + std::string(cls) + "\" points=\"";
  const auto corners = box_corners(box);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    if (i) s += ' ';
    s += c.pt(corners[i]);
  }
  return s + "\"/>\n";
}

}  // namespace

std::string render_svg(const EpisodeLog& log, const TownMap& map) {
  const Canvas c(map.walkable_bounds);
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Canvas::num(c.width()) +
       "\" height=\"" + Canvas::num(c.height()) + "\" viewBox=\"0 0 " +
       Canvas::num(c.width()) + ' ' + Canvas::num(c.height()) + "\">\n";
  s += "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" "
       "refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"#c0392b\"/>"
       "</marker></defs>\n";
  s += "<style>.lane{fill:none;stroke:#bbb}.obstacle{fill:#777}"
       ".vehicle{fill:none;stroke:#2c3e50}.pedestrian-path{fill:none;stroke:#c0392b}"
       ".arrow{stroke:#c0392b;marker-end:url(#head)}"
       ".collision{fill:none;stroke:#e67e22;stroke-width:3}</style>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";

  for (const Lane& lane : map.lanes) {
    s += "<polyline class=\"lane\" stroke-width=\"" +
         Canvas::num(lane.width * kPixelsPerMeter) + "\" points=\"";
    for (std::size_t i = 0; i < lane.points.size(); ++i) {
      if (i) s += ' ';
      s += c.pt(lane.points[i]);
    }
    s += "\"/>\n";
  }
  for (const OrientedBox& box : map.static_obstacles) {
    s += polygon(c, box, "obstacle");
  }

  for (const TickRow& r : log.ticks) {
    if (r.tick % 10 != 0) continue;
    s += polygon(c, OrientedBox{r.vehicle, kVehicleHalfLength, kVehicleHalfWidth},
                 "vehicle");
  }

  if (!log.ticks.empty()) {
    s += "<polyline class=\"pedestrian-path\" points=\"";
    for (std::size_t i = 0; i < log.ticks.size(); ++i) {
      if (i) s += ' ';
      s += c.pt(log.ticks[i].pedestrian);
    }
    s += "\"/>\n";
  }

  for (const DecisionRow& d : log.decisions) {
    if (d.tick < 0 || static_cast<std::size_t>(d.tick) >= log.ticks.size()) continue;
    const TickRow& r = log.ticks[static_cast<std::size_t>(d.tick)];
    const double heading = wrap_angle(r.pedestrian_heading + d.action.theta);
    const Vec2 tip = r.pedestrian + kArrowLength * heading_vector(heading);
    s += "<line class=\"arrow\" x1=\"" + c.x(r.pedestrian.x) + "\" y1=\"" +
         c.y(r.pedestrian.y) + "\" x2=\"" + c.x(tip.x) + "\" y2=\"" + c.y(tip.y) +
         "\"/>\n";
  }

  if (log.outcome.occurred && !log.ticks.empty()) {
    const Vec2 p = log.ticks.back().pedestrian;
    s += "<circle class=\"collision\" cx=\"" + c.x(p.x) + "\" cy=\"" + c.y(p.y) +
         "\" r=\"" + Canvas::num(2.0 * kPixelsPerMeter) + "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

void render_svg_file(const EpisodeLog& log, const std::string& path) {
  const auto map = load_town(log.header.env.town);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write svg: " + path);
  out << render_svg(log, *map);
}

}  // namespace pedsim

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "pedsim/error.hpp"
#include "pedsim/world.hpp"

using namespace pedsim;

namespace {

constexpr double pi = std::numbers::pi;

double point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.dot(ab), 0.0, 1.0);
  return distance(p, a + t * ab);
}

double distance_to_lanes(const TownMap& m, Vec2 p) {
  double best = 1e18;
  for (const Lane& l : m.lanes) {
    for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
      best = std::min(best, point_segment(p, l.points[i], l.points[i + 1]));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("built-in towns") {
  const TownMap a = build_town("TownA");
  const TownMap b = build_town("TownB");
  CHECK(a.junctions.size() == 4);
  CHECK(b.junctions.size() == 3);
  for (const TownMap* m : {&a, &b}) {
    CHECK_NOTHROW(validate_town(*m));
    CHECK_FALSE(m->lanes.empty());
    for (const Lane& l : m->lanes) CHECK(l.width == 3.5);
    // every lane can be left
    for (std::size_t i = 0; i < m->lanes.size(); ++i) CHECK_FALSE(m->successors(i).empty());
  }
  CHECK(a.walkable_bounds.max_x - a.walkable_bounds.min_x >= 200.0);
  CHECK(b.walkable_bounds.max_x - b.walkable_bounds.min_x >= 250.0);
  CHECK(b.walkable_bounds.max_y - b.walkable_bounds.min_y >= 150.0);
  CHECK(a.lanes.size() != b.lanes.size());
  CHECK_THROWS_AS(build_town("TownC"), Error);

  const TownMap a2 = build_town("TownA");
  CHECK(town_to_json(a) == town_to_json(a2));
}

TEST_CASE("validate_town catches broken maps") {
  TownMap m = build_town("TownA");
  m.lanes[0].points.resize(1);
  CHECK_THROWS_AS(validate_town(m), Error);

  m = build_town("TownA");
  m.lanes[1].points[1] = m.lanes[1].points[0];
  CHECK_THROWS_AS(validate_town(m), Error);

  m = build_town("TownA");
  m.lanes[m.adjacency[0].to].points.front().x += 1.0;
  CHECK_THROWS_AS(validate_town(m), Error);
}

TEST_CASE("town json round trip") {
  const TownMap b = build_town("TownB");
  const TownMap c = town_from_json(nlohmann::json::parse(town_to_json(b).dump()));
  CHECK(town_to_json(c) == town_to_json(b));
  CHECK(c.lanes.size() == b.lanes.size());
  CHECK(c.static_obstacles.size() == b.static_obstacles.size());
  CHECK_THROWS_AS(town_from_json(nlohmann::json{{"lanes", 3}}), Error);
}

TEST_CASE("route sampling") {
  const TownMap m = build_town("TownA");
  Rng r1(1), r2(1);
  const Route a = sample_route(m, r1, 100.0);
  const Route b = sample_route(m, r2, 100.0);
  REQUIRE(a.waypoints.size() == b.waypoints.size());
  for (std::size_t i = 0; i < a.waypoints.size(); ++i) {
    CHECK(a.waypoints[i].position == b.waypoints[i].position);
  }
  Rng r3(1);
  CHECK_THROWS_AS(sample_route(m, r3, 1e6), Error);

  for (const char* town : {"TownA", "TownB"}) {
    const TownMap t = build_town(town);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      const Route r = sample_route(t, rng, 400.0);
      CHECK(r.total_length >= 400.0);
      double arc = 0.0;
      for (std::size_t i = 0; i + 1 < r.waypoints.size(); ++i) {
        const double s = distance(r.waypoints[i].position, r.waypoints[i + 1].position);
        CHECK(s <= 2.0 + 1e-9);
        CHECK(s > 0.0);
        arc += s;
      }
      CHECK(std::abs(arc - r.total_length) < 1e-6);
      if (seed % 10 == 0) {
        for (const auto& w : r.waypoints) {
          CHECK(distance_to_lanes(t, w.position) <= 3.5 / 2);
          CHECK(w.target_speed > 0.0);
          CHECK(w.target_speed <= kDefaultCruiseSpeed);
        }
      }
    }
  }
}

TEST_CASE("junction slowdown") {
  const TownMap m = build_town("TownA");
  Rng rng(5);
  const Route r = sample_route(m, rng, 400.0);
  bool slowed = false;
  for (const auto& w : r.waypoints) {
    double dj = 1e18;
    for (Vec2 j : m.junctions) dj = std::min(dj, distance(j, w.position));
    if (dj < 12.0) {
      CHECK(w.target_speed == doctest::Approx(kSlowdownFactor * kDefaultCruiseSpeed));
      slowed = true;
    }
  }
  CHECK(slowed);
}

TEST_CASE("route queries") {
  const Route r = Route::from_points({{{0, 0}, 5.0}, {{10, 0}, 5.0}, {{10, 10}, 5.0}});
  CHECK(r.total_length == doctest::Approx(20.0));
  CHECK(r.point_at(5.0).x == doctest::Approx(5.0));
  CHECK(r.heading_at(15.0) == doctest::Approx(pi / 2));
  CHECK(r.project({4.0, 0.7}, 0.0) == doctest::Approx(4.0));
  CHECK(r.distance_to({4.0, 0.7}, 0.0) == doctest::Approx(0.7));
  CHECK_THROWS_AS(Route::from_points({{{0, 0}, 1.0}}), Error);
}

TEST_CASE("spawn geometry") {
  const Vec2 p = sector_point({0, 0, 0}, 0.0, 7.0);
  CHECK(p.x == doctest::Approx(7.0));
  CHECK(p.y == doctest::Approx(0.0));
  const Vec2 q = sector_point({0, 0, pi / 2}, pi / 3, 30.0);
  CHECK(q.x == doctest::Approx(30.0 * std::cos(5 * pi / 6)));
  CHECK(q.y == doctest::Approx(30.0 * std::sin(5 * pi / 6)));

  SpawnSpec bad;
  bad.dist_min = 40.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("obstacles and bounds sit beyond spawn reach of every lane") {
  for (const char* town : {"TownA", "TownB"}) {
    const TownMap m = build_town(town);
    for (const Lane& l : m.lanes) {
      for (Vec2 p : l.points) {
        const Rect& b = m.walkable_bounds;
        CHECK(std::min({p.x - b.min_x, b.max_x - p.x, p.y - b.min_y, b.max_y - p.y}) > 30.0);
        for (const auto& o : m.static_obstacles) {
          const Vec2 q = world_to_frame(o.center, p);
          const double dx = std::max(std::abs(q.x) - o.half_length, 0.0);
          const double dy = std::max(std::abs(q.y) - o.half_width, 0.0);
          CHECK(std::hypot(dx, dy) > 30.0);
        }
      }
    }
  }
}

TEST_CASE("spawn sampling is uniform within the sector") {
  const TownMap m = build_town("TownA");
  const Pose2D vehicle{100.0, 40.0, 0.3};
  Rng rng(2);
  std::vector<double> bearings, dists, headings;
  for (int i = 0; i < 10000; ++i) {
    const Pose2D s = sample_spawn(vehicle, SpawnSpec{}, m, rng);
    const Vec2 local = world_to_frame(vehicle, s.position());
    const double d = local.norm();
    const double b = std::atan2(local.y, local.x);
    CHECK(d >= 7.0 - 1e-9);
    CHECK(d <= 30.0 + 1e-9);
    CHECK(std::abs(b) <= pi / 3 + 1e-9);
    CHECK(m.walkable_bounds.contains(s.position()));
    CHECK_FALSE(m.blocked(s.position()));
    dists.push_back(d);
    bearings.push_back(b);
    headings.push_back(s.heading);
  }
  CHECK(oracle::ks_uniform_p(dists, 7.0, 30.0) > 0.01);
  CHECK(oracle::ks_uniform_p(bearings, -pi / 3, pi / 3) > 0.01);
  CHECK(oracle::ks_uniform_p(headings, -pi, pi) > 0.01);
}

TEST_CASE("spawn fails when nothing is walkable") {
  TownMap m = build_town("TownA");
  m.walkable_bounds = {1000, 1000, 1001, 1001};
  Rng rng(1);
  CHECK_THROWS_AS(sample_spawn({0, 0, 0}, SpawnSpec{}, m, rng), Error);
}

TEST_CASE("KS helper rejects non-uniform data") {
  Rng rng(3);
  std::vector<double> skewed;
  for (int i = 0; i < 2000; ++i) skewed.push_back(rng.uniform() * rng.uniform());
  CHECK(oracle::ks_uniform_p(skewed, 0.0, 1.0) < 1e-6);
  std::vector<double> flat;
  for (int i = 0; i < 2000; ++i) flat.push_back(rng.uniform());
  CHECK(oracle::ks_uniform_p(flat, 0.0, 1.0) > 0.01);
}

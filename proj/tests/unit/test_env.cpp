#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pedsim/env.hpp"
#include "pedsim/error.hpp"

using namespace pedsim;

namespace {

constexpr double pi = std::numbers::pi;

EnvState scene(Pose2D vehicle, double v_speed, Vec2 ped, double ped_heading,
               double ped_speed = 0.0) {
  EnvState s;
  s.vehicle = VehicleState{vehicle, v_speed, 0.0};
  s.pedestrian.position = ped;
  s.pedestrian.heading = ped_heading;
  s.pedestrian.speed = ped_speed;
  return s;
}

Pose2D compose(const Pose2D& t, const Pose2D& p) {
  const Vec2 w = frame_to_world(t, p.position());
  return {w.x, w.y, wrap_angle(t.heading + p.heading)};
}

}  // namespace

TEST_CASE("observation examples") {
  const auto a = observe(scene({10, 0, 0}, 0.0, {0, 0}, 0.0));
  CHECK(a.alpha == doctest::Approx(0.0));
  CHECK(a.d == doctest::Approx(10.0));
  CHECK(a.beta == 0.0);
  CHECK(a.v == 0.0);

  const auto b = observe(scene({0, 10, -pi / 2}, 5.0, {0, 0}, 0.0));
  CHECK(b.alpha == doctest::Approx(pi / 2));
  CHECK(b.d == doctest::Approx(10.0));
  CHECK(b.beta == doctest::Approx(-pi / 2));
  CHECK(b.v == doctest::Approx(5.0));

  // pedestrian facing the vehicle
  const auto c = observe(scene({0, 10, -pi / 2}, 5.0, {0, 0}, pi / 2));
  CHECK(c.alpha == doctest::Approx(0.0));
  CHECK(std::abs(c.beta) == doctest::Approx(pi));

  const auto n = b.normalized();
  CHECK(n[0] == doctest::Approx(0.5));
  CHECK(n[1] == doctest::Approx(10.0 / 30.0));
  CHECK(n[2] == doctest::Approx(-0.5));
  CHECK(n[3] == doctest::Approx(5.0 / 15.0));
}

TEST_CASE("observation is invariant under rigid motion of the scene") {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Pose2D veh{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-pi, pi)};
    const Vec2 ped{rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const double ph = rng.uniform(-pi, pi);
    const double vs = rng.uniform(0, 15);
    const double ps = rng.uniform(0, 3.5);
    const Pose2D t{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-pi, pi)};

    const auto o1 = observe(scene(veh, vs, ped, ph, ps));
    const Pose2D ped_t = compose(t, {ped.x, ped.y, ph});
    const auto o2 = observe(scene(compose(t, veh), vs, ped_t.position(), ped_t.heading, ps));
    CHECK(o2.d == doctest::Approx(o1.d));
    CHECK(o2.v == doctest::Approx(o1.v));
    CHECK(std::abs(wrap_angle(o2.alpha - o1.alpha)) < 1e-9);
    if (o1.v > 1e-3) CHECK(std::abs(wrap_angle(o2.beta - o1.beta)) < 1e-9);
  }
}

TEST_CASE("reward tables") {
  const double speeds[] = {0.0, 1.0, 2.0, 3.0, 6.0, 10.0, 15.0};
  const double front[] = {3.0, 3.0, 3.0, 4.5, 9.0, 15.0, 22.5};
  const double other[] = {1.0, 1.0, 1.0, 1.5, 3.0, 5.0, 7.5};
  for (int i = 0; i < 7; ++i) {
    const double v = speeds[i];
    CHECK(reward_r2(CollisionEvent::hit(Zone::Front, v, 3)) == doctest::Approx(front[i]));
    CHECK(reward_r2(CollisionEvent::hit(Zone::Side, v, 3)) == doctest::Approx(other[i]));
    CHECK(reward_r2(CollisionEvent::hit(Zone::Rear, v, 3)) == doctest::Approx(other[i]));
    for (Zone z : {Zone::Front, Zone::Side, Zone::Rear}) {
      CHECK(reward_r1(CollisionEvent::hit(z, v, 3)) == 1.0);
    }
  }
  CHECK(reward_r1(CollisionEvent::none()) == 0.0);
  CHECK(reward_r2(CollisionEvent::none()) == 0.0);
  CHECK(reward_from_name(reward_name(RewardId::R1)) == RewardId::R1);
  CHECK(reward_from_name(reward_name(RewardId::R2)) == RewardId::R2);
  CHECK_THROWS_AS(reward_from_name("R3"), Error);
}

TEST_CASE("action clamping") {
  const auto a = PedestrianAction::clamped(5.0, 9.0);
  CHECK(a.theta == doctest::Approx(pi));
  CHECK(a.speed == 3.5);
  const auto b = PedestrianAction::clamped(-5.0, -1.0);
  CHECK(b.theta == doctest::Approx(-pi));
  CHECK(b.speed == 0.0);
}

TEST_CASE("reset is deterministic and spawns inside the sector") {
  const PedestrianEnv env(EnvConfig{});
  Rng r1(77), r2(77);
  const auto [s1, o1] = env.reset(r1);
  const auto [s2, o2] = env.reset(r2);
  CHECK(s1.vehicle.pose == s2.vehicle.pose);
  CHECK(s1.pedestrian.position == s2.pedestrian.position);
  CHECK(o1 == o2);

  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto [s, o] = env.reset(rng);
    CHECK(s.tick == 0);
    CHECK_FALSE(s.done);
    CHECK(s.vehicle.speed == 0.0);
    CHECK(s.pedestrian.speed == 0.0);
    CHECK(o.d >= 7.0 - 1e-9);
    CHECK(o.d <= 30.0 + 1e-9);
    const Vec2 local = world_to_frame(s.vehicle.pose, s.pedestrian.position);
    CHECK(std::abs(std::atan2(local.y, local.x)) <= pi / 3 + 1e-9);
  }
}

TEST_CASE("step semantics") {
  EnvConfig cfg;
  cfg.driving_policy = DrivingPolicyId::Oblivious;
  const PedestrianEnv env(cfg);

  SUBCASE("standing still far from the road runs 30 decisions") {
    Rng rng(9);
    auto [s, o] = env.reset(rng);
    s.pedestrian.position = {1e4, 1e4};
    int decisions = 0;
    int ticks_seen = 0;
    while (!s.done) {
      const auto r = env.step(s, {0.0, 0.0}, [&](const EnvState&) { ++ticks_seen; });
      CHECK(r.reward == 0.0);
      CHECK(r.state.tick == s.tick + 20);
      s = r.state;
      ++decisions;
    }
    CHECK(decisions == 30);
    CHECK(ticks_seen == 600);
    CHECK(s.tick == 600);
    CHECK_THROWS_AS(env.step(s, {0.0, 0.0}), Error);
  }

  SUBCASE("a collision ends the episode mid-decision") {
    Rng rng(9);
    auto [s, o] = env.reset(rng);
    s.pedestrian.position = frame_to_world(s.vehicle.pose, {6.0, 0.0});
    int ticks_seen = 0;
    StepResult r;
    while (!s.done) {
      r = env.step(s, {0.0, 0.0}, [&](const EnvState&) { ++ticks_seen; });
      s = r.state;
    }
    REQUIRE(r.event.occurred);
    CHECK(r.done);
    CHECK(r.event.zone == Zone::Front);
    CHECK(r.event.tick == s.tick);
    CHECK(ticks_seen == s.tick);
    CHECK(s.tick < 600);
    CHECK(r.reward == doctest::Approx(reward_r2(r.event)));
  }

  SUBCASE("step does not mutate its input") {
    Rng rng(10);
    const auto [s, o] = env.reset(rng);
    const auto a = env.step(s, {0.4, 2.0});
    const auto b = env.step(s, {0.4, 2.0});
    CHECK(s.tick == 0);
    CHECK(a.state.pedestrian.position == b.state.pedestrian.position);
    CHECK(a.state.vehicle.pose == b.state.vehicle.pose);
    CHECK(a.state.pedestrian.heading == doctest::Approx(wrap_angle(s.pedestrian.heading + 0.4)));
  }
}

TEST_CASE("config validation and towns") {
  EnvConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.horizon() == 30);
  cfg.action_repeat = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  CHECK(load_town("TownA")->name == "TownA");
  CHECK_THROWS_AS(load_town("TownZ"), Error);
  CHECK_THROWS_AS(load_town("/nonexistent/town.json"), Error);
}

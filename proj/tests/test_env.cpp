#include <doctest.h>

#include <cmath>

#include "uwnav/env.hpp"

using namespace uwnav;

namespace {

const RewardConfig kRw;

Scene open_water(double half = 500.0, double depth = 1000.0) {
  Scene s;
  s.bounds = {{-half, -half, 0.0}, {half, half, depth}};
  s.visibility = 20.0;
  return s;
}

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.sensor_noise = false;
  cfg.image_height = 8;
  cfg.image_width = 10;
  return cfg;
}

Mission mid_mission(Vec3 start, double yaw, Vec3 goal) {
  Mission m;
  m.start = {start, yaw};
  m.goal = goal;
  return m;
}

}  // namespace

TEST_CASE("reward_obstacle branches") {
  auto [crash, crashed] = reward_obstacle(0.4, 5.0, 5.0, kRw);
  CHECK(crashed);
  CHECK(crash == doctest::Approx(-10.0).epsilon(1e-12));

  auto [penalty, ok] = reward_obstacle(0.75, 5.0, 5.0, kRw);
  CHECK(!ok);
  CHECK(penalty == doctest::Approx(-0.5).epsilon(1e-12));

  auto [zero, ok2] = reward_obstacle(1.0, 5.0, 5.0, kRw);
  CHECK(!ok2);
  CHECK(zero == 0.0);

  CHECK(reward_obstacle(5.0, 0.2, 5.0, kRw).second);
  CHECK(reward_obstacle(5.0, 5.0, 0.2, kRw).second);
}

TEST_CASE("reward_obstacle continuity and jump") {
  const double at = reward_obstacle(2.0 * kRw.delta_h, 5, 5, kRw).first;
  const double below = reward_obstacle(2.0 * kRw.delta_h - 1e-9, 5, 5, kRw).first;
  CHECK(at == 0.0);
  CHECK(std::abs(below - at) < 1e-8);

  const double above_thr = reward_obstacle(kRw.delta_h, 5, 5, kRw).first;
  const double below_thr = reward_obstacle(kRw.delta_h - 1e-9, 5, 5, kRw).first;
  CHECK(std::abs(above_thr - below_thr) ==
        doctest::Approx(std::abs(-kRw.r_crash + kRw.s0 * kRw.delta_h))
            .epsilon(1e-6));
}

TEST_CASE("reward_goal_horizontal examples") {
  CHECK(reward_goal_horizontal(5.0, M_PI / 2.0, kRw) ==
        doctest::Approx(-0.1 * M_PI / 2.0).epsilon(1e-12));
  CHECK(reward_goal_horizontal(0.5, 0.0, kRw) == doctest::Approx(10.0));
  CHECK(reward_goal_horizontal(0.5, M_PI, kRw) ==
        doctest::Approx(10.0 - M_PI).epsilon(1e-12));
}

TEST_CASE("gated horizontal term withholds the bonus until aligned") {
  RewardConfig gated = kRw;
  gated.gate_success_bonus = true;
  // Inside the disc but vertically misaligned: same shaping as outside.
  CHECK(reward_goal_horizontal_gated(0.5, 0.4, M_PI / 2.0, gated) ==
        doctest::Approx(-0.1 * M_PI / 2.0).epsilon(1e-12));
  // Aligned: the bonus is paid as usual.
  CHECK(reward_goal_horizontal_gated(0.5, 0.2, 0.0, gated) ==
        doctest::Approx(10.0));
  // Outside the disc the gate changes nothing.
  CHECK(reward_goal_horizontal_gated(5.0, 2.0, M_PI / 2.0, gated) ==
        doctest::Approx(-0.1 * M_PI / 2.0).epsilon(1e-12));
  // Gate off: identical to the ungated form everywhere.
  CHECK(reward_goal_horizontal_gated(0.5, 0.4, M_PI, kRw) ==
        doctest::Approx(reward_goal_horizontal(0.5, M_PI, kRw)));
}

TEST_CASE("reward_goal_vertical examples") {
  CHECK(reward_goal_vertical(5.0, 1.0, -0.1, kRw) == doctest::Approx(0.1));
  CHECK(reward_goal_vertical(5.0, 1.0, 0.1, kRw) == doctest::Approx(-0.1));
  CHECK(reward_goal_vertical(0.3, 0.2, 0.0, kRw) ==
        doctest::Approx(-1.6).epsilon(1e-12));
}

TEST_CASE("apply_priority examples") {
  CHECK(apply_priority(-0.157, 5.0, 0.75, kRw) ==
        doctest::Approx(-0.157 * 0.5).epsilon(1e-12));
  CHECK(apply_priority(-0.157, 5.0, 0.5, kRw) == doctest::Approx(0.0));
  CHECK(apply_priority(-0.157, 5.0, 2.0, kRw) == doctest::Approx(-0.157));
  // Inside the goal area the scaling is disabled.
  CHECK(apply_priority(9.0, 0.5, 0.75, kRw) == doctest::Approx(9.0));
}

TEST_CASE("termination examples") {
  CHECK(termination(0.5, 0.1, false, 10, kRw, 400) == EpisodeStatus::Success);
  CHECK(termination(0.5, 0.5, false, 10, kRw, 400) == EpisodeStatus::Running);
  CHECK(termination(5.0, 0.0, false, 400, kRw, 400) == EpisodeStatus::Timeout);
  CHECK(termination(0.5, 0.1, true, 10, kRw, 400) == EpisodeStatus::Crash);
}

TEST_CASE("relative_goal examples") {
  LocalizationFix fix{{0, 0, 0}, 0.0};
  RelativeGoal g = relative_goal(fix, {3, 4, -2});
  CHECK(g.d_h == doctest::Approx(5.0));
  CHECK(g.d_v == doctest::Approx(-2.0));
  CHECK(g.theta_h == doctest::Approx(std::atan2(4, 3)).epsilon(1e-12));

  fix.yaw = 0.3;
  g = relative_goal(fix, {2.0 * std::cos(0.3), 2.0 * std::sin(0.3), 0.0});
  CHECK(g.theta_h == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.d_v == doctest::Approx(0.0));

  fix.yaw = 0.0;
  g = relative_goal(fix, {std::cos(M_PI + 0.1), std::sin(M_PI + 0.1), 0.0});
  CHECK(g.theta_h == doctest::Approx(-(M_PI - 0.1)).epsilon(1e-9));
}

TEST_CASE("kinematics: straight, dive, arc") {
  const EnvConfig cfg = quiet_config();
  const Scene s = open_water();

  Env env(cfg, 1);
  env.reset(s, mid_mission({0, 0, 500}, 0.0, {100, 0, 500}));
  const Pose p0 = env.pose();
  env.step({0.0, 0.0});
  const Vec3 d = env.pose().position - p0.position;
  CHECK(d.norm() == doctest::Approx(0.345 * 0.5).epsilon(1e-12));
  CHECK(env.pose().yaw == doctest::Approx(0.0));

  Env env2(cfg, 1);
  env2.reset(s, mid_mission({0, 0, 500}, 0.0, {100, 0, 500}));
  env2.step({1.0, 0.0});
  CHECK(env2.pose().position.z - 500.0 ==
        doctest::Approx(0.23 * 0.5).epsilon(1e-12));

  Env env3(cfg, 1);
  env3.reset(s, mid_mission({0, 0, 500}, 0.0, {100, 0, 500}));
  env3.step({0.0, 1.0});
  CHECK(env3.pose().yaw == doctest::Approx(M_PI / 6.0 * 0.5).epsilon(1e-9));
  // Euler-integrated arc: radius v/omega within a few percent.
  const double radius = 0.345 / (M_PI / 6.0);
  const double chord = (env3.pose().position - Vec3{0, 0, 500}).norm();
  const double expected_chord =
      2.0 * radius * std::sin(M_PI / 6.0 * 0.5 / 2.0);
  CHECK(chord == doctest::Approx(expected_chord).epsilon(0.05));
}

TEST_CASE("step reward identity and stacking") {
  EnvConfig cfg = quiet_config();
  const Scene s = open_water();
  Env env(cfg, 1);
  StackedObservation obs =
      env.reset(s, mid_mission({0, 0, 500}, 0.0, {8, 0, 500}));
  CHECK(obs.frames.size() == (size_t)cfg.stack_k);
  for (int i = 0; i < 5; ++i) {
    const StepOutcome out = env.step({0.1, -0.2});
    CHECK(out.reward.total == doctest::Approx(out.reward.r_obs +
                                              out.reward.r_goalh +
                                              out.reward.r_goalv)
                                  .epsilon(1e-12));
    CHECK(out.obs.frames.size() == (size_t)cfg.stack_k);
  }
}

TEST_CASE("crash terminates with the crash reward") {
  EnvConfig cfg = quiet_config();
  Scene s = open_water();
  Obstacle wall;
  wall.shape = ObstacleShape::Box;
  wall.center = {3.0, 0.0, 500.0};
  wall.half_extents = {0.5, 50.0, 50.0};
  s.obstacles.push_back(wall);

  Env env(cfg, 1);
  env.reset(s, mid_mission({0, 0, 500}, 0.0, {100, 0, 500}));
  bool crashed = false;
  for (int i = 0; i < 50 && !env.done(); ++i) {
    const StepOutcome out = env.step({0.0, 0.0});
    if (out.reward.crashed) {
      crashed = true;
      CHECK(out.reward.r_obs == doctest::Approx(-10.0));
      CHECK(out.terminated);
    }
  }
  CHECK(crashed);
  CHECK(env.status() == EpisodeStatus::Crash);
}

TEST_CASE("success on reaching the goal region") {
  EnvConfig cfg = quiet_config();
  const Scene s = open_water();
  Env env(cfg, 1);
  env.reset(s, mid_mission({0, 0, 500}, 0.0, {5, 0, 500}));
  double last_reward = 0.0;
  while (!env.done()) last_reward = env.step({0.0, 0.0}).reward.total;
  CHECK(env.status() == EpisodeStatus::Success);
  CHECK(last_reward > 9.0);  // r_success dominates the final step
}

TEST_CASE("timeout truncates") {
  EnvConfig cfg = quiet_config();
  cfg.max_steps = 10;
  const Scene s = open_water();
  Env env(cfg, 1);
  env.reset(s, mid_mission({0, 0, 500}, M_PI / 2.0, {400, 0, 500}));
  StepOutcome out;
  while (!env.done()) out = env.step({0.0, 0.2});
  CHECK(env.status() == EpisodeStatus::Timeout);
  CHECK(out.truncated);
  CHECK(!out.terminated);
  CHECK_THROWS_AS((void)env.step({0, 0}), ContractViolation);
}

TEST_CASE("reset determinism and fixed missions") {
  EnvConfig cfg;
  cfg.image_height = 8;
  cfg.image_width = 10;
  Env a(cfg, 77), b(cfg, 77);
  const StackedObservation oa = a.reset();
  const StackedObservation ob = b.reset();
  CHECK(a.scene().to_json() == b.scene().to_json());
  CHECK(oa.frames.back().depth.values == ob.frames.back().depth.values);
  CHECK(oa.frames.back().goal.d_h == ob.frames.back().goal.d_h);

  const Mission m = mid_mission({1, 2, 3}, 0.5, {6, 2, 3});
  Env c(cfg, 5);
  c.reset(open_water(), m);
  CHECK(c.pose().position.x == 1.0);
  CHECK(c.mission().goal.x == 6.0);
}

TEST_CASE("visibility randomization stays in the configured range") {
  EnvConfig cfg;
  cfg.image_height = 4;
  cfg.image_width = 5;
  cfg.stack_k = 1;
  Env env(cfg, 3);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 60; ++i) {
    env.reset();
    lo = std::min(lo, env.scene().visibility);
    hi = std::max(hi, env.scene().visibility);
  }
  CHECK(lo >= 3.0);
  CHECK(hi <= 39.0);
  CHECK(hi - lo > 15.0);  // actually spread out

  cfg.fixed_visibility = 11.0;
  Env fixed(cfg, 3);
  for (int i = 0; i < 5; ++i) {
    fixed.reset();
    CHECK(fixed.scene().visibility == 11.0);
  }
}

TEST_CASE("zero-noise replay reproduces the trajectory bit-exactly") {
  EnvConfig cfg = quiet_config();
  const Scene s = generate_scene(SceneKind::A, 9);
  Rng mrng(4);
  const auto m = sample_mission(s, cfg, mrng);
  REQUIRE(m.has_value());

  auto run = [&]() {
    Env env(cfg, 123);
    env.reset(s, *m);
    std::vector<Pose> poses;
    Rng arng(55);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 40 && !env.done(); ++i) {
      env.step({u(arng), u(arng)});
      poses.push_back(env.pose());
    }
    return poses;
  };
  const auto p1 = run();
  const auto p2 = run();
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].position.x == p2[i].position.x);
    CHECK(p1[i].position.y == p2[i].position.y);
    CHECK(p1[i].position.z == p2[i].position.z);
    CHECK(p1[i].yaw == p2[i].yaw);
  }
}

TEST_CASE("facing the goal is never penalized more") {
  // One step from the same state with equal v: smaller post-step |theta|
  // gives strictly larger reward in open water with D_h > goal radius.
  EnvConfig cfg = quiet_config();
  const Scene s = open_water();
  auto reward_for = [&](double w) {
    Env env(cfg, 1);
    env.reset(s, mid_mission({0, 0, 500}, -0.8, {10, 0, 500}));
    return env.step({0.0, w}).reward.total;
  };
  // w > 0 turns toward the goal here (theta starts at +0.8).
  const double toward = reward_for(1.0);
  const double neutral = reward_for(0.0);
  const double away = reward_for(-1.0);
  CHECK(toward > neutral);
  CHECK(neutral > away);
}

TEST_CASE("sbes ablation replaces the range with 1.0") {
  EnvConfig cfg = quiet_config();
  cfg.sbes_enabled = false;
  Scene s = open_water();
  Obstacle wall;
  wall.shape = ObstacleShape::Box;
  wall.center = {2.5, 0.0, 500.0};
  wall.half_extents = {0.5, 50.0, 50.0};
  s.obstacles.push_back(wall);
  Env env(cfg, 1);
  const StackedObservation obs =
      env.reset(s, mid_mission({0, 0, 500}, 0.0, {0, 30, 500}));
  for (const auto& f : obs.frames) CHECK(f.range == 1.0);

  cfg.sbes_enabled = true;
  Env env2(cfg, 1);
  const StackedObservation obs2 =
      env2.reset(s, mid_mission({0, 0, 500}, 0.0, {0, 30, 500}));
  CHECK(obs2.frames.back().range == doctest::Approx(2.0 / 4.0).epsilon(1e-6));
}

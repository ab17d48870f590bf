#include "uwnav/env.hpp"

#include <algorithm>
#include <cmath>

namespace uwnav {

Action Action::clamped() const {
  return {std::clamp(v, -1.0, 1.0), std::clamp(w, -1.0, 1.0)};
}

std::pair<double, bool> reward_obstacle(double d_h, double d_v, double d_sur,
                                        const RewardConfig& cfg) {
  if (d_h < cfg.delta_h || d_v < cfg.delta_v || d_sur < cfg.delta_v)
    return {-cfg.r_crash, true};
  if (d_h < 2.0 * cfg.delta_h) return {-cfg.s0 * (2.0 * cfg.delta_h - d_h), false};
  return {0.0, false};
}

double reward_goal_horizontal(double D_h, double theta_h,
                              const RewardConfig& cfg) {
  if (D_h > cfg.delta_h_goal) return -cfg.s1 * std::abs(theta_h);
  return cfg.r_success - cfg.s2 * std::abs(theta_h);
}

double reward_goal_horizontal_gated(double D_h, double D_v, double theta_h,
                                    const RewardConfig& cfg) {
  if (cfg.gate_success_bonus && D_h <= cfg.delta_h_goal &&
      std::abs(D_v) > cfg.delta_v)
    return -cfg.s1 * std::abs(theta_h);
  return reward_goal_horizontal(D_h, theta_h, cfg);
}

double reward_goal_vertical(double D_h, double D_v, double D_v_rate,
                            const RewardConfig& cfg) {
  if (D_h > cfg.delta_h_goal) {
    if (D_v_rate <= 0.0) return cfg.s3 * std::abs(D_v_rate);
    return -cfg.s3 * std::abs(D_v_rate);
  }
  return -cfg.s4 * std::abs(D_v);
}

double apply_priority(double r_goalh, double D_h, double d_h,
                      const RewardConfig& cfg) {
  if (D_h > cfg.delta_h_goal && d_h >= cfg.delta_h && d_h < 2.0 * cfg.delta_h)
    return r_goalh * cfg.s5 * (d_h - cfg.delta_h) / cfg.delta_h;
  return r_goalh;
}

EpisodeStatus termination(double D_h, double D_v, bool crashed,
                          int elapsed_steps, const RewardConfig& cfg,
                          int max_steps) {
  if (crashed) return EpisodeStatus::Crash;
  if (D_h <= cfg.delta_h_goal && std::abs(D_v) <= cfg.delta_v)
    return EpisodeStatus::Success;
  if (elapsed_steps >= max_steps) return EpisodeStatus::Timeout;
  return EpisodeStatus::Running;
}

RelativeGoal relative_goal(const LocalizationFix& fix, const Vec3& goal) {
  RelativeGoal g;
  const double dx = goal.x - fix.position.x;
  const double dy = goal.y - fix.position.y;
  g.d_h = std::hypot(dx, dy);
  g.d_v = goal.z - fix.position.z;
  g.theta_h = wrap_angle(std::atan2(dy, dx) - fix.yaw);
  return g;
}

Env::Env(EnvConfig config, uint64_t seed) : cfg_(std::move(config)), rng_(seed) {}

namespace {

bool spot_is_free(const Scene& scene, const Vec3& p, double robot_radius,
                  const RewardConfig& rw) {
  if (!scene.bounds.contains(p)) return false;
  if (in_collision(scene, p, robot_radius)) return false;
  if (horizontal_clearance(scene, p, rw.delta_v) < 2.0 * rw.delta_h)
    return false;
  const auto vc = vertical_clearance(scene, p, rw.delta_h);
  return vc.d_v >= rw.delta_v && vc.d_sur >= 2.0 * rw.delta_v;
}

}  // namespace

std::optional<Mission> sample_mission(const Scene& scene,
                                      const EnvConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto& b = scene.bounds;
  const double zmin = scene.surface_depth + 1.0;
  const double zmax = b.max.z - 0.6;
  auto sample_point = [&]() -> Vec3 {
    return {b.min.x + 1.0 + u01(rng) * (b.max.x - b.min.x - 2.0),
            b.min.y + 1.0 + u01(rng) * (b.max.y - b.min.y - 2.0),
            zmin + u01(rng) * (zmax - zmin)};
  };
  const double span = std::min(cfg.goal_dist_max, (b.max.x - b.min.x) - 3.0);
  for (int inner = 0; inner < 50; ++inner) {
    Mission m;
    m.start.position = sample_point();
    m.start.yaw = wrap_angle(u01(rng) * 2.0 * M_PI);
    m.goal = sample_point();
    const double dist = (m.goal - m.start.position).norm_xy();
    if (dist < cfg.goal_dist_min || dist > span) continue;
    if (!spot_is_free(scene, m.start.position, cfg.robot_radius, cfg.reward))
      continue;
    if (!spot_is_free(scene, m.goal, cfg.robot_radius, cfg.reward)) continue;
    m.time_limit = cfg.max_steps * cfg.limits.decision_period;
    return m;
  }
  return std::nullopt;
}

StackedObservation Env::reset() {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const SceneKind kind =
        cfg_.scene_kinds[rng_() % cfg_.scene_kinds.size()];
    Scene scene = generate_scene(
        kind, rng_(), cfg_.custom_scene ? &*cfg_.custom_scene : nullptr);
    scene.visibility =
        cfg_.fixed_visibility
            ? *cfg_.fixed_visibility
            : cfg_.visibility_min +
                  u01(rng_) * (cfg_.visibility_max - cfg_.visibility_min);
    if (auto m = sample_mission(scene, cfg_, rng_)) return reset(scene, *m);
  }
  throw SceneError("Env::reset: failed to sample a feasible episode");
}

StackedObservation Env::reset(const Scene& scene, const Mission& mission) {
  scene_ = scene;
  mission_ = mission;
  pose_ = mission.start;
  status_ = EpisodeStatus::Running;
  steps_ = 0;
  LocalizationFix truth{pose_.position, pose_.yaw};
  prev_abs_dv_ = std::abs(relative_goal(truth, mission_.goal).d_v);
  push_frame(sense(Action{}), /*replicate=*/true);
  StackedObservation obs;
  obs.frames.assign(stack_.begin(), stack_.end());
  return obs;
}

ObservationFrame Env::sense(const Action& last_action) {
  ObservationFrame f;
  DepthNoiseConfig dn = cfg_.depth_noise;
  dn.enabled = dn.enabled && cfg_.sensor_noise;
  f.depth = render_depth(scene_, pose_, cfg_.camera, cfg_.image_height,
                         cfg_.image_width, dn, rng_);
  if (cfg_.sbes_enabled) {
    const SbesReading r =
        sbes_measure(scene_, pose_, cfg_.sbes, cfg_.sensor_noise, rng_);
    f.range = r.range / r.max_range;
  } else {
    f.range = 1.0;
  }
  LocalizationFix fix{pose_.position, pose_.yaw};
  if (cfg_.sensor_noise) fix = localize(pose_, cfg_.loc_noise, rng_);
  f.goal = relative_goal(fix, mission_.goal);
  f.last_action = last_action;
  return f;
}

void Env::push_frame(ObservationFrame frame, bool replicate) {
  if (replicate) {
    stack_.clear();
    for (int i = 0; i < cfg_.stack_k; ++i) stack_.push_back(frame);
    return;
  }
  stack_.pop_front();
  stack_.push_back(std::move(frame));
}

StepOutcome Env::step(const Action& raw_action) {
  if (done()) throw ContractViolation("Env::step: episode already finished");
  const Action action = raw_action.clamped();
  const double v = action.v * cfg_.limits.v_max;
  const double w = action.w * cfg_.limits.w_max;
  const double dt = cfg_.limits.decision_period / cfg_.limits.substeps;

  bool crashed = false;
  double d_h = kClearanceCap, d_v_clear = kClearanceCap, d_sur = kClearanceCap;
  for (int s = 0; s < cfg_.limits.substeps; ++s) {
    pose_.yaw = wrap_angle(pose_.yaw + w * dt);
    pose_.position.x += cfg_.limits.forward_speed * dt * std::cos(pose_.yaw);
    pose_.position.y += cfg_.limits.forward_speed * dt * std::sin(pose_.yaw);
    pose_.position.z += v * dt;
    // Keep clearance queries well-defined when the boundary is crossed.
    const auto& b = scene_.bounds;
    if (!b.contains(pose_.position)) {
      pose_.position.x = std::clamp(pose_.position.x, b.min.x, b.max.x);
      pose_.position.y = std::clamp(pose_.position.y, b.min.y, b.max.y);
      pose_.position.z = std::clamp(pose_.position.z, b.min.z, b.max.z);
      crashed = true;
    }
    d_h = horizontal_clearance(scene_, pose_.position, cfg_.reward.delta_v);
    const auto vc = vertical_clearance(scene_, pose_.position, cfg_.reward.delta_h);
    d_v_clear = vc.d_v;
    d_sur = vc.d_sur;
    if (d_h < cfg_.reward.delta_h || d_v_clear < cfg_.reward.delta_v ||
        d_sur < cfg_.reward.delta_v) {
      crashed = true;
    }
    if (crashed) break;
  }
  ++steps_;

  // Rewards and termination use ground truth; observations stay noisy.
  LocalizationFix truth{pose_.position, pose_.yaw};
  const RelativeGoal g = relative_goal(truth, mission_.goal);

  RewardBreakdown rb;
  auto [r_obs, crash_flag] = reward_obstacle(d_h, d_v_clear, d_sur, cfg_.reward);
  if (crashed) {
    r_obs = -cfg_.reward.r_crash;
    crash_flag = true;
  }
  rb.r_obs = r_obs;
  rb.crashed = crash_flag;
  const double raw_goalh =
      reward_goal_horizontal_gated(g.d_h, g.d_v, g.theta_h, cfg_.reward);
  rb.r_goalh = apply_priority(raw_goalh, g.d_h, d_h, cfg_.reward);
  const double dv_rate = std::abs(g.d_v) - prev_abs_dv_;
  rb.r_goalv = reward_goal_vertical(g.d_h, g.d_v, dv_rate, cfg_.reward);
  rb.total = rb.r_obs + rb.r_goalh + rb.r_goalv;
  prev_abs_dv_ = std::abs(g.d_v);

  status_ = termination(g.d_h, g.d_v, rb.crashed, steps_, cfg_.reward,
                        cfg_.max_steps);
  rb.reached = status_ == EpisodeStatus::Success;

  StepOutcome out;
  out.reward = rb;
  out.terminated =
      status_ == EpisodeStatus::Success || status_ == EpisodeStatus::Crash;
  out.truncated = status_ == EpisodeStatus::Timeout;
  out.true_pose = pose_;
  out.d_h = d_h;
  out.d_v_clear = d_v_clear;
  out.d_sur = d_sur;

  push_frame(sense(action), /*replicate=*/false);
  out.obs.frames.assign(stack_.begin(), stack_.end());
  return out;
}

}  // namespace uwnav

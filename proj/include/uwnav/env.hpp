#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "uwnav/scene.hpp"
#include "uwnav/sensors.hpp"

namespace uwnav {

// Normalized commands; mapped linearly onto the robot's velocity limits.
struct Action {
  double v = 0.0;  // vertical, [-1, 1], positive = dive deeper
  double w = 0.0;  // yaw rate, [-1, 1], positive = counter-clockwise

  Action clamped() const;
};

struct KinematicLimits {
  double forward_speed = 0.345;     // m/s, constant
  double v_max = 0.23;              // m/s vertical
  double w_max = M_PI / 6.0;        // rad/s yaw
  double decision_period = 0.5;     // s
  int substeps = 5;
};

struct RewardConfig {
  double r_success = 10.0;
  double r_crash = 10.0;
  double delta_h_goal = 0.6;  // goal-area radius
  double delta_h = 0.5;       // obstacle threshold, horizontal
  double delta_v = 0.3;       // obstacle threshold, vertical / surface
  double s0 = 2.0;
  double s1 = 0.1;
  double s2 = 1.0;
  double s3 = 1.0;
  double s4 = 8.0;
  double s5 = 1.0;
  // Training-only shaping switch. By default the horizontal term pays the
  // success bonus every step the robot is inside the goal disc, even when
  // the vertical condition still fails; a policy can exploit that by
  // parking there slightly misaligned and collecting the bonus forever.
  // With the gate on, a misaligned robot inside the disc earns the same
  // heading shaping as outside, so the bonus is only ever paid on the
  // terminal success step. Off by default; evaluation always reports the
  // ungated shaping.
  bool gate_success_bonus = false;
};

struct RewardBreakdown {
  double r_obs = 0.0;
  double r_goalh = 0.0;  // after priority scaling
  double r_goalv = 0.0;
  double total = 0.0;
  bool crashed = false;
  bool reached = false;
};

struct RelativeGoal {
  double d_h = 0.0;      // horizontal distance, >= 0
  double d_v = 0.0;      // signed, positive = goal deeper than robot
  double theta_h = 0.0;  // heading error in (-pi, pi]
};

struct ObservationFrame {
  DepthImage depth;
  double range = 1.0;  // SBES reading normalized by max_range, (0, 1]
  RelativeGoal goal;
  Action last_action;
};

// Exactly k frames, oldest first. Reset replicates the initial frame.
struct StackedObservation {
  std::vector<ObservationFrame> frames;
  int k() const { return static_cast<int>(frames.size()); }
};

enum class EpisodeStatus { Running, Success, Crash, Timeout };

struct StepOutcome {
  StackedObservation obs;
  RewardBreakdown reward;
  bool terminated = false;
  bool truncated = false;
  Pose true_pose;
  double d_h = 0.0, d_v_clear = 0.0, d_sur = 0.0;  // ground-truth clearances
};

struct EnvConfig {
  KinematicLimits limits;
  RewardConfig reward;
  CameraModel camera;
  SbesConfig sbes;
  DepthNoiseConfig depth_noise;
  LocalizationNoiseConfig loc_noise;
  int image_height = 32;
  int image_width = 40;
  int stack_k = 5;
  int max_steps = 400;
  double robot_radius = 0.25;
  double visibility_min = 3.0;
  double visibility_max = 39.0;
  double goal_dist_min = 4.0;
  double goal_dist_max = 20.0;
  bool sbes_enabled = true;       // ablation: constant 1.0 when false
  bool sensor_noise = true;
  std::optional<double> fixed_visibility;  // no-randomization training
  std::vector<SceneKind> scene_kinds{SceneKind::A, SceneKind::B};
  std::optional<CustomSceneSpec> custom_scene;  // used for SceneKind::Custom
};

// Pure reward pieces (the shaping terms and their glue).
std::pair<double, bool> reward_obstacle(double d_h, double d_v, double d_sur,
                                        const RewardConfig& cfg);
double reward_goal_horizontal(double D_h, double theta_h,
                              const RewardConfig& cfg);
// Horizontal term with the gate_success_bonus switch applied (see
// RewardConfig); identical to reward_goal_horizontal when the gate is off
// or the vertical condition holds.
double reward_goal_horizontal_gated(double D_h, double D_v, double theta_h,
                                    const RewardConfig& cfg);
double reward_goal_vertical(double D_h, double D_v, double D_v_rate,
                            const RewardConfig& cfg);
double apply_priority(double r_goalh, double D_h, double d_h,
                      const RewardConfig& cfg);
EpisodeStatus termination(double D_h, double D_v, bool crashed,
                          int elapsed_steps, const RewardConfig& cfg,
                          int max_steps);
RelativeGoal relative_goal(const LocalizationFix& fix, const Vec3& goal);

// Collision-free start/goal pair for a scene, honoring the configured
// start-goal distance range. Nullopt when sampling keeps failing.
std::optional<Mission> sample_mission(const Scene& scene,
                                      const EnvConfig& cfg, Rng& rng);

// One episode. Single-owner; step sequentially. Many Env instances may run
// in parallel with independent RNG streams.
class Env {
 public:
  Env(EnvConfig config, uint64_t seed);

  // Samples a scene (or uses the one given), a collision-free start pose
  // and goal, and returns the initial stacked observation.
  StackedObservation reset();
  StackedObservation reset(const Scene& scene, const Mission& mission);

  StepOutcome step(const Action& action);

  bool done() const { return status_ != EpisodeStatus::Running; }
  EpisodeStatus status() const { return status_; }
  const Scene& scene() const { return scene_; }
  const Mission& mission() const { return mission_; }
  const Pose& pose() const { return pose_; }
  int steps() const { return steps_; }
  const EnvConfig& config() const { return cfg_; }

 private:
  ObservationFrame sense(const Action& last_action);
  void push_frame(ObservationFrame frame, bool replicate);

  EnvConfig cfg_;
  Rng rng_;
  Scene scene_;
  Mission mission_;
  Pose pose_;
  EpisodeStatus status_ = EpisodeStatus::Running;
  int steps_ = 0;
  double prev_abs_dv_ = 0.0;
  std::deque<ObservationFrame> stack_;
};

}  // namespace uwnav

#pragma once

#include <optional>

#include "uwnav/env.hpp"

namespace uwnav {

// Planar multibeam sonar fan, ordered from -fov/2 to +fov/2 relative to the
// robot heading. Beam count is odd so a center beam exists.
struct MbsScan {
  std::vector<double> ranges;
  double fov = 120.0 * M_PI / 180.0;
  double max_range = 20.0;

  int n_beams() const { return static_cast<int>(ranges.size()); }
  double beam_angle(int i) const {
    return -fov / 2.0 + fov * i / (n_beams() - 1);
  }
};

struct MbsConfig {
  double fov = 120.0 * M_PI / 180.0;
  int n_beams = 61;
  double max_range = 20.0;
  double noise_sigma = 0.05;
};

MbsScan mbs_scan(const Scene& scene, const Pose& pose, const MbsConfig& cfg,
                 bool noise_enabled, Rng& rng);

enum class Bug2Mode { MotionToGoal, BoundaryFollowing };

struct Bug2Config {
  // The crash condition fires below 0.5 m of horizontal clearance and the
  // minimum turning radius is ~0.66 m, so triggers stand well off the wall.
  double safety_distance = 1.5;   // obstruction trigger ahead
  double follow_distance = 1.5;   // desired wall clearance
  double capture_range = 3.0;     // wall tracking ignores returns past this
  double mline_tolerance = 0.3;
  double steer_gain = 2.0;
  double depth_gain = 2.0;
};

struct Bug2State {
  Bug2Mode mode = Bug2Mode::MotionToGoal;
  Vec3 m_start, m_goal;
  std::optional<Vec3> hit_point;
  int follow_side = 1;  // +1 wall on the left, -1 wall on the right
  double travel_since_hit = 0.0;
  bool unreachable = false;

  static Bug2State init(const Vec3& start, const Vec3& goal);
};

// One Bug2 decision: planar steering toward the goal with boundary
// following around obstructions, leaving the boundary when the m-line is
// re-crossed strictly closer to the goal than the hit point. The returned
// action obeys the same normalized limits as the learned policy.
Action bug2_step(Bug2State& state, const MbsScan& scan,
                 const LocalizationFix& fix, const Vec3& goal,
                 const Bug2Config& cfg);

}  // namespace uwnav

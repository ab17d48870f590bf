#include "uwnav/bug2.hpp"

#include <algorithm>
#include <cmath>

namespace uwnav {

MbsScan mbs_scan(const Scene& scene, const Pose& pose, const MbsConfig& cfg,
                 bool noise_enabled, Rng& rng) {
  MbsScan scan;
  scan.fov = cfg.fov;
  scan.max_range = cfg.max_range;
  scan.ranges.resize(cfg.n_beams);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (int i = 0; i < cfg.n_beams; ++i) {
    const double ang =
        pose.yaw - cfg.fov / 2.0 + cfg.fov * i / (cfg.n_beams - 1);
    const Vec3 dir{std::cos(ang), std::sin(ang), 0.0};
    auto hit = ray_cast(scene, pose.position, dir, cfg.max_range);
    double r = hit ? *hit : cfg.max_range;
    if (noise_enabled && cfg.noise_sigma > 0.0) r += noise(rng);
    scan.ranges[i] = std::clamp(r, 1e-6, cfg.max_range);
  }
  return scan;
}

Bug2State Bug2State::init(const Vec3& start, const Vec3& goal) {
  Bug2State s;
  s.m_start = start;
  s.m_goal = goal;
  return s;
}

namespace {

double dist_xy(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Perpendicular xy distance from p to the (start, goal) line.
double mline_distance(const Bug2State& s, const Vec3& p) {
  const double ex = s.m_goal.x - s.m_start.x;
  const double ey = s.m_goal.y - s.m_start.y;
  const double len = std::hypot(ex, ey);
  if (len < 1e-9) return dist_xy(p, s.m_goal);
  const double px = p.x - s.m_start.x;
  const double py = p.y - s.m_start.y;
  return std::abs(ex * py - ey * px) / len;
}

// Minimum range over beams within +/- sector of the heading.
double front_range(const MbsScan& scan, double sector) {
  double best = scan.max_range;
  for (int i = 0; i < scan.n_beams(); ++i)
    if (std::abs(scan.beam_angle(i)) <= sector)
      best = std::min(best, scan.ranges[i]);
  return best;
}

}  // namespace

Action bug2_step(Bug2State& state, const MbsScan& scan,
                 const LocalizationFix& fix, const Vec3& goal,
                 const Bug2Config& cfg) {
  Action a;
  a.v = std::clamp(cfg.depth_gain * (goal.z - fix.position.z), -1.0, 1.0);

  const double goal_bearing =
      std::atan2(goal.y - fix.position.y, goal.x - fix.position.x);
  const double theta_err = wrap_angle(goal_bearing - fix.yaw);

  const double front = front_range(scan, 30.0 * M_PI / 180.0);
  // Nominal in-plane travel per decision step (constant forward speed).
  const double step_travel = 0.345 * 0.5;

  if (state.mode == Bug2Mode::MotionToGoal) {
    const bool goal_inside = dist_xy(fix.position, goal) < front;
    if (front < cfg.safety_distance && !goal_inside) {
      state.mode = Bug2Mode::BoundaryFollowing;
      state.hit_point = fix.position;
      state.travel_since_hit = 0.0;
      // Turn into the freer half; the wall ends up on the other side.
      double left = 0.0, right = 0.0;
      for (int i = 0; i < scan.n_beams(); ++i) {
        if (scan.beam_angle(i) > 0.0)
          left += scan.ranges[i];
        else if (scan.beam_angle(i) < 0.0)
          right += scan.ranges[i];
      }
      state.follow_side = left > right ? -1 : 1;
    } else {
      a.w = std::clamp(cfg.steer_gain * theta_err, -1.0, 1.0);
      return a;
    }
  }

  // Boundary following.
  state.travel_since_hit += step_travel;
  const Vec3& hit = *state.hit_point;

  // Leave condition: back on the m-line, strictly closer to the goal.
  if (state.travel_since_hit > 3.0 * cfg.mline_tolerance &&
      mline_distance(state, fix.position) < cfg.mline_tolerance &&
      dist_xy(fix.position, goal) <
          dist_xy(hit, goal) - cfg.mline_tolerance) {
    state.mode = Bug2Mode::MotionToGoal;
    state.hit_point.reset();
    a.w = std::clamp(cfg.steer_gain * theta_err, -1.0, 1.0);
    return a;
  }

  // Completeness check: returned to the hit point after a full loop.
  if (state.travel_since_hit > 8.0 * cfg.mline_tolerance &&
      dist_xy(fix.position, hit) < cfg.mline_tolerance) {
    state.unreachable = true;
  }

  const int side = state.follow_side;
  if (front < 0.8 * cfg.safety_distance) {
    // Wall dead ahead: hard turn away from the followed side.
    a.w = -side;
    return a;
  }

  // Steer to hold the nearest return at +/-90 deg and follow_distance.
  // Only returns inside capture_range count as the followed wall; anything
  // farther is some other obstacle and tracking it would drag the robot
  // off its boundary.
  int nearest = -1;
  for (int i = 0; i < scan.n_beams(); ++i)
    if (scan.ranges[i] < cfg.capture_range &&
        (nearest < 0 || scan.ranges[i] < scan.ranges[nearest]))
      nearest = i;
  if (nearest < 0) {
    // Lost the wall entirely: arc back toward the followed side.
    a.w = side * 0.8;
    return a;
  }
  const double wall_bearing = scan.beam_angle(nearest);
  const double wall_range = scan.ranges[nearest];
  const double w = cfg.steer_gain * (wall_bearing - side * M_PI / 2.0) +
                   side * (wall_range - cfg.follow_distance);
  a.w = std::clamp(w, -1.0, 1.0);
  return a;
}

}  // namespace uwnav

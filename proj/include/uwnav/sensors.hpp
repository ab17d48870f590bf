#pragma once

#include <random>
#include <string>
#include <vector>

#include "uwnav/scene.hpp"

namespace uwnav {

using Rng = std::mt19937_64;

// Normalized relative depth, 0 = nearest structure in frame, 1 = at/beyond
// the visibility limit. Row-major, row 0 = top of frame.
struct DepthImage {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double& at(int r, int c) { return values[r * width + c]; }
  double at(int r, int c) const { return values[r * width + c]; }
  std::string to_pgm() const;
};

struct CameraModel {
  double hfov = 80.0 * M_PI / 180.0;
  double vfov = 64.0 * M_PI / 180.0;
};

struct SbesReading {
  double range = 0.0;
  double max_range = 4.0;
};

struct LocalizationFix {
  Vec3 position;
  double yaw = 0.0;
};

struct DepthNoiseConfig {
  double sigma0 = 0.25;  // meters, at r = V
  bool enabled = true;
};

struct SbesConfig {
  double beam_width = 30.0 * M_PI / 180.0;
  double max_range = 4.0;
  int n_rays = 17;
  double noise_sigma = 0.05;
};

struct LocalizationNoiseConfig {
  double sigma_xy = 0.3;
  double sigma_z = 0.05;
  double sigma_yaw = 2.0 * M_PI / 180.0;
};

// Range-dependent measurement error: sigma grows with range and shrinks
// with visibility. Ranges at or beyond V saturate to V exactly.
double visibility_noise(double raw_range, double visibility, double sigma0,
                        Rng& rng);

// Clamped (and optionally perturbed) ranges through the camera's angular
// grid, before normalization. Values lie in [0, visibility].
DepthImage render_depth_raw(const Scene& scene, const Pose& pose,
                            const CameraModel& camera, int height, int width,
                            const DepthNoiseConfig& noise, Rng& rng);

// Simulated stand-in for monocular relative depth: raycast through the
// camera's angular grid, clamp to visibility, perturb, then min-max
// normalize per frame. A frame with no structure (max == min) maps to
// all 1.0.
DepthImage render_depth(const Scene& scene, const Pose& pose,
                        const CameraModel& camera, int height, int width,
                        const DepthNoiseConfig& noise, Rng& rng);

SbesReading sbes_measure(const Scene& scene, const Pose& pose,
                         const SbesConfig& cfg, bool noise_enabled, Rng& rng);

LocalizationFix localize(const Pose& pose, const LocalizationNoiseConfig& cfg,
                         Rng& rng);

}  // namespace uwnav

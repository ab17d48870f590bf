#include "uwnav/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uwnav {

std::string DepthImage::to_pgm() const {
  std::ostringstream os;
  os << "P2\n" << width << " " << height << "\n255\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      os << static_cast<int>(std::lround(at(r, c) * 255.0));
      os << (c + 1 == width ? '\n' : ' ');
    }
  }
  return os.str();
}

double visibility_noise(double raw_range, double visibility, double sigma0,
                        Rng& rng) {
  if (raw_range >= visibility) return visibility;
  const double sigma = sigma0 * raw_range / visibility;
  double r = raw_range;
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    r += n(rng);
  }
  return std::clamp(r, 0.0, visibility);
}

DepthImage render_depth_raw(const Scene& scene, const Pose& pose,
                            const CameraModel& camera, int height, int width,
                            const DepthNoiseConfig& noise, Rng& rng) {
  DepthImage img;
  img.height = height;
  img.width = width;
  img.values.resize(static_cast<size_t>(height) * width);

  const double V = scene.visibility;
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  for (int r = 0; r < height; ++r) {
    // Pixel centers across the FOV; row 0 looks up (negative pitch ->
    // smaller z because z is down).
    const double pitch = camera.vfov * ((r + 0.5) / height - 0.5);
    for (int c = 0; c < width; ++c) {
      const double az = camera.hfov * ((c + 0.5) / width - 0.5);
      const double cp = std::cos(pitch), sp = std::sin(pitch);
      // Camera frame: x forward, azimuth to the left/right, pitch in z.
      Vec3 dir{cp * std::cos(az), cp * std::sin(az), sp};
      // Rotate into world by yaw.
      Vec3 wdir{cy * dir.x - sy * dir.y, sy * dir.x + cy * dir.y, dir.z};
      auto hit = ray_cast(scene, pose.position, wdir.normalized(), V);
      double range = hit ? std::min(*hit, V) : V;
      if (noise.enabled) range = visibility_noise(range, V, noise.sigma0, rng);
      img.at(r, c) = range;
    }
  }
  return img;
}

DepthImage render_depth(const Scene& scene, const Pose& pose,
                        const CameraModel& camera, int height, int width,
                        const DepthNoiseConfig& noise, Rng& rng) {
  DepthImage img = render_depth_raw(scene, pose, camera, height, width, noise, rng);
  const auto [lo_it, hi_it] =
      std::minmax_element(img.values.begin(), img.values.end());
  const double lo = *lo_it, hi = *hi_it;
  // Per-frame affine normalization; degenerate frames map to all 1.0.
  if (hi - lo < 1e-12) {
    std::fill(img.values.begin(), img.values.end(), 1.0);
  } else {
    for (auto& v : img.values) v = (v - lo) / (hi - lo);
  }
  return img;
}

SbesReading sbes_measure(const Scene& scene, const Pose& pose,
                         const SbesConfig& cfg, bool noise_enabled, Rng& rng) {
  SbesReading out;
  out.max_range = cfg.max_range;
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double half = cfg.beam_width / 2.0;
  double best = cfg.max_range;
  // Central ray plus rings of rays on the cone; a small fixed pattern is
  // enough to catch off-axis returns inside the beam.
  const int n = std::max(cfg.n_rays, 1);
  for (int i = 0; i < n; ++i) {
    double polar, azim;
    if (i == 0) {
      polar = 0.0;
      azim = 0.0;
    } else {
      const int ring = 1 + (i - 1) / 8;
      const int rings = 1 + (n - 2) / 8;
      polar = half * ring / rings;
      azim = 2.0 * M_PI * ((i - 1) % 8) / 8.0;
    }
    const double cp = std::cos(polar), spl = std::sin(polar);
    Vec3 dir{cp, spl * std::cos(azim), spl * std::sin(azim)};
    Vec3 wdir{cy * dir.x - sy * dir.y, sy * dir.x + cy * dir.y, dir.z};
    auto hit = ray_cast(scene, pose.position, wdir.normalized(), cfg.max_range);
    if (hit) best = std::min(best, *hit);
  }
  if (noise_enabled && cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    best += noise(rng);
  }
  out.range = std::clamp(best, 1e-6, cfg.max_range);
  return out;
}

LocalizationFix localize(const Pose& pose, const LocalizationNoiseConfig& cfg,
                         Rng& rng) {
  LocalizationFix fix;
  fix.position = pose.position;
  fix.yaw = pose.yaw;
  if (cfg.sigma_xy > 0.0) {
    std::normal_distribution<double> n(0.0, cfg.sigma_xy);
    fix.position.x += n(rng);
    fix.position.y += n(rng);
  }
  if (cfg.sigma_z > 0.0) {
    std::normal_distribution<double> n(0.0, cfg.sigma_z);
    fix.position.z += n(rng);
  }
  if (cfg.sigma_yaw > 0.0) {
    std::normal_distribution<double> n(0.0, cfg.sigma_yaw);
    fix.yaw = wrap_angle(fix.yaw + n(rng));
  }
  return fix;
}

}  // namespace uwnav

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwnav/geometry.hpp"

namespace uwnav {

struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ObstacleShape { Box, Cylinder, Sphere };

// Convex primitive. Box is axis-aligned; cylinder has a vertical axis.
struct Obstacle {
  ObstacleShape shape = ObstacleShape::Box;
  Vec3 center;
  Vec3 half_extents;  // box only
  double radius = 0.0;      // cylinder/sphere
  double half_height = 0.0; // cylinder only

  double z_min() const;
  double z_max() const;
  // Distance from a horizontal point to the obstacle's xy footprint
  // (0 when inside). Spheres and cylinders use their footprint circle.
  double footprint_distance(double px, double py) const;
  // Euclidean distance from a point to the solid (0 when inside).
  double surface_distance(const Vec3& p) const;
  bool contains(const Vec3& p) const { return surface_distance(p) == 0.0; }
};

struct Aabb {
  Vec3 min;
  Vec3 max;
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
};

struct Scene {
  Aabb bounds;
  double surface_depth = 0.0;  // z of the water surface
  double visibility = 20.0;    // meters
  std::vector<Obstacle> obstacles;

  std::string to_json() const;
  static Scene from_json(const std::string& text);
};

struct Mission {
  Pose start;
  Vec3 goal;
  double time_limit = 200.0;  // seconds
};

enum class SceneKind { A, B, Custom };

// Parameters for SceneKind::Custom generation (also used by the Bug2 test
// suite, which needs well separated convex obstacles).
struct CustomSceneSpec {
  Aabb bounds{{-10, -10, 0}, {10, 10, 8}};
  int min_obstacles = 0;
  int max_obstacles = 0;
  double min_separation = 0.0;  // surface-to-surface gap between obstacles
  double max_radius = 1.5;
};

inline constexpr double kClearanceCap = 10.0;

// Smallest t in (0, max_range] where the ray hits an obstacle surface, the
// scene boundary, or the water surface. A ray starting inside an obstacle
// reports 0.
std::optional<double> ray_cast(const Scene& scene, const Vec3& origin,
                               const Vec3& direction, double max_range);

// Minimum xy-plane distance from p to any obstacle whose vertical span
// overlaps [p.z - dv_window, p.z + dv_window]; capped at kClearanceCap.
double horizontal_clearance(const Scene& scene, const Vec3& p,
                            double dv_window = 0.3);

struct VerticalClearance {
  double d_v = kClearanceCap;    // to obstacle surfaces directly above/below
  double d_sur = kClearanceCap;  // to the water surface
};

VerticalClearance vertical_clearance(const Scene& scene, const Vec3& p,
                                     double dh_window = 0.5);

// True iff the sphere (p, robot_radius) touches any obstacle, the boundary,
// or rises above the surface (closed condition).
bool in_collision(const Scene& scene, const Vec3& p, double robot_radius);

Scene generate_scene(SceneKind kind, uint64_t seed,
                     const CustomSceneSpec* custom = nullptr);

}  // namespace uwnav
